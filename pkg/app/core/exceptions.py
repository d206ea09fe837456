"""
Custom exceptions for the application

Every exception carries the process exit code the CLI maps it to:
2 for usage errors, 1 for domain errors.
"""
from typing import Optional

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


class BaseAppException(Exception):
    """Base exception for all application exceptions"""

    def __init__(
        self,
        detail: str = "Internal error",
        exit_code: int = EXIT_DOMAIN_ERROR
    ):
        super().__init__(detail)
        self.detail = detail
        self.exit_code = exit_code


class NotFoundException(BaseAppException):
    """Exception raised when an input file is missing"""

    def __init__(self, resource: str = "File", path: Optional[str] = None):
        detail = f"{resource} not found"
        if path:
            detail = f"{resource} '{path}' not found"
        super().__init__(detail=detail)


class PreconditionException(BaseAppException, ValueError):
    """Exception raised when an operation's input violates its precondition"""

    def __init__(self, detail: str = "Precondition violated"):
        super().__init__(detail=detail)


class ShapeMismatchException(PreconditionException):
    """Exception raised when grid or tensor dimensions disagree"""

    def __init__(self, detail: str = "Dimension mismatch"):
        super().__init__(detail=detail)


class ImageFormatException(BaseAppException):
    """Exception raised for malformed image files"""

    def __init__(self, detail: str = "Malformed image file", offset: Optional[int] = None):
        if offset is not None:
            detail = f"{detail} (at byte offset {offset})"
        super().__init__(detail=detail)
        self.offset = offset


class ImageDataException(BaseAppException):
    """Exception raised for non-finite or out-of-range pixel data"""

    def __init__(self, detail: str = "Invalid image data"):
        super().__init__(detail=detail)


class SceneConfigurationException(BaseAppException):
    """Exception raised when a synthetic scene cannot satisfy its constraints"""

    def __init__(self, detail: str = "Invalid scene configuration"):
        super().__init__(detail=detail)


class DivergenceException(BaseAppException):
    """Exception raised when an optimization produces a non-finite loss"""

    def __init__(self, step: int, detail: str = "Loss became non-finite"):
        super().__init__(detail=f"{detail} at step {step}")
        self.step = step


class GradientCheckException(BaseAppException):
    """Exception raised when analytic and numerical gradients disagree"""

    def __init__(self, detail: str = "Gradient check failed"):
        super().__init__(detail=detail)


class FileAccessException(BaseAppException):
    """Exception raised when a file cannot be read or written"""

    def __init__(self, path: str, reason: str = "I/O error"):
        super().__init__(detail=f"Cannot access '{path}': {reason}")
        self.path = path
