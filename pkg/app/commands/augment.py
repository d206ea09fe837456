"""
augment: seeded weather effects on a PPM image
"""
import argparse
from pathlib import Path

from app.commands.common import CommandOutput, existing_file, to_json
from app.core.config import settings
from app.core.exceptions import FileAccessException
from app.schemas.augment import WeatherConfig
from app.services.augment import augment
from app.utils.image_io import read_image, write_image


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("augment", help="Apply gated snow, flare, fog and rain")
    parser.add_argument("--input", required=True, help="Input PPM")
    parser.add_argument("--output", required=True, help="Output PPM")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--p", type=float, default=0.3, help="Probability of each effect")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> CommandOutput:
    cfg = WeatherConfig(p_each=args.p, seed=args.seed)
    input_path = existing_file(args.input)
    output_path = Path(args.output)
    if not output_path.parent.is_dir():
        raise FileAccessException(str(output_path), "parent directory does not exist")

    image = read_image(input_path, kind="ppm-color")
    result, record = augment(image, cfg)
    write_image(result, output_path, "ppm-color")
    return CommandOutput(
        stdout=to_json(record),
        config=cfg.model_dump(mode="json"),
        inputs=[input_path],
        seed=args.seed,
    )
