"""
Core application functionality
"""
