#!/usr/bin/env python3
# SaddleKit - Main Entry Point

import os
import sys
import traceback
from dotenv import load_dotenv

# Add parent directory to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.append(project_root)

# Import SaddleKit modules
from src.cli import run
from src.utils.logger import configure_logging, get_logger


def setup_logging():
    """Set up logging configuration from the environment and any .env file."""
    load_dotenv()
    configure_logging()


def global_exception_hook(exctype, value, tb):
    """Global exception handler to log uncaught exceptions."""
    error_msg = ''.join(traceback.format_exception(exctype, value, tb))
    get_logger("main").critical(f"Uncaught exception:\n{error_msg}")
    # Call the default excepthook
    sys.__excepthook__(exctype, value, tb)


def main(argv=None):
    """Main entry point."""
    # Set up logging
    setup_logging()

    # Set global exception hook
    sys.excepthook = global_exception_hook

    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
