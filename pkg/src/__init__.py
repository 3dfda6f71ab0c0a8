#!/usr/bin/env python3
# SaddleKit

__version__ = "1.0.0"
