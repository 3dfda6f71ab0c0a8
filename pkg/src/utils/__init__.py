#!/usr/bin/env python3
# SaddleKit - Utilities
