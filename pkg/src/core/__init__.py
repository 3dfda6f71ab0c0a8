#!/usr/bin/env python3
# SaddleKit - Core Engines
