#!/usr/bin/env python3
"""Text Effects - A CLI tool for transferring text effects onto new glyphs."""

import sys

from texfx import main

if __name__ == "__main__":
    sys.exit(main())
