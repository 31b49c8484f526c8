"""Module entry point for ``python -m toricmirror``."""

import sys

from .cli import main

sys.exit(main())
