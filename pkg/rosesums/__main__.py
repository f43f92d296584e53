"""Allow ``python -m rosesums``."""

import sys

from rosesums.app import run

sys.exit(run())
