"""
Fractional KdV Solver
Command-line launcher for the periodic fractional KdV spectral solver
"""

import sys

from src.cli import main

if __name__ == '__main__':
    sys.exit(main())
