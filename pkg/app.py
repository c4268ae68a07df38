"""
GRACE graph clustering
Main application entry point
"""
import sys

from grace.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
