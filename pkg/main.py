"""
Ruelle Resonance Lab - Main Entry Point

Numerical laboratory for Ruelle resonances of partially expanding maps on the torus.
"""
import sys
from pathlib import Path

# Add current directory to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from cli import main

if __name__ == "__main__":
    sys.exit(main())
