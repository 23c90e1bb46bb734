#!/usr/bin/env python3
"""
Mammographic Mass Severity Toolkit
Command-line launcher: puts src/ on the import path and hands over to cli.main
"""

import sys
from pathlib import Path

# Add src directory to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
