"""
Launcher for the cross-domain anomaly analyzer command line.
"""

import multiprocessing
import sys

from cross_domain_analyzer.cli import main


if __name__ == "__main__":
    if multiprocessing.current_process().name == "MainProcess":
        multiprocessing.freeze_support()
        sys.exit(main())
