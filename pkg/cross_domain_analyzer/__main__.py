import sys

from cross_domain_analyzer.cli import main

sys.exit(main())
