import sys

from mgcps.cli import main

sys.exit(main())
