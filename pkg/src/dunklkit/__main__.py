import sys

from dunklkit.cli import main

sys.exit(main())
