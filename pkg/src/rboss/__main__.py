import sys

from rboss.cli import main

sys.exit(main())
