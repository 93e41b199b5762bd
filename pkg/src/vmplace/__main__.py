import sys

from vmplace.cli import main

sys.exit(main())
