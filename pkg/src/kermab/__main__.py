import sys

from kermab.cli import main

sys.exit(main())
