import sys

from pyltm.cli import main

sys.exit(main())
