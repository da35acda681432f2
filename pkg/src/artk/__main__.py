import sys

from artk.cli import main

sys.exit(main())
