import sys

from qwrev.cli import main

sys.exit(main())
