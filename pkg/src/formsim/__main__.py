import sys

from formsim.cli import main

sys.exit(main())
