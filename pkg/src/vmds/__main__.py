import sys

from vmds.cli import main

sys.exit(main())
