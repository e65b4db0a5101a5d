import sys

from fixkit.cli import main

sys.exit(main())
