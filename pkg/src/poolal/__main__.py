import sys

from poolal.cli import main

sys.exit(main())
