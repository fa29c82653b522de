import sys

from afrelay.cli import main

sys.exit(main())
