import sys

from bubbly.cli import main

sys.exit(main())
