import sys

from gwnary.cli import main

sys.exit(main())
