import sys

from relind.cli import main

sys.exit(main())
