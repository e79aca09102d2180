import sys

from fsac.cli import main

sys.exit(main())
