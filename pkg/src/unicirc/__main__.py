import sys

from unicirc.cli import main

sys.exit(main())
