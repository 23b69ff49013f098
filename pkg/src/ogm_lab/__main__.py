import sys

from .benchcli.main import main

sys.exit(main())
