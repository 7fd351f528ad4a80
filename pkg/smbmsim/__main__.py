import sys

from smbmsim.cli import main

sys.exit(main())
