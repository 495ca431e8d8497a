import sys

from aklt_hqmm.cli import main

sys.exit(main())
