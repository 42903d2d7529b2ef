import sys

from detrec.cli import main

sys.exit(main())
