import sys

from isomotor.cli import main

sys.exit(main())
