import sys

from dhflow.cli import main

sys.exit(main())
