import sys

from singularlab.cli import main

sys.exit(main())
