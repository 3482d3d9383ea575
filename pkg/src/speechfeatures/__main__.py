"""Run the speech-features command line tool as `python -m speechfeatures`."""

import sys

from .cli import main

sys.exit(main())
