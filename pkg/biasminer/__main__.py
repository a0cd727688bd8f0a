"""Allow `python -m biasminer`"""

import sys

from biasminer.cli import main

sys.exit(main())
