"""Allow ``python -m svie`` to behave exactly like the ``svie`` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
