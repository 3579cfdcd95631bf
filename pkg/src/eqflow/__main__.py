"""Allow ``python -m eqflow`` to invoke the benchmark CLI."""

import sys

from .bench import main

if __name__ == "__main__":
    sys.exit(main())
