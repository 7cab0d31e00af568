"""Module entry point for ``python -m p2p_topk``."""

import sys

from p2p_topk.cli import main

if __name__ == "__main__":
    sys.exit(main())
