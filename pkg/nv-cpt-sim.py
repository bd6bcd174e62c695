'''Command line interface for the NV-center CPT simulator'''

import sys

from utils.cli import main

if __name__ == '__main__':
    sys.exit(main())
