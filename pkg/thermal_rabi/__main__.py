import sys

from thermal_rabi.cli import main

if __name__ == '__main__':
    sys.exit(main())
