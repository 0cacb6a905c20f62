import sys

from src.hpscan.main import main

if __name__ == "__main__":
    sys.exit(main())
