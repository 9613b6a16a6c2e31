"""Allow `python -m nilmkit`."""

from nilmkit.cli import main

if __name__ == "__main__":
    main()
