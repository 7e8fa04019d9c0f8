"""Entrypoint for python -m ttvision."""

from .cli import main

if __name__ == "__main__":
    main()
