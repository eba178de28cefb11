"""Allow `python -m daflow` as an alternative to the installed script."""

from .cli import entry

entry()
