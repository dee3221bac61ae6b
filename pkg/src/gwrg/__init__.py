"""Group-walk random graphs on balls of infinite host graphs."""

__version__ = "0.1.0"
