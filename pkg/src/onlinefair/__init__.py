"""Online fair division mechanisms for food banks and deceased-organ waiting lists."""

__version__ = "0.1.0"
