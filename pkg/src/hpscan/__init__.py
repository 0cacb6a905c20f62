"""hpscan - Ethereum honeypot detection from transaction behaviour"""

__version__ = "0.1.0"
