"""Strong-field single ionization toolkit."""
__version__ = "0.1.0"
