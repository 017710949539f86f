"""Goal-oriented channel access testbed for LQG loops sharing lossy channels."""
__version__ = "0.1.0"
