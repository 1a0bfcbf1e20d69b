"""Local analysis of singular holomorphic vector fields."""
__version__ = "0.1.0"
