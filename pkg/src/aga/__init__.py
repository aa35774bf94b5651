"""Almost representations of finitely presented groups by unitary matrices."""

__version__ = "0.1.0"
