"""Phase-covariant cloning network, its NMR compilation, and BB84 eavesdropping."""

from . import bb84, cloner, nmr, qcore

__all__ = ["bb84", "cloner", "nmr", "qcore"]
__version__ = "0.1.0"
