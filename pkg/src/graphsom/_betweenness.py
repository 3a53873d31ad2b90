"""Betweenness kernel dispatch: compiled extension if built, else pure Python."""

try:
    from ._speedups import brandes_csr

    USING_COMPILED = True
except ImportError:  # extension not built on this install
    from ._betweenness_py import brandes_csr

    USING_COMPILED = False

__all__ = ["brandes_csr", "USING_COMPILED"]
