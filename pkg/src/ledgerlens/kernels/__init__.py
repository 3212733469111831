"""Hot loops of the metrics and recommender stages.

The compiled extension is used when it was built; otherwise, or when
``LEDGERLENS_PURE_PYTHON=1`` is set, the pure-Python twins are used.
``BACKEND`` names the active implementation.
"""

import os

from . import _pure

try:
    if os.environ.get("LEDGERLENS_PURE_PYTHON") == "1":
        raise ImportError("pure Python forced")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pure
    BACKEND = "python"

correlated_pairs = _impl.correlated_pairs
pair_flags = _impl.pair_flags

__all__ = ["BACKEND", "correlated_pairs", "pair_flags"]
