"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``LEAFWATER_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used. Both expose ``build_tree``,
``predict_ensemble`` and ``lasso_cd`` with identical results.
"""

import os

from . import _pykernels

_force_python = os.environ.get("LEAFWATER_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

build_tree = _impl.build_tree
predict_ensemble = _impl.predict_ensemble
lasso_cd = _impl.lasso_cd

python_backend = _pykernels


def compiled_backend():
    """The compiled module, or None when it is not available."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
