"""Hot kernels, compiled when available.

The Cython extension ``_ckernels`` is preferred. Setting
``RANSOMFLOW_PURE_PYTHON=1`` forces the pure-Python fallback, which is
also used automatically when the extension was not built.
"""
import os

BACKEND = "python"

if os.environ.get("RANSOMFLOW_PURE_PYTHON", "") not in ("", "0"):
    from ._fallback import best_threshold, decode_frame, mlp_train, scan_records
else:
    try:
        from ._ckernels import best_threshold, decode_frame, mlp_train, scan_records
        BACKEND = "cython"
    except ImportError:
        from ._fallback import best_threshold, decode_frame, mlp_train, scan_records

__all__ = ["BACKEND", "best_threshold", "decode_frame", "mlp_train", "scan_records"]
