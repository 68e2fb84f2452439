"""Pick the kernel implementation at import time.

Set ``DIVFRONTIER_BACKEND=python`` to force the NumPy fallback even when the
compiled extension is importable.
"""

import logging
import os

logger = logging.getLogger(__name__)

_forced = os.environ.get("DIVFRONTIER_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        logger.debug("compiled kernels unavailable; using NumPy fallback")
        from . import _kernels_py as kernels
        BACKEND = "python"

assign_labels = kernels.assign_labels
update_centers = kernels.update_centers
knn_indices = kernels.knn_indices

__all__ = ["BACKEND", "assign_labels", "update_centers", "knn_indices"]
