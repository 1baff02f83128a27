"""Kernel backend selection: numba-jitted hot loops with a pure-numpy fallback.

The three per-pixel kernels that dominate batch runtime (mask vote
histograms, the strategy-3 fusion pass, confusion-matrix accumulation)
exist in two functionally identical variants. Which one runs is chosen
once at import from the ``MASKFUSE_BACKEND`` environment variable:

    MASKFUSE_BACKEND=auto    use numba when importable, else numpy (default)
    MASKFUSE_BACKEND=numba   require numba, fail loudly if missing
    MASKFUSE_BACKEND=numpy   pure numpy, no JIT

``use_backend()`` overrides the choice for a scope (the ``bench`` CLI
uses it to time both variants in one process).
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from types import SimpleNamespace

import numpy as np

ENV_VAR = "MASKFUSE_BACKEND"

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# numpy variants
# ---------------------------------------------------------------------------

def _masked_hist_numpy(labels_flat, indices):
    return np.bincount(labels_flat[indices], minlength=256).astype(np.int64)


def _fuse3_pass_numpy(y1_flat, uda_flat, conf_flat, sim, beta):
    take = (sim[uda_flat, y1_flat] != 0) & (conf_flat > beta)
    return np.where(take, uda_flat, y1_flat)


def _confusion_pass_numpy(gt_flat, pred_flat, row_of, col_of, n_rows, n_cols):
    rows = row_of[gt_flat]
    valid = rows >= 0
    keys = rows[valid] * n_cols + col_of[pred_flat[valid]]
    flat = np.bincount(keys, minlength=n_rows * n_cols)
    return flat.reshape(n_rows, n_cols).astype(np.int64)


# ---------------------------------------------------------------------------
# numba variants (same contracts, scalar loops)
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _masked_hist_numba(labels_flat, indices):
        out = np.zeros(256, np.int64)
        for k in range(indices.size):
            out[labels_flat[indices[k]]] += 1
        return out

    @njit(cache=True)
    def _fuse3_pass_numba(y1_flat, uda_flat, conf_flat, sim, beta):
        out = np.empty_like(y1_flat)
        for p in range(y1_flat.size):
            i = uda_flat[p]
            j = y1_flat[p]
            if sim[i, j] != 0 and conf_flat[p] > beta:
                out[p] = i
            else:
                out[p] = j
        return out

    @njit(cache=True)
    def _confusion_pass_numba(gt_flat, pred_flat, row_of, col_of, n_rows, n_cols):
        out = np.zeros((n_rows, n_cols), np.int64)
        for p in range(gt_flat.size):
            r = row_of[gt_flat[p]]
            if r >= 0:
                out[r, col_of[pred_flat[p]]] += 1
        return out


_IMPLS = {
    "numpy": SimpleNamespace(
        masked_hist=_masked_hist_numpy,
        fuse3_pass=_fuse3_pass_numpy,
        confusion_pass=_confusion_pass_numpy,
    )
}
if HAS_NUMBA:
    _IMPLS["numba"] = SimpleNamespace(
        masked_hist=_masked_hist_numba,
        fuse3_pass=_fuse3_pass_numba,
        confusion_pass=_confusion_pass_numba,
    )


def available_backends():
    """Names of the usable kernel sets, jitted first."""
    return ("numba", "numpy") if HAS_NUMBA else ("numpy",)


def _resolve(requested: str) -> str:
    requested = requested.lower()
    if requested == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        if not HAS_NUMBA:
            raise RuntimeError(f"{ENV_VAR}=numba but numba is not importable")
        return "numba"
    raise ValueError(f"{ENV_VAR} must be auto, numba, or numpy, not {requested!r}")


_active = _resolve(os.environ.get(ENV_VAR, "auto"))


def active_backend() -> str:
    """Name of the kernel set currently in use ("numba" or "numpy")."""
    return _active


def kernels(name: str | None = None) -> SimpleNamespace:
    """Kernel namespace for ``name``, or the active one when omitted."""
    if name is None:
        name = _active
    try:
        return _IMPLS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}") from None


@contextmanager
def use_backend(name: str):
    """Temporarily switch the active kernel set (not thread-safe)."""
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    previous = _active
    _active = name
    try:
        yield
    finally:
        _active = previous
