"""Input validation helpers shared by the numerical modules."""
from __future__ import annotations

import warnings

import numpy as np

from .exceptions import DimensionMismatch, NotInCutsetSpace

#: Absolute tolerance for "x sums to zero" checks.
MEAN_TOL = 1e-9


class MeanRemovedWarning(UserWarning):
    """Issued when a node vector had a non-negligible mean projected away."""


def check_vector(x, size: int, name: str = "x", dtype=float) -> np.ndarray:
    """Return ``x`` as a 1-D array of length ``size`` or raise DimensionMismatch."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1 or arr.shape[0] != size:
        raise DimensionMismatch(f"{name} must have shape ({size},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def project_mean(x: np.ndarray, name: str = "omega", tol: float = MEAN_TOL) -> np.ndarray:
    """Project a node vector onto the zero-sum subspace.

    A :class:`MeanRemovedWarning` is emitted when the removed component
    ``|1^T x|`` exceeds ``tol``.
    """
    total = float(np.sum(x))
    if abs(total) > tol:
        warnings.warn(
            f"{name} is not balanced (sum={total:.3e}); projecting onto the zero-sum subspace",
            MeanRemovedWarning,
            stacklevel=3,
        )
    return x - total / x.shape[0]


def check_in_cutset_space(eta: np.ndarray, P: np.ndarray, rel_tol: float = 1e-9,
                          abs_tol: float = 1e-12, name: str = "eta") -> None:
    """Raise NotInCutsetSpace unless ``eta`` is (numerically) fixed by ``P``."""
    scale = float(np.max(np.abs(eta))) if eta.size else 0.0
    resid = float(np.max(np.abs(eta - P @ eta))) if eta.size else 0.0
    if resid > max(rel_tol * scale, abs_tol):
        raise NotInCutsetSpace(
            f"{name} is not in Img(B^T): ||(I-P){name}||_inf = {resid:.3e} "
            f"(||{name}||_inf = {scale:.3e})"
        )
