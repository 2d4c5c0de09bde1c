"""Closed-form proximal operators for the l2,1 and l1 norms."""

from __future__ import annotations

import numpy as np


def prox_l21(v: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise group soft thresholding.

    Solves ``argmin_u 0.5 * ||u - v||_F^2 + tau * ||u||_{2,1}``: each row is
    scaled by ``max(0, 1 - tau / ||row||)``, and rows with norm at most ``tau``
    (including all-zero rows) become zero.
    """
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    v = np.asarray(v, dtype=float)
    if tau == 0:
        return v.copy()
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    scale = np.zeros_like(norms)
    active = norms > tau
    scale[active] = 1.0 - tau / norms[active]
    return v * scale


def prox_l1(v: np.ndarray, tau: float) -> np.ndarray:
    """Elementwise soft thresholding ``sign(v) * max(0, |v| - tau)``."""
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)
