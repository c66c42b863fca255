"""Confidence radii and the finite-n decay test."""

from __future__ import annotations

import math
from typing import Sequence

CONFIDENCE_DELTA = 1e-6


def hoeffding_radius(trials: int) -> float:
    """``sqrt(ln(2/δ) / 2T)`` with ``δ = 1e-6``."""
    if trials <= 0:
        return math.inf
    return math.sqrt(math.log(2 / CONFIDENCE_DELTA) / (2 * trials))


def ladder_thresholds(values: Sequence[float], radii: Sequence[float], final_tol: float,
                      extra: float = 0.0) -> list[float]:
    """Per-rung thresholds for "small at the top and not increasing".

    Rung ``j > 0`` may not exceed rung ``j-1`` by more than three combined
    radii. The last rung must also sit below ``final_tol + extra + 3·radius``.
    The first rung has no bound of its own.
    """
    out = []
    for j, r in enumerate(radii):
        bound = math.inf
        if j:
            bound = values[j - 1] + 3 * math.hypot(radii[j - 1], r)
        if j == len(radii) - 1:
            bound = min(bound, final_tol + extra + 3 * r)
        out.append(bound)
    return out


def ladder_passes(values: Sequence[float], radii: Sequence[float], final_tol: float, extra: float = 0.0) -> list[bool]:
    return [v <= t for v, t in zip(values, ladder_thresholds(values, radii, final_tol, extra))]


def _as_probs(d) -> dict:
    if hasattr(d, "probabilities"):
        return d.probabilities()
    return dict(d)


def l1_distance(p, q):
    """Sum of absolute differences over the union of supports.

    Accepts exact mappings (outcome -> probability) or empirical
    distributions. Exact inputs give an exact ``Fraction``.
    """
    pp, qq = _as_probs(p), _as_probs(q)
    keys = sorted(set(pp) | set(qq), key=repr)
    return sum((abs(pp.get(k, 0) - qq.get(k, 0)) for k in keys), 0)
