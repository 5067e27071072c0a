"""Curve-crossing location shared by Binder and logical-error analyses."""

from __future__ import annotations

import itertools

import numpy as np


class NoCrossingError(ValueError):
    """Curves do not cross inside the supplied grid."""


def curve_crossing(x, ya, yb, window: int = 2) -> float | None:
    """Crossing point of two curves sampled on the same grid.

    The bracketing interval is the sign change of ``ya - yb`` with the
    largest jump in the difference (spurious noise crossings in flat
    regions have small jumps).  Each curve is then fitted by a straight line
    over ``window`` grid points on either side of the bracket and the two
    lines are intersected.  Returns ``None`` if there is no sign change.
    """
    x = np.asarray(x, dtype=float)
    ya = np.asarray(ya, dtype=float)
    yb = np.asarray(yb, dtype=float)
    d = ya - yb
    ok = np.isfinite(d)
    cand = [k for k in range(len(x) - 1) if ok[k] and ok[k + 1] and d[k] * d[k + 1] < 0]
    if not cand:
        return None
    k = max(cand, key=lambda i: abs(d[i + 1] - d[i]))
    lo, hi = max(0, k - window + 1), min(len(x), k + window + 1)
    sel = np.arange(lo, hi)
    sel = sel[ok[sel]]
    fallback = x[k] + (x[k + 1] - x[k]) * d[k] / (d[k] - d[k + 1])
    if len(sel) < 2:
        return float(fallback)
    sa, ia = np.polyfit(x[sel], ya[sel], 1)
    sb, ib = np.polyfit(x[sel], yb[sel], 1)
    if sa == sb:
        return float(fallback)
    xc = (ib - ia) / (sa - sb)
    if not (x[k] - (x[k + 1] - x[k]) <= xc <= x[k + 1] + (x[k + 1] - x[k])):
        return float(fallback)
    return float(xc)


def mean_pair_crossing(x, curves: dict, window: int = 2) -> tuple[float, dict]:
    """Mean of all pairwise crossings among ``curves`` (label -> values)."""
    pairs = {}
    for a, b in itertools.combinations(sorted(curves), 2):
        c = curve_crossing(x, curves[a], curves[b], window)
        if c is not None:
            pairs[(a, b)] = c
    if not pairs:
        raise NoCrossingError("no pair of curves crosses inside the grid")
    return float(np.mean(list(pairs.values()))), pairs
