"""Minimum-weight perfect matching on RHG syndromes and homology verdicts.

Primal and dual defects are matched independently.  The matching itself is
solved exactly by PyMatching's blossom implementation on the periodic cube
graph (unit weight per face), whose shortest-path metric is the periodic L1
distance between cube centres.  Each matched pair is then joined by a fixed
shortest path: x first, then y, then z, going in the + direction when both
ways round the torus are equally short.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import pymatching
from numba import njit

from ..lattice import RhgComplex, build_rhg, winding_bits
from .chains import ErrorChain, Syndrome, extract_syndrome


class OddSyndromeError(ValueError):
    """A sector has an odd number of defects and cannot be perfectly matched."""


def cube_grid(complex: RhgComplex, sector: str) -> np.ndarray:
    """Integer grid coordinates ``0..N-1`` of primal or dual cubes."""
    coords = complex.primal_cube_coords if sector == "primal" else complex.dual_cube_coords
    return coords // 2


def periodic_distance(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """Periodic L1 distance between grid points (broadcasting)."""
    d = np.abs(np.asarray(a) - np.asarray(b)) % N
    return np.minimum(d, N - d).sum(axis=-1)


def distance_matrix(complex: RhgComplex, sector: str, defects) -> np.ndarray:
    g = cube_grid(complex, sector)[np.asarray(defects, dtype=np.int64)]
    return periodic_distance(g[:, None, :], g[None, :, :], complex.N)


@lru_cache(maxsize=32)
def _matching_graph(N: int, sector: str) -> pymatching.Matching:
    cx = build_rhg(N)
    ends = cx.face_cubes if sector == "primal" else cx.edge_dual_cubes
    m = pymatching.Matching()
    for q, (a, b) in enumerate(ends):
        m.add_edge(int(a), int(b), fault_ids=q, weight=1.0, merge_strategy="smallest-weight")
    return m


def match_defects(complex: RhgComplex, sector: str, defects) -> np.ndarray:
    """Exact minimum-weight perfect matching; returns ``(k, 2)`` cube index pairs."""
    defects = np.asarray(defects, dtype=np.int64)
    if len(defects) % 2:
        raise OddSyndromeError(f"{sector} sector has {len(defects)} defects")
    if len(defects) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    syn = np.zeros(complex.n_cubes, dtype=np.uint8)
    syn[defects] = 1
    pairs = _matching_graph(complex.N, sector).decode_to_matched_dets_array(syn)
    pairs = np.sort(np.asarray(pairs, dtype=np.int64), axis=1)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def matching_weight(complex: RhgComplex, sector: str, pairs) -> int:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    g = cube_grid(complex, sector)
    return int(periodic_distance(g[pairs[:, 0]], g[pairs[:, 1]], complex.N).sum())


@njit(cache=True)
def _route(out, grid_a, grid_b, N, offset, site_id):
    # toggles the qubits crossed by the axis-ordered shortest path of each pair;
    # cube centre along an axis is 2*g + offset, the crossed qubit sits at +-1
    for p in range(grid_a.shape[0]):
        c0 = 2 * grid_a[p, 0] + offset
        c1 = 2 * grid_a[p, 1] + offset
        c2 = 2 * grid_a[p, 2] + offset
        cur = np.array([c0, c1, c2])
        for ax in range(3):
            delta = (grid_b[p, ax] - grid_a[p, ax]) % N
            if delta == 0:
                continue
            if 2 * delta <= N:
                step, n = 1, delta
            else:
                step, n = -1, N - delta
            for _ in range(n):
                q = cur.copy()
                q[ax] = (q[ax] + step) % (2 * N)
                out[site_id[q[0], q[1], q[2]]] ^= True
                cur[ax] = (cur[ax] + 2 * step) % (2 * N)


def route_pairs(complex: RhgComplex, sector: str, pairs) -> np.ndarray:
    """Qubit mask (faces for primal, edges for dual) joining each matched pair."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = np.zeros(complex.n_faces if sector == "primal" else complex.n_edges, dtype=np.bool_)
    if len(pairs):
        g = cube_grid(complex, sector)
        _route(out, g[pairs[:, 0]], g[pairs[:, 1]], complex.N, 1 if sector == "primal" else 0, complex.site_id)
    return out


def mwpm_decode(complex: RhgComplex, syndrome: Syndrome) -> ErrorChain:
    """Correction chain whose boundary is ``syndrome``."""
    p_def, d_def = syndrome.defects()
    if len(p_def) % 2 or len(d_def) % 2:
        raise OddSyndromeError(f"odd defect count (primal {len(p_def)}, dual {len(d_def)})")
    return ErrorChain(
        route_pairs(complex, "primal", match_defects(complex, "primal", p_def)),
        route_pairs(complex, "dual", match_defects(complex, "dual", d_def)),
    )


def decode_verdict(complex: RhgComplex, actual: ErrorChain, correction: ErrorChain) -> bool:
    """True when ``actual + correction`` is homologically trivial in all six directions."""
    residual = actual ^ correction
    if not extract_syndrome(complex, residual).is_empty:
        raise ValueError("correction does not annihilate the syndrome of the actual chain")
    return not winding_bits(complex, residual.primal, residual.dual).any()


def logical_failure(complex: RhgComplex, actual: ErrorChain) -> bool:
    """Sample-and-decode convenience: MWPM-correct ``actual`` and report failure."""
    correction = mwpm_decode(complex, extract_syndrome(complex, actual))
    return not decode_verdict(complex, actual, correction)
