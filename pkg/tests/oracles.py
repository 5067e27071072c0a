"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np


def enumerate_ising(graph, beta: float, J: float = 1.0) -> dict:
    """Exact Boltzmann averages by listing all 2^n configurations."""
    n = graph.n_sites
    if n > 20:
        raise ValueError("enumeration limited to 20 sites")
    states = np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.int64)
    b = graph.bonds
    E = -J * (states[:, b[:, 0]] * states[:, b[:, 1]]).sum(axis=1)
    m = states.sum(axis=1) / n
    w = np.exp(-beta * (E - E.min()))
    w /= w.sum()
    levels, inv = np.unique(E, return_inverse=True)
    return {
        "E": float(w @ E),
        "E2": float(w @ E**2),
        "abs_m": float(w @ np.abs(m)),
        "m2": float(w @ m**2),
        "m4": float(w @ m**4),
        "levels": levels,
        "level_probs": np.bincount(inv, weights=w),
        "states": states,
        "weights": w,
    }


def min_weight_perfect_matching_bruteforce(dist: np.ndarray) -> tuple[float, list]:
    """Exhaustive minimum over all perfect matchings of a symmetric distance matrix."""
    n = len(dist)
    if n % 2:
        raise ValueError("odd number of nodes")
    best = [np.inf, None]

    def rec(remaining, acc, pairs):
        if acc >= best[0]:
            return
        if not remaining:
            best[0], best[1] = acc, list(pairs)
            return
        a = remaining[0]
        for k in range(1, len(remaining)):
            b = remaining[k]
            rec(remaining[1:k] + remaining[k + 1 :], acc + dist[a, b], pairs + [(a, b)])

    rec(list(range(n)), 0.0, [])
    return float(best[0]), best[1]


_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def _kron_string(ops: list[str]) -> np.ndarray:
    out = np.array([[1.0]])
    for o in ops:
        out = np.kron(out, _PAULI[o])
    return out


def chain_stabilizer(n: int, i: int) -> np.ndarray:
    """``K_i = Z_{i-1} X_i Z_{i+1}`` on an open chain of ``n`` qubits (1-based ``i``)."""
    ops = ["I"] * n
    ops[i - 1] = "X"
    if i > 1:
        ops[i - 2] = "Z"
    if i < n:
        ops[i] = "Z"
    return _kron_string(ops)


def fch_fidelity_density_matrix(n: int, beta: float, set_a, set_b, J: float = 1.0) -> float:
    """``Tr[(I + K(A))/2 (I + K(B))/2 rho]`` for the thermal state of ``-J sum K_i`` on ``n`` qubits.

    Builds the full ``2^n x 2^n`` Gibbs state by diagonalising the Hamiltonian.
    """
    if n > 10:
        raise ValueError("density-matrix oracle limited to 10 qubits")
    dim = 2**n
    K = [chain_stabilizer(n, i) for i in range(1, n + 1)]
    H = -J * sum(K)
    w, v = np.linalg.eigh(H)
    g = np.exp(-beta * (w - w.min()))
    rho = (v * (g / g.sum())) @ v.T

    def prod(s):
        P = np.eye(dim)
        for i in s:
            P = P @ K[i - 1]
        return P

    I = np.eye(dim)
    proj = (I + prod(set_a)) / 2 @ ((I + prod(set_b)) / 2)
    return float(np.trace(proj @ rho))
