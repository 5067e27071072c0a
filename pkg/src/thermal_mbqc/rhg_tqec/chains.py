"""Error chains and syndromes on the RHG complex, with a plain-text fixture format.

Fixture format (one keyword per line, ``#`` starts a comment)::

    rhg-syndrome 1        # or: rhg-chain 1
    N 4
    primal 3 17           # sorted indices (cubes for syndromes, faces for chains)
    dual                  # may be empty
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..lattice import RhgComplex


@dataclass(eq=False)
class ErrorChain:
    """Z-error indicators: ``primal`` over face qubits, ``dual`` over edge qubits."""

    primal: np.ndarray
    dual: np.ndarray

    def __post_init__(self):
        self.primal = np.asarray(self.primal, dtype=bool)
        self.dual = np.asarray(self.dual, dtype=bool)
        if self.primal.shape != self.dual.shape:
            raise ValueError("primal and dual supports must have the same size")

    @classmethod
    def empty(cls, complex: RhgComplex) -> "ErrorChain":
        return cls(np.zeros(complex.n_faces, bool), np.zeros(complex.n_edges, bool))

    @classmethod
    def from_qubits(cls, complex: RhgComplex, errors) -> "ErrorChain":
        """Split a mask over the qubit graph (faces first, then edges)."""
        e = np.asarray(errors, dtype=bool)
        return cls(e[: complex.n_faces].copy(), e[complex.n_faces :].copy())

    @classmethod
    def from_indices(cls, complex: RhgComplex, primal=(), dual=()) -> "ErrorChain":
        c = cls.empty(complex)
        c.primal[np.asarray(primal, dtype=np.int64)] = True
        c.dual[np.asarray(dual, dtype=np.int64)] = True
        return c

    def __xor__(self, other: "ErrorChain") -> "ErrorChain":
        return ErrorChain(self.primal ^ other.primal, self.dual ^ other.dual)

    def __eq__(self, other) -> bool:
        return isinstance(other, ErrorChain) and np.array_equal(self.primal, other.primal) and np.array_equal(self.dual, other.dual)

    @property
    def weight(self) -> int:
        return int(self.primal.sum() + self.dual.sum())

    def qubits(self) -> np.ndarray:
        return np.concatenate([self.primal, self.dual])

    def indicators(self) -> tuple[np.ndarray, np.ndarray]:
        """``u = -1`` on the support, ``+1`` elsewhere, for faces and edges."""
        return 1 - 2 * self.primal.astype(np.int8), 1 - 2 * self.dual.astype(np.int8)


@dataclass(eq=False)
class Syndrome:
    """Parity-violating primal cubes and dual cubes."""

    primal: np.ndarray
    dual: np.ndarray

    def __post_init__(self):
        self.primal = np.asarray(self.primal, dtype=bool)
        self.dual = np.asarray(self.dual, dtype=bool)

    @classmethod
    def empty(cls, complex: RhgComplex) -> "Syndrome":
        return cls(np.zeros(complex.n_cubes, bool), np.zeros(complex.n_cubes, bool))

    def __xor__(self, other: "Syndrome") -> "Syndrome":
        return Syndrome(self.primal ^ other.primal, self.dual ^ other.dual)

    def __eq__(self, other) -> bool:
        return isinstance(other, Syndrome) and np.array_equal(self.primal, other.primal) and np.array_equal(self.dual, other.dual)

    @property
    def is_empty(self) -> bool:
        return not (self.primal.any() or self.dual.any())

    def defects(self) -> tuple[np.ndarray, np.ndarray]:
        return np.flatnonzero(self.primal), np.flatnonzero(self.dual)


def extract_syndrome(complex: RhgComplex, chain: ErrorChain) -> Syndrome:
    """Cubes with an odd number of their six faces (dual: edges) in the chain."""
    return Syndrome(complex.primal_parity(chain.primal), complex.dual_parity(chain.dual))


# --------------------------------------------------------------------------
# fixtures


def _write(path, kind: str, N: int, primal: np.ndarray, dual: np.ndarray) -> None:
    lines = [
        f"rhg-{kind} 1",
        f"N {N}",
        " ".join(["primal", *map(str, np.flatnonzero(primal))]),
        " ".join(["dual", *map(str, np.flatnonzero(dual))]),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def _read(path, kind: str):
    header = None
    fields = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = line.split()
        if header is None:
            if key != f"rhg-{kind}":
                raise ValueError(f"{path}: expected 'rhg-{kind}' header, got {key!r}")
            header = key
            continue
        fields[key] = vals
    if header is None or "N" not in fields:
        raise ValueError(f"{path}: missing header or size line")
    N = int(fields["N"][0])
    return N, [int(v) for v in fields.get("primal", [])], [int(v) for v in fields.get("dual", [])]


def write_syndrome(path, complex: RhgComplex, syndrome: Syndrome) -> None:
    _write(path, "syndrome", complex.N, syndrome.primal, syndrome.dual)


def read_syndrome(path) -> tuple[RhgComplex, Syndrome]:
    from ..lattice import build_rhg

    N, p, d = _read(path, "syndrome")
    cx = build_rhg(N)
    s = Syndrome.empty(cx)
    s.primal[p] = True
    s.dual[d] = True
    return cx, s


def write_chain(path, complex: RhgComplex, chain: ErrorChain) -> None:
    _write(path, "chain", complex.N, chain.primal, chain.dual)


def read_chain(path) -> tuple[RhgComplex, ErrorChain]:
    from ..lattice import build_rhg

    N, p, d = _read(path, "chain")
    cx = build_rhg(N)
    return cx, ErrorChain.from_indices(cx, p, d)
