"""Lattice geometries: periodic square lattice, RHG cell complex, simple-cubic cluster graph.

All three expose a :class:`Graph` (CSR adjacency plus a bond list) that the
Monte-Carlo engine consumes.  Structures are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

AXES = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected multigraph in CSR form.

    ``bonds`` keeps one row per bond; parallel bonds (e.g. on a 2x2 periodic
    lattice) appear more than once and are counted in the energy accordingly.
    """

    n_sites: int
    bonds: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def from_bonds(cls, n_sites: int, bonds) -> "Graph":
        bonds = np.asarray(bonds, dtype=np.int64).reshape(-1, 2)
        if np.any(bonds < 0) or np.any(bonds >= n_sites):
            raise ValueError("bond endpoint out of range")
        if np.any(bonds[:, 0] == bonds[:, 1]):
            raise ValueError("self-loops are not allowed")
        src = np.concatenate([bonds[:, 0], bonds[:, 1]])
        dst = np.concatenate([bonds[:, 1], bonds[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=n_sites)
        indptr = np.zeros(n_sites + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(int(n_sites), bonds, indptr, dst.astype(np.int64))

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n_sites else 0

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def is_bipartite(self, left: np.ndarray) -> bool:
        left = np.asarray(left, dtype=bool)
        return bool(np.all(left[self.bonds[:, 0]] != left[self.bonds[:, 1]]))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(min(a, b)), int(max(a, b))) for a, b in self.bonds}


# --------------------------------------------------------------------------
# square lattice


@dataclass(frozen=True, eq=False)
class SquareLattice:
    """Periodic ``Ly x Lx`` square lattice; site ``(row, col)`` has id ``row*Lx + col``."""

    Lx: int
    Ly: int
    periodic: bool = True

    def site(self, row: int, col: int) -> int:
        return (row % self.Ly) * self.Lx + (col % self.Lx)

    @property
    def n_sites(self) -> int:
        return self.Lx * self.Ly

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(n_sites, 4) array of right, left, down, up neighbours."""
        rows, cols = np.divmod(np.arange(self.n_sites), self.Lx)
        return np.stack(
            [
                rows * self.Lx + (cols + 1) % self.Lx,
                rows * self.Lx + (cols - 1) % self.Lx,
                ((rows + 1) % self.Ly) * self.Lx + cols,
                ((rows - 1) % self.Ly) * self.Lx + cols,
            ],
            axis=1,
        )

    @cached_property
    def graph(self) -> Graph:
        ids = np.arange(self.n_sites)
        nt = self.neighbor_table
        bonds = np.concatenate([np.stack([ids, nt[:, 0]], 1), np.stack([ids, nt[:, 2]], 1)])
        return Graph.from_bonds(self.n_sites, bonds)

    def row_translates(self, cols, col_stride: int = 1) -> np.ndarray:
        """All translates of the row pattern ``cols`` (1-based column positions).

        Returns an ``(n_copies, len(cols))`` array of site ids, one copy per row
        and per column offset in ``range(0, Lx, col_stride)``.
        """
        cols = np.asarray(cols, dtype=np.int64) - 1
        rows = np.arange(self.Ly)
        offsets = np.arange(0, self.Lx, col_stride)
        r = np.repeat(rows, len(offsets))
        o = np.tile(offsets, len(rows))
        return r[:, None] * self.Lx + (cols[None, :] + o[:, None]) % self.Lx


def build_square(Lx: int, Ly: int) -> SquareLattice:
    if Lx < 2 or Ly < 2:
        raise ValueError(f"square lattice needs Lx, Ly >= 2, got {Lx}x{Ly}")
    return SquareLattice(int(Lx), int(Ly))


# --------------------------------------------------------------------------
# RHG complex

_UNIT = np.eye(3, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class RhgComplex:
    """Periodic RHG cell complex on the coordinate box ``{0..2N-1}^3``.

    Face qubits have two odd coordinates, edge qubits one, primal cubes are
    all-odd sites and dual cubes all-even.  Qubit ids in :attr:`graph` put the
    faces first (``0..F-1``) and the edges after them (``F..2F-1``).
    """

    N: int

    @property
    def L(self) -> int:
        return 2 * self.N

    @cached_property
    def _classes(self):
        L = self.L
        g = np.indices((L, L, L)).reshape(3, -1).T
        n_odd = (g % 2).sum(axis=1)
        site_id = np.full(L**3, -1, dtype=np.int64)
        out = {}
        for name, k in (("face", 2), ("edge", 1), ("primal", 3), ("dual", 0)):
            sel = np.flatnonzero(n_odd == k)
            site_id[sel] = np.arange(len(sel))
            out[name] = g[sel]
        return out, site_id.reshape(L, L, L)

    @property
    def face_coords(self) -> np.ndarray:
        return self._classes[0]["face"]

    @property
    def edge_coords(self) -> np.ndarray:
        return self._classes[0]["edge"]

    @property
    def primal_cube_coords(self) -> np.ndarray:
        return self._classes[0]["primal"]

    @property
    def dual_cube_coords(self) -> np.ndarray:
        return self._classes[0]["dual"]

    @property
    def site_id(self) -> np.ndarray:
        """Index of each coordinate within its parity class."""
        return self._classes[1]

    @property
    def n_faces(self) -> int:
        return 3 * self.N**3

    @property
    def n_edges(self) -> int:
        return 3 * self.N**3

    @property
    def n_cubes(self) -> int:
        return self.N**3

    def _lookup(self, coords: np.ndarray) -> np.ndarray:
        c = np.mod(coords, self.L)
        return self.site_id[c[..., 0], c[..., 1], c[..., 2]]

    def _shell(self, coords: np.ndarray) -> np.ndarray:
        # neighbours at +-1 along each axis, ordered (+x, -x, +y, -y, +z, -z)
        shifts = np.concatenate([_UNIT, -_UNIT])[[0, 3, 1, 4, 2, 5]]
        return coords[:, None, :] + shifts[None, :, :]

    @cached_property
    def cube_faces(self) -> np.ndarray:
        """(N^3, 6) faces of each primal cube."""
        return self._lookup(self._shell(self.primal_cube_coords))

    @cached_property
    def dual_cube_edges(self) -> np.ndarray:
        """(N^3, 6) edge qubits (dual faces) of each dual cube."""
        return self._lookup(self._shell(self.dual_cube_coords))

    def _split_shell(self, coords: np.ndarray, parity: int) -> np.ndarray:
        # neighbours at +-1 along the axes whose coordinate has the given parity,
        # axes in increasing order; every row of ``coords`` has the same count
        match = (coords % 2) == parity
        k = int(match[0].sum())
        axes = np.argsort(~match, axis=1, kind="stable")[:, :k]
        steps = _UNIT[axes]
        nb = np.stack([coords[:, None, :] + steps, coords[:, None, :] - steps], axis=2)
        return nb.reshape(len(coords), 2 * k, 3)

    @cached_property
    def face_edges(self) -> np.ndarray:
        """(F, 4) boundary edges of each face (steps along its two odd axes)."""
        return self._lookup(self._split_shell(self.face_coords, 1))

    @cached_property
    def face_cubes(self) -> np.ndarray:
        """(F, 2) primal cubes sharing each face (steps along its even axis)."""
        return self._lookup(self._split_shell(self.face_coords, 0))

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """(F, 4) faces containing each edge (steps along its two even axes)."""
        return self._lookup(self._split_shell(self.edge_coords, 0))

    @cached_property
    def edge_dual_cubes(self) -> np.ndarray:
        """(F, 2) dual cubes joined by each edge (steps along its odd axis)."""
        return self._lookup(self._split_shell(self.edge_coords, 1))

    @cached_property
    def face_normal(self) -> np.ndarray:
        """Axis (0,1,2) of the single even coordinate of each face."""
        return np.argmin(self.face_coords % 2, axis=1)

    @cached_property
    def edge_axis(self) -> np.ndarray:
        """Axis of the single odd coordinate of each edge."""
        return np.argmax(self.edge_coords % 2, axis=1)

    @cached_property
    def pairs(self) -> np.ndarray:
        """(12 N^3, 2) adjacent (face, edge) pairs, face index first."""
        f = np.repeat(np.arange(self.n_faces), 4)
        return np.stack([f, self.face_edges.reshape(-1)], axis=1)

    @cached_property
    def graph(self) -> Graph:
        """4-regular bipartite qubit adjacency graph (faces, then edges)."""
        p = self.pairs
        return Graph.from_bonds(self.n_faces + self.n_edges, np.stack([p[:, 0], p[:, 1] + self.n_faces], 1))

    @cached_property
    def primal_cuts(self) -> np.ndarray:
        """(3, F) masks of faces on the cut plane ``coord[a] == 0``."""
        return np.stack([self.face_coords[:, a] == 0 for a in range(3)])

    @cached_property
    def dual_cuts(self) -> np.ndarray:
        """(3, F) masks of edges on the dual cut plane ``coord[a] == 1`` pointing along ``a``."""
        return np.stack([(self.edge_coords[:, a] == 1) & (self.edge_axis == a) for a in range(3)])

    def primal_logical(self, axis: int) -> np.ndarray:
        """Straight primal line wrapping ``axis`` once, as a face mask."""
        c = self.face_coords
        others = [a for a in range(3) if a != axis]
        return (self.face_normal == axis) & (c[:, others[0]] == 1) & (c[:, others[1]] == 1)

    def dual_logical(self, axis: int) -> np.ndarray:
        """Straight dual line wrapping ``axis`` once, as an edge mask."""
        c = self.edge_coords
        others = [a for a in range(3) if a != axis]
        return (self.edge_axis == axis) & (c[:, others[0]] == 0) & (c[:, others[1]] == 0)

    def primal_parity(self, faces: np.ndarray) -> np.ndarray:
        """Per-cube parity (bool) of a face indicator; works on batches ``(..., F)``."""
        faces = np.asarray(faces, dtype=np.uint8)
        return np.bitwise_xor.reduce(faces[..., self.cube_faces], axis=-1).astype(bool)

    def dual_parity(self, edges: np.ndarray) -> np.ndarray:
        edges = np.asarray(edges, dtype=np.uint8)
        return np.bitwise_xor.reduce(edges[..., self.dual_cube_edges], axis=-1).astype(bool)

    def dual_shift(self, coords: np.ndarray) -> np.ndarray:
        """Map coordinates into the dual frame (shift by (1,1,1)); faces <-> edges, cubes <-> dual cubes."""
        return np.mod(np.asarray(coords) + 1, self.L)


def build_rhg(N: int) -> RhgComplex:
    if N < 2:
        raise ValueError(f"RHG complex needs N >= 2, got {N}")
    return RhgComplex(int(N))


def homology_winding(complex: RhgComplex, chain) -> np.ndarray:
    """Six parity bits ``(primal x,y,z, dual x,y,z)`` of a closed chain.

    ``chain`` is anything with boolean ``primal`` (faces) and ``dual`` (edges)
    arrays.  Raises ``ValueError`` when the chain has a boundary.
    """
    primal = np.asarray(chain.primal, dtype=bool)
    dual = np.asarray(chain.dual, dtype=bool)
    if complex.primal_parity(primal).any() or complex.dual_parity(dual).any():
        raise ValueError("homology class is only defined for cycles (non-empty syndrome)")
    bits = np.concatenate(
        [
            (complex.primal_cuts & primal[None, :]).sum(axis=1) % 2,
            (complex.dual_cuts & dual[None, :]).sum(axis=1) % 2,
        ]
    )
    return bits.astype(np.uint8)


def winding_bits(complex: RhgComplex, primal: np.ndarray, dual: np.ndarray) -> np.ndarray:
    """Batched crossing parities, no cycle check; shape ``(..., 6)``."""
    p = (np.asarray(primal, dtype=np.int64) @ complex.primal_cuts.T.astype(np.int64)) % 2
    d = (np.asarray(dual, dtype=np.int64) @ complex.dual_cuts.T.astype(np.int64)) % 2
    return np.concatenate([p, d], axis=-1).astype(np.uint8)


# --------------------------------------------------------------------------
# simple-cubic cluster graph


@dataclass(frozen=True, eq=False)
class CubicClusterGraph:
    """Periodic ``N^3`` simple-cubic lattice with the RHG-retained subset marked.

    Removing the all-even and all-odd sites (measuring them in the Z basis)
    leaves the qubit graph of ``RhgComplex(N // 2)``.
    """

    N: int

    @property
    def n_sites(self) -> int:
        return self.N**3

    @cached_property
    def coords(self) -> np.ndarray:
        return np.indices((self.N,) * 3).reshape(3, -1).T

    @cached_property
    def graph(self) -> Graph:
        N = self.N
        ids = np.arange(self.n_sites)
        c = self.coords
        bonds = []
        for a in range(3):
            nb = c.copy()
            nb[:, a] = (nb[:, a] + 1) % N
            bonds.append(np.stack([ids, (nb[:, 0] * N + nb[:, 1]) * N + nb[:, 2]], 1))
        return Graph.from_bonds(self.n_sites, np.concatenate(bonds))

    @cached_property
    def retained(self) -> np.ndarray:
        n_odd = (self.coords % 2).sum(axis=1)
        return (n_odd == 1) | (n_odd == 2)

    @cached_property
    def rhg(self) -> RhgComplex:
        return RhgComplex(self.N // 2)

    @cached_property
    def to_rhg_qubit(self) -> np.ndarray:
        """Map cubic site id -> RHG qubit id (faces then edges); -1 for removed sites."""
        rhg = self.rhg
        out = np.full(self.n_sites, -1, dtype=np.int64)
        c = self.coords
        n_odd = (c % 2).sum(axis=1)
        idx = rhg.site_id[c[:, 0], c[:, 1], c[:, 2]]
        out[n_odd == 2] = idx[n_odd == 2]
        out[n_odd == 1] = idx[n_odd == 1] + rhg.n_faces
        return out

    @cached_property
    def from_rhg_qubit(self) -> np.ndarray:
        inv = np.empty(self.rhg.n_faces + self.rhg.n_edges, dtype=np.int64)
        sel = np.flatnonzero(self.retained)
        inv[self.to_rhg_qubit[sel]] = sel
        return inv

    def retained_subgraph_matches_rhg(self) -> bool:
        """Induced subgraph on the retained sites, relabelled, equals the RHG qubit graph."""
        m = self.to_rhg_qubit
        b = self.graph.bonds
        keep = self.retained[b[:, 0]] & self.retained[b[:, 1]]
        induced = {(int(min(x, y)), int(max(x, y))) for x, y in m[b[keep]]}
        return induced == self.rhg.graph.edge_set()


def build_cubic(N: int) -> CubicClusterGraph:
    if N < 4 or N % 2:
        raise ValueError(f"cubic cluster graph needs even N >= 4, got {N}")
    return CubicClusterGraph(int(N))
