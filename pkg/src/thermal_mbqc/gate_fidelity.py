"""Identity- and Hadamard-gate fidelities on thermal cluster states.

A chain of ``length`` qubits is measured in the X basis on positions
``1..length-1``; the byproduct parities run over the even positions (X part)
and the odd positions (Z part).  The fidelity is

    F = (1 + <K(S_X)> + <K(S_Z)> + <K(S_X u S_Z)>) / 4,

with ``K(S)`` the product of cluster stabilizers on ``S``.  For the free
cluster Hamiltonian each factor is ``tanh(beta J)^|S|``; for the interacting
one it equals the 2D Ising correlator of X on the same row positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import child_seed
from .ising_exact import IsingParams, critical_temperature_2d, even_row_correlation
from .ising_mc import McSchedule, binning_error, sample_correlators
from .lattice import build_square

MODELS = ("fch", "ich")


def compute_byproduct(outcomes) -> tuple[int, int]:
    """Byproduct exponents ``(r_X, r_Z)`` for outcomes ``m_1, m_2, ...`` (1-based positions).

    ``r_X`` sums the even positions and ``r_Z`` the odd positions, mod 2.
    """
    m = np.asarray(outcomes, dtype=np.int64) % 2
    return int(m[1::2].sum() % 2), int(m[0::2].sum() % 2)


@dataclass(frozen=True)
class GateSpec:
    """Measurement pattern on a linear cluster of ``length`` qubits.

    ``GateSpec.identity(l)`` is the ``2l``-qubit chain and
    ``GateSpec.hadamard(l)`` the ``2l+1``-qubit chain.  With ``literal=True``
    both projectors run over ``K_{2i}`` with upper limits ``ceil((n-1)/2)``
    and ``ceil(n/2)``, i.e. the printed index sets taken at face value.
    """

    length: int
    literal: bool = False

    def __post_init__(self):
        if self.length < 2:
            raise ValueError(f"chain length must be >= 2, got {self.length}")

    @classmethod
    def identity(cls, l: int, literal: bool = False) -> "GateSpec":
        if l < 1:
            raise ValueError(f"l must be >= 1, got {l}")
        return cls(2 * l, literal)

    @classmethod
    def hadamard(cls, l: int, literal: bool = False) -> "GateSpec":
        if l < 1:
            raise ValueError(f"l must be >= 1, got {l}")
        return cls(2 * l + 1, literal)

    @classmethod
    def from_name(cls, gate: str, l: int, literal: bool = False) -> "GateSpec":
        if gate == "identity":
            return cls.identity(l, literal)
        if gate == "hadamard":
            return cls.hadamard(l, literal)
        raise ValueError(f"unknown gate {gate!r}")

    @property
    def gate(self) -> str:
        # odd number of X measurements <-> "identity" in the figures' labelling
        return "identity" if self.length % 2 == 0 else "hadamard"

    @property
    def l(self) -> int:
        return self.length // 2

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(range(1, self.length))

    @property
    def s_x(self) -> tuple[int, ...]:
        return tuple(p for p in self.measured if p % 2 == 0)

    @property
    def s_z(self) -> tuple[int, ...]:
        return tuple(p for p in self.measured if p % 2 == 1)

    def projector_sets(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not self.literal:
            return self.s_x, self.s_z
        n = self.length
        a = tuple(2 * i for i in range(1, math.ceil((n - 1) / 2) + 1))
        b = tuple(2 * i for i in range(1, math.ceil(n / 2) + 1))
        return a, b

    def expansion_sets(self) -> tuple[tuple[int, ...], ...]:
        """The three stabilizer products whose expectations enter F."""
        a, b = self.projector_sets()
        return a, b, tuple(sorted(set(a) ^ set(b)))


@dataclass(frozen=True)
class MonteCarloOptions:
    """Settings for odd-body correlators of the interacting model (broken branch)."""

    size: int = 150
    schedule: McSchedule = field(default_factory=lambda: McSchedule(equilibration=1500, measurements=100_000))
    col_stride: int = 10


@dataclass
class FidelityPoint:
    spec: GateSpec
    temperature: float
    fidelity: float
    stderr: float
    model: str
    provenance: tuple[str, ...]

    @property
    def gate(self) -> str:
        return self.spec.gate


def _fch_correlator(n: int, params: IsingParams) -> float:
    return params.z**n


def fidelity_curve(
    spec: GateSpec,
    temperatures,
    model: str,
    mc: MonteCarloOptions | None = None,
) -> list[FidelityPoint]:
    """Fidelity at each temperature.

    Even-cardinality products of the interacting model come from the exact
    determinant; odd ones are exactly zero at and above Tc and sampled by
    Monte Carlo in the positive branch below it.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    temps = [float(t) for t in temperatures]
    if not temps:
        raise ValueError("empty temperature grid")
    sets = spec.expansion_sets()
    tc = critical_temperature_2d()
    mc = mc or MonteCarloOptions()
    out = []
    for T in temps:
        params = IsingParams.from_temperature(T)
        values: list[float | None] = []
        prov = []
        for s in sets:
            if not s:
                values.append(1.0)
                prov.append("exact")
            elif model == "fch":
                values.append(_fch_correlator(len(s), params))
                prov.append("exact")
            elif len(s) % 2 == 0:
                values.append(even_row_correlation(s, params))
                prov.append("exact")
            elif T >= tc:
                values.append(0.0)
                prov.append("symmetric-zero")
            else:
                values.append(None)
                prov.append("monte-carlo")
        if None in values:
            F, err = _sampled_fidelity(sets, values, params.beta, mc, seed_key=round(T, 12))
        else:
            F, err = 0.25 * (1 + sum(values)), 0.0
        out.append(FidelityPoint(spec, T, F, err, model, tuple(prov)))
    return out


def _sampled_fidelity(sets, values, beta, mc: MonteCarloOptions, seed_key: float) -> tuple[float, float]:
    lat = build_square(mc.size, mc.size)
    todo = [i for i, v in enumerate(values) if v is None]
    site_sets = [lat.row_translates(sets[i], mc.col_stride) for i in todo]
    sched = mc.schedule
    sched = McSchedule(sched.equilibration, sched.measurements, sched.thinning, child_seed(sched.seed, "fidelity", seed_key), sched.init)
    est = sample_correlators(lat.graph, site_sets, beta, sched)
    fixed = sum(v for v in values if v is not None)
    series = 0.25 * (1 + fixed + sum(e.series for e in est))
    mean, err, _ = binning_error(series)
    return mean, err


def fidelity(spec: GateSpec, T: float, model: str, mc: MonteCarloOptions | None = None) -> FidelityPoint:
    return fidelity_curve(spec, [T], model, mc)[0]


def fidelity_derivative(points) -> np.ndarray:
    """dF/dT on the curve's grid: central differences inside, one-sided at the ends."""
    T = np.array([p.temperature for p in points], dtype=float)
    F = np.array([p.fidelity for p in points], dtype=float)
    if len(T) < 3:
        raise ValueError("need at least 3 points for a derivative")
    if np.any(np.diff(T) <= 0):
        raise ValueError("temperature grid must be strictly increasing")
    return np.gradient(F, T, edge_order=1)
