"""Single-flip Monte Carlo for the ferromagnetic Ising model on arbitrary graphs.

Energies are in units of the coupling: ``E = -J sum_bonds s_i s_j``.  Random
numbers come from numpy ``Generator`` objects and are handed to the numba
kernels as uniform arrays, so a chain is bit-reproducible from its seed.
Sweeps visit sites in a fixed order with heat-bath flip probabilities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._rng import as_generator, child_seed, make_rng
from .crossing import NoCrossingError, mean_pair_crossing
from .lattice import Graph


class McWarning(UserWarning):
    """Statistical health warning (long autocorrelation, poor swap acceptance)."""


# --------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _sweeps(spins, indptr, indices, accept, offset, u):
    n = spins.shape[0]
    dE = 0
    dM = 0
    for t in range(u.shape[0]):
        for i in range(n):
            h = 0
            for k in range(indptr[i], indptr[i + 1]):
                h += spins[indices[k]]
            x = spins[i] * h
            if u[t, i] < accept[x + offset]:
                spins[i] = -spins[i]
                dE += 2 * x
                dM += 2 * spins[i]
    return dE, dM


@njit(cache=True)
def _set_products(spins, sets):
    acc = 0.0
    for c in range(sets.shape[0]):
        p = 1
        for k in range(sets.shape[1]):
            p *= spins[sets[c, k]]
        acc += p
    return acc / sets.shape[0]


@njit(cache=True)
def _bond_sum(spins, bonds):
    s = 0
    for b in range(bonds.shape[0]):
        s += spins[bonds[b, 0]] * spins[bonds[b, 1]]
    return s


def _acceptance_table(beta: float, J: float, max_degree: int, rule: str = "heatbath") -> np.ndarray:
    """Flip probability indexed by ``s_i h_i + max_degree`` (the flip costs ``2 J s_i h_i``)."""
    x = np.arange(-max_degree, max_degree + 1)
    dE = 2.0 * J * x
    with np.errstate(over="ignore", invalid="ignore"):
        bde = np.where(x == 0, 0.0, beta * dE)
        if rule == "heatbath":
            a = 1.0 / (1.0 + np.exp(bde))
        elif rule == "metropolis":
            a = np.minimum(1.0, np.exp(-bde))
        else:
            raise ValueError(f"unknown acceptance rule {rule!r}")
    return a


# --------------------------------------------------------------------------
# configurations and chains


@dataclass
class SpinConfig:
    """Spins on a graph with cached energy (units of J) and magnetization."""

    graph: Graph
    spins: np.ndarray
    energy: float = field(default=0.0)
    magnetization: int = field(default=0)
    J: float = 1.0

    @classmethod
    def new(cls, graph: Graph, init: str = "up", rng=None, J: float = 1.0) -> "SpinConfig":
        if init == "up":
            spins = np.ones(graph.n_sites, dtype=np.int8)
        elif init == "random":
            spins = (2 * as_generator(rng).integers(0, 2, graph.n_sites) - 1).astype(np.int8)
        else:
            raise ValueError(f"unknown initialization {init!r}")
        cfg = cls(graph, spins, J=J)
        cfg.recompute()
        return cfg

    def compute_energy(self) -> float:
        return -self.J * float(_bond_sum(self.spins, self.graph.bonds))

    def recompute(self) -> None:
        self.energy = self.compute_energy()
        self.magnetization = int(self.spins.sum(dtype=np.int64))

    def global_flip(self) -> None:
        np.negative(self.spins, out=self.spins)
        self.magnetization = -self.magnetization

    def copy(self) -> "SpinConfig":
        return SpinConfig(self.graph, self.spins.copy(), self.energy, self.magnetization, self.J)


def metropolis_sweep(config: SpinConfig, beta: float, rng, n_sweeps: int = 1, rule: str = "heatbath") -> SpinConfig:
    """Run ``n_sweeps`` fixed-order single-flip sweeps in place.

    ``rule='heatbath'`` flips with probability ``1/(1+exp(beta dE))``;
    ``rule='metropolis'`` uses ``min(1, exp(-beta dE))``.  Both satisfy
    detailed balance per flip, but with a fixed scan order the Metropolis
    rule is deterministic at ``beta = 0`` and reducible on small graphs
    (e.g. a triangle), so heat-bath is the default.
    """
    g = config.graph
    if g.n_sites == 0:
        raise ValueError("cannot sweep an empty graph")
    rng = as_generator(rng)
    table = _acceptance_table(beta, config.J, g.max_degree, rule)
    u = rng.random((n_sweeps, g.n_sites))
    dE, dM = _sweeps(config.spins, g.indptr, g.indices, table, g.max_degree, u)
    config.energy += config.J * dE
    config.magnetization += int(dM)
    return config


class MetropolisChain:
    """A single Markov chain at fixed inverse temperature."""

    def __init__(self, graph: Graph, beta: float, rng, init: str = "up", J: float = 1.0, rule: str = "heatbath"):
        self.rng = as_generator(rng)
        self.beta = float(beta)
        self.rule = rule
        self.config = SpinConfig.new(graph, init, self.rng, J)
        self._table = _acceptance_table(self.beta, J, graph.max_degree, rule)

    @property
    def graph(self) -> Graph:
        return self.config.graph

    def set_beta(self, beta: float) -> None:
        self.beta = float(beta)
        self._table = _acceptance_table(self.beta, self.config.J, self.graph.max_degree, self.rule)

    def sweep(self, n: int = 1) -> None:
        g = self.graph
        u = self.rng.random((n, g.n_sites))
        dE, dM = _sweeps(self.config.spins, g.indptr, g.indices, self._table, g.max_degree, u)
        self.config.energy += self.config.J * dE
        self.config.magnetization += int(dM)

    def fix_branch(self) -> None:
        """Global flip into the positive-magnetization branch."""
        if self.config.magnetization < 0:
            self.config.global_flip()


@dataclass(frozen=True)
class McSchedule:
    """Sampling protocol.

    ``measurements`` samples are taken, ``thinning`` sweeps apart, after
    ``equilibration`` sweeps.
    """

    equilibration: int = 1000
    measurements: int = 10_000
    thinning: int = 1
    seed: int = 0
    init: str = "up"

    def __post_init__(self):
        if self.equilibration < 0 or self.measurements < 1 or self.thinning < 1:
            raise ValueError(f"invalid schedule {self}")
        if self.init not in ("up", "random"):
            raise ValueError(f"unknown initialization {self.init!r}")


# --------------------------------------------------------------------------
# error analysis


def binning_error(series, min_bins: int = 32) -> tuple[float, float, float]:
    """Mean, standard error and integrated autocorrelation time (in samples).

    Logarithmic binning; the error is the largest over the binning levels
    that still have at least ``min_bins`` bins.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    mean = float(x.mean())
    if n < 2:
        return mean, math.nan, math.nan
    naive = float(x.std(ddof=1) / math.sqrt(n))
    best = naive
    b = x
    while len(b) // 2 >= min_bins:
        m = len(b) // 2
        b = 0.5 * (b[0 : 2 * m : 2] + b[1 : 2 * m : 2])
        best = max(best, float(b.std(ddof=1) / math.sqrt(len(b))))
    tau = 0.5 * (best / naive) ** 2 if naive > 0 else 0.5
    return mean, best, tau


def _check_autocorrelation(tau_samples: float, what: str) -> bool:
    if tau_samples > 10:
        warnings.warn(f"{what}: integrated autocorrelation time {tau_samples:.1f} samples exceeds 10x thinning", McWarning, stacklevel=3)
        return True
    return False


# --------------------------------------------------------------------------
# correlators


@dataclass
class CorrelatorEstimate:
    mean: float
    stderr: float
    tau: float
    series: np.ndarray = field(repr=False)


def sample_correlators(
    graph: Graph,
    site_sets,
    beta: float,
    schedule: McSchedule,
    *,
    fix_branch: bool = False,
    rng=None,
    J: float = 1.0,
) -> list[CorrelatorEstimate]:
    """Monte-Carlo estimates of ``<prod_{i in S} s_i>`` for several site sets.

    Each entry of ``site_sets`` is either a 1D list of sites or a 2D
    ``(copies, k)`` array of translation-equivalent sets that are averaged
    per sample.  With ``schedule.init == 'up'`` the chain starts in the
    positive branch; ``fix_branch`` additionally flips the configuration
    whenever the magnetization is negative at measurement time.
    """
    sets = []
    for s in site_sets:
        a = np.atleast_2d(np.asarray(s, dtype=np.int64))
        if a.size and len(np.unique(a[0])) != a.shape[1]:
            raise ValueError(f"correlator sites must be distinct, got {a[0].tolist()}")
        sets.append(np.ascontiguousarray(a))
    rng = as_generator(schedule.seed if rng is None else rng)
    chain = MetropolisChain(graph, beta, rng, schedule.init, J)
    if schedule.equilibration:
        chain.sweep(schedule.equilibration)
    series = np.empty((len(sets), schedule.measurements))
    for t in range(schedule.measurements):
        chain.sweep(schedule.thinning)
        if fix_branch:
            chain.fix_branch()
        for k, a in enumerate(sets):
            series[k, t] = _set_products(chain.config.spins, a)
    out = []
    for k in range(len(sets)):
        mean, err, tau = binning_error(series[k])
        _check_autocorrelation(tau, f"correlator {sets[k][0].tolist()}")
        out.append(CorrelatorEstimate(mean, err, tau, series[k]))
    return out


def sample_correlator(graph: Graph, sites, beta: float, schedule: McSchedule, **kw) -> tuple[float, float]:
    est = sample_correlators(graph, [sites], beta, schedule, **kw)[0]
    return est.mean, est.stderr


# --------------------------------------------------------------------------
# replica exchange


@dataclass
class ExchangeResult:
    temperatures: np.ndarray
    n_sites: int
    energy: np.ndarray
    energy_err: np.ndarray
    abs_m: np.ndarray
    abs_m_err: np.ndarray
    m2_bins: np.ndarray = field(repr=False)
    m4_bins: np.ndarray = field(repr=False)
    swap_acceptance: np.ndarray = field(default_factory=lambda: np.zeros(0))
    energy_series: np.ndarray | None = field(default=None, repr=False)

    @property
    def binder(self) -> np.ndarray:
        return binder_cumulant(self.m2_bins.mean(axis=1), self.m4_bins.mean(axis=1))

    @property
    def binder_err(self) -> np.ndarray:
        # jackknife over bins
        m2, m4 = self.m2_bins, self.m4_bins
        nb = m2.shape[1]
        s2, s4 = m2.sum(axis=1, keepdims=True), m4.sum(axis=1, keepdims=True)
        jk = binder_cumulant((s2 - m2) / (nb - 1), (s4 - m4) / (nb - 1))
        return np.sqrt((nb - 1) * np.mean((jk - jk.mean(axis=1, keepdims=True)) ** 2, axis=1))


def binder_cumulant(m2, m4):
    m2 = np.asarray(m2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 - np.asarray(m4, dtype=float) / (3.0 * m2**2)


def _bin_means(x: np.ndarray, n_bins: int) -> np.ndarray:
    n = (x.shape[-1] // n_bins) * n_bins
    return x[..., :n].reshape(*x.shape[:-1], n_bins, -1).mean(axis=-1)


def exchange_mc(
    graph: Graph,
    temperatures,
    schedule: McSchedule,
    *,
    n_bins: int = 64,
    J: float = 1.0,
    keep_series: bool = False,
) -> ExchangeResult:
    """Replica-exchange Monte Carlo over an increasing temperature ladder.

    One replica per temperature; after every sweep, swaps are attempted
    between adjacent temperatures (even pairs, then odd pairs) with
    acceptance ``min(1, exp((b_a - b_b)(E_a - E_b)))``.  Replica ``k`` uses the
    stream ``(seed, 'replica', k)``; a one-temperature ladder is therefore a
    plain Metropolis run.
    """
    T = np.asarray(temperatures, dtype=float)
    if T.ndim != 1 or len(T) < 1 or np.any(np.diff(T) <= 0) or np.any(T <= 0):
        raise ValueError("temperature ladder must be positive and strictly increasing")
    if schedule.measurements < n_bins:
        raise ValueError(f"need at least {n_bins} measurements for binning")
    betas = 1.0 / T
    R = len(T)
    chains = [MetropolisChain(graph, betas[k], make_rng(schedule.seed, "replica", k), schedule.init, J) for k in range(R)]
    swap_rng = make_rng(schedule.seed, "swap")
    attempts = np.zeros(max(R - 1, 0))
    accepted = np.zeros(max(R - 1, 0))

    def step(n_sweeps: int, parity: int) -> None:
        for _ in range(n_sweeps):
            for c in chains:
                c.sweep(1)
            if R < 2:
                continue
            for k in range(parity, R - 1, 2):
                a, b = chains[k], chains[k + 1]
                attempts[k] += 1
                x = (betas[k] - betas[k + 1]) * (a.config.energy - b.config.energy)
                if x >= 0 or swap_rng.random() < math.exp(x):
                    a.config, b.config = b.config, a.config
                    accepted[k] += 1
            parity ^= 1

    step(schedule.equilibration, 0)
    attempts[:] = 0
    accepted[:] = 0
    M = schedule.measurements
    E = np.empty((R, M))
    m = np.empty((R, M))
    for t in range(M):
        step(schedule.thinning, t % 2)
        for k, c in enumerate(chains):
            E[k, t] = c.config.energy
            m[k, t] = c.config.magnetization / graph.n_sites
    acc = np.divide(accepted, attempts, out=np.zeros_like(accepted), where=attempts > 0)
    if R > 1 and np.any(acc < 0.05):
        warnings.warn(f"replica swap acceptance below 5%: {np.round(acc, 3).tolist()}", McWarning, stacklevel=2)
    e_stats = [binning_error(E[k]) for k in range(R)]
    am_stats = [binning_error(np.abs(m[k])) for k in range(R)]
    return ExchangeResult(
        temperatures=T,
        n_sites=graph.n_sites,
        energy=np.array([s[0] for s in e_stats]),
        energy_err=np.array([s[1] for s in e_stats]),
        abs_m=np.array([s[0] for s in am_stats]),
        abs_m_err=np.array([s[1] for s in am_stats]),
        m2_bins=_bin_means(m**2, n_bins),
        m4_bins=_bin_means(m**4, n_bins),
        swap_acceptance=acc,
        energy_series=E if keep_series else None,
    )


# --------------------------------------------------------------------------
# Binder-crossing Tc


@dataclass
class TcEstimate:
    tc: float
    ci: tuple[float, float]
    pair_crossings: dict
    results: dict = field(repr=False)


def estimate_tc(
    graph_for_size,
    sizes,
    temperatures,
    schedule: McSchedule,
    *,
    n_boot: int = 200,
    n_bins: int = 64,
    confidence: float = 0.95,
) -> TcEstimate:
    """Locate Tc from Binder-cumulant crossings between system sizes.

    ``graph_for_size`` maps a size to a :class:`Graph`.  The estimate is the
    mean of all pairwise crossings; the interval comes from a bootstrap over
    measurement bins.  Raises :class:`NoCrossingError` if no pair crosses
    inside the grid.
    """
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("need at least two sizes for a Binder crossing")
    T = np.asarray(temperatures, dtype=float)
    results = {}
    for L in sizes:
        sched = McSchedule(schedule.equilibration, schedule.measurements, schedule.thinning, child_seed(schedule.seed, "tc", L), schedule.init)
        results[L] = exchange_mc(graph_for_size(L), T, sched, n_bins=n_bins)
    curves = {L: results[L].binder for L in sizes}
    tc, pairs = mean_pair_crossing(T, curves)
    rng = make_rng(schedule.seed, "binder-bootstrap")
    boot = []
    for _ in range(n_boot):
        bc = {}
        for L in sizes:
            r = results[L]
            idx = rng.integers(0, r.m2_bins.shape[1], size=r.m2_bins.shape)
            bc[L] = binder_cumulant(
                np.take_along_axis(r.m2_bins, idx, 1).mean(axis=1), np.take_along_axis(r.m4_bins, idx, 1).mean(axis=1)
            )
        try:
            boot.append(mean_pair_crossing(T, bc)[0])
        except NoCrossingError:
            continue
    alpha = (1 - confidence) / 2
    ci = (float(np.quantile(boot, alpha)), float(np.quantile(boot, 1 - alpha))) if boot else (math.nan, math.nan)
    return TcEstimate(tc, ci, pairs, results)
