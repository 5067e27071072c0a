"""Thermal Z-error samplers on the RHG complex.

* fCH: every face and edge qubit fails independently with ``p = e^{-2K}/(1+e^{-2K})``.
* iCH: errors are the down spins of a ferromagnetic Ising chain on the
  qubit adjacency graph, kept in the positive branch by a global flip.
* SC-reduced: the Ising chain runs on the full simple-cubic lattice and only
  the RHG-retained sites are kept.
"""

from __future__ import annotations

import math

import numpy as np

from .._rng import as_generator
from ..ising_exact import fch_error_probability
from ..ising_mc import McSchedule, MetropolisChain
from ..lattice import CubicClusterGraph, Graph, RhgComplex
from .chains import ErrorChain


def sample_fch_errors(complex: RhgComplex, beta: float, rng, n: int | None = None):
    """One chain (or a batch of ``n`` as boolean arrays ``(n, F)``, ``(n, F)``)."""
    rng = as_generator(rng)
    p = fch_error_probability(beta)
    if n is None:
        return ErrorChain(rng.random(complex.n_faces) < p, rng.random(complex.n_edges) < p)
    return rng.random((n, complex.n_faces)) < p, rng.random((n, complex.n_edges)) < p


class IsingErrorSampler:
    """Successive thinned draws of down-spin masks from one Ising chain.

    The first draw runs ``schedule.equilibration`` sweeps; later draws run
    ``schedule.thinning`` sweeps.  Before each draw the configuration is
    flipped into the positive-magnetization branch when ``fix_branch``.
    """

    def __init__(self, graph: Graph, beta: float, schedule: McSchedule, rng, fix_branch: bool = True):
        self.chain = MetropolisChain(graph, beta if math.isfinite(beta) else math.inf, rng, schedule.init)
        self.schedule = schedule
        self.fix_branch = fix_branch
        self._started = False

    def draw(self) -> np.ndarray:
        if not self._started:
            if self.schedule.equilibration:
                self.chain.sweep(self.schedule.equilibration)
            self._started = True
        else:
            self.chain.sweep(self.schedule.thinning)
        if self.fix_branch:
            self.chain.fix_branch()
        return self.chain.config.spins < 0


class IchErrorSampler:
    """Correlated iCH errors on an RHG complex."""

    def __init__(self, complex: RhgComplex, beta: float, schedule: McSchedule, rng, fix_branch: bool = True):
        self.complex = complex
        self._ising = IsingErrorSampler(complex.graph, beta, schedule, rng, fix_branch)

    @property
    def chain(self) -> MetropolisChain:
        return self._ising.chain

    def draw(self) -> ErrorChain:
        return ErrorChain.from_qubits(self.complex, self._ising.draw())


class ScReducedErrorSampler:
    """Errors from the simple-cubic Ising model restricted to the RHG sublattice."""

    def __init__(self, cubic: CubicClusterGraph, beta: float, schedule: McSchedule, rng, fix_branch: bool = True):
        self.cubic = cubic
        self.complex = cubic.rhg
        self._ising = IsingErrorSampler(cubic.graph, beta, schedule, rng, fix_branch)

    def draw(self) -> ErrorChain:
        down = self._ising.draw()
        return ErrorChain.from_qubits(self.complex, down[self.cubic.from_rhg_qubit])


def sample_ich_errors(complex: RhgComplex, beta: float, schedule: McSchedule, rng) -> ErrorChain:
    return IchErrorSampler(complex, beta, schedule, rng).draw()


def sample_sc_reduced_errors(cubic: CubicClusterGraph, beta: float, schedule: McSchedule, rng) -> ErrorChain:
    return ScReducedErrorSampler(cubic, beta, schedule, rng).draw()
