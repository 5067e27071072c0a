import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermal_mbqc.ising_exact import fch_error_probability
from thermal_mbqc.ising_mc import McSchedule, McWarning, exchange_mc
from thermal_mbqc.lattice import build_cubic, build_rhg, homology_winding
from thermal_mbqc.rhg_tqec import (
    ErrorChain,
    GaugeChain,
    GaugeConfig,
    IchErrorSampler,
    OddSyndromeError,
    QuenchedDisorder,
    ScReducedErrorSampler,
    Syndrome,
    crpgm_energy,
    crpgm_internal_energy,
    decode_verdict,
    extract_syndrome,
    free_energy_decode,
    homology_classes,
    logical_failure,
    logical_representative,
    match_defects,
    matching_weight,
    mwpm_decode,
    read_chain,
    read_syndrome,
    sample_fch_errors,
    sample_ich_errors,
    write_chain,
    write_syndrome,
)
from thermal_mbqc.rhg_tqec.crpgm import compose, ising_energy
from thermal_mbqc.rhg_tqec.decoding import distance_matrix, route_pairs

from .oracles import min_weight_perfect_matching_bruteforce

# --- samplers --------------------------------------------------------------


def test_fch_sampler_limits():
    cx = build_rhg(3)
    assert sample_fch_errors(cx, math.inf, 0).weight == 0
    p, d = sample_fch_errors(cx, 0.0, 1, n=200)
    assert abs(p.mean() - 0.5) < 0.01 and abs(d.mean() - 0.5) < 0.01


def test_fch_sampler_density_at_threshold_temperature():
    cx = build_rhg(4)
    beta = 1 / 0.57
    p, d = sample_fch_errors(cx, beta, 2, n=500)
    q = fch_error_probability(beta)
    assert q == pytest.approx(0.029, abs=0.0015)
    n = p.size + d.size
    est = (p.sum() + d.sum()) / n
    assert abs(est - q) < 4 * math.sqrt(q * (1 - q) / n)


def test_fch_batch_reproducible():
    cx = build_rhg(2)
    a = sample_fch_errors(cx, 1.0, 5, n=3)
    b = sample_fch_errors(cx, 1.0, 5, n=3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_ich_zero_temperature_is_error_free():
    cx = build_rhg(3)
    assert sample_ich_errors(cx, math.inf, McSchedule(5, 1), 0).weight == 0


def test_ich_pair_statistic_matches_energy_route():
    # <s_f s_e> over adjacent pairs from the sampler vs minus the energy per bond from exchange MC
    cx = build_rhg(3)
    T = 4.0
    sampler = IchErrorSampler(cx, 1 / T, McSchedule(300, 1, thinning=4, seed=1), 1)
    p = cx.pairs
    vals = []
    for _ in range(1500):
        e = sampler.draw()
        s_f = 1 - 2 * e.primal[p[:, 0]].astype(int)
        s_e = 1 - 2 * e.dual[p[:, 1]].astype(int)
        vals.append(np.mean(s_f * s_e))
    vals = np.array(vals)
    res = exchange_mc(cx.graph, [T], McSchedule(300, 6400, seed=2))
    ref = -res.energy[0] / cx.graph.n_bonds
    ref_err = res.energy_err[0] / cx.graph.n_bonds
    err = vals.std() / math.sqrt(len(vals)) * 2  # thinned draws are mildly correlated
    assert abs(vals.mean() - ref) <= 3 * math.hypot(err, ref_err), (vals.mean(), ref)


def test_ich_branch_fixed():
    cx = build_rhg(3)
    sampler = IchErrorSampler(cx, 1 / 1.5, McSchedule(50, 1, seed=0, init="random"), 3)
    for _ in range(20):
        assert sampler.draw().weight <= cx.graph.n_sites // 2


def test_sc_reduced_restricts_cubic_chain():
    cu = build_cubic(4)
    sampler = ScReducedErrorSampler(cu, 1 / 3.0, McSchedule(20, 1, seed=0), 4)
    for _ in range(5):
        chain = sampler.draw()
        down = sampler._ising.chain.config.spins < 0
        assert np.array_equal(chain.qubits(), down[cu.from_rhg_qubit])
    assert ScReducedErrorSampler(cu, math.inf, McSchedule(3, 1), 0).draw().weight == 0


# --- chains and syndromes ---------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_syndrome_linear(seed):
    cx = build_rhg(3)
    rng = np.random.default_rng(seed)
    a = sample_fch_errors(cx, 0.7, rng)
    b = sample_fch_errors(cx, 0.7, rng)
    assert extract_syndrome(cx, a ^ b) == extract_syndrome(cx, a) ^ extract_syndrome(cx, b)
    # every sector carries an even number of defects
    p, d = extract_syndrome(cx, a).defects()
    assert len(p) % 2 == 0 and len(d) % 2 == 0


def test_qubit_split_round_trip():
    cx = build_rhg(2)
    rng = np.random.default_rng(0)
    mask = rng.random(cx.graph.n_sites) < 0.3
    assert np.array_equal(ErrorChain.from_qubits(cx, mask).qubits(), mask)
    with pytest.raises(ValueError):
        ErrorChain(np.zeros(3, bool), np.zeros(4, bool))


def test_fixture_round_trip(tmp_path):
    cx = build_rhg(3)
    chain = sample_fch_errors(cx, 0.8, 7)
    write_chain(tmp_path / "a.chain", cx, chain)
    cx2, back = read_chain(tmp_path / "a.chain")
    assert cx2.N == 3 and back == chain
    syn = extract_syndrome(cx, chain)
    write_syndrome(tmp_path / "a.syn", cx, syn)
    _, syn2 = read_syndrome(tmp_path / "a.syn")
    assert syn2 == syn
    with pytest.raises(ValueError):
        read_syndrome(tmp_path / "a.chain")


# --- matching ---------------------------------------------------------------


def test_empty_syndrome_decodes_to_empty():
    cx = build_rhg(3)
    assert mwpm_decode(cx, Syndrome.empty(cx)).weight == 0


def test_single_face_error_corrected():
    cx = build_rhg(4)
    for f in (0, 17, 100):
        actual = ErrorChain.from_indices(cx, primal=[f])
        corr = mwpm_decode(cx, extract_syndrome(cx, actual))
        assert corr == actual
        assert decode_verdict(cx, actual, corr)


def test_odd_syndrome_rejected():
    cx = build_rhg(3)
    syn = Syndrome.empty(cx)
    syn.primal[[0, 1, 2]] = True
    with pytest.raises(OddSyndromeError):
        mwpm_decode(cx, syn)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 5), sector=st.sampled_from(["primal", "dual"]))
def test_matching_weight_equals_bruteforce(seed, N, sector):
    cx = build_rhg(N)
    rng = np.random.default_rng(seed)
    k = 2 * int(rng.integers(1, 6))
    k = min(k, cx.n_cubes - cx.n_cubes % 2)
    defects = rng.choice(cx.n_cubes, k, replace=False)
    pairs = match_defects(cx, sector, defects)
    assert sorted(pairs.ravel().tolist()) == sorted(defects.tolist())
    brute, _ = min_weight_perfect_matching_bruteforce(distance_matrix(cx, sector, defects))
    assert matching_weight(cx, sector, pairs) == brute
    # the routed chain has exactly the matched weight and the requested boundary
    routed = route_pairs(cx, sector, pairs)
    assert routed.sum() <= brute
    syn = Syndrome.empty(cx)
    getattr(syn, sector)[defects] = True
    corr = mwpm_decode(cx, syn)
    assert extract_syndrome(cx, corr) == syn


# --- verdicts ---------------------------------------------------------------


def test_wrapping_loop_is_logical_failure():
    cx = build_rhg(3)
    for a in range(3):
        actual = ErrorChain(cx.primal_logical(a), np.zeros(cx.n_edges, bool))
        assert not decode_verdict(cx, actual, ErrorChain.empty(cx))
        assert logical_failure(cx, actual)
        assert logical_failure(cx, ErrorChain(np.zeros(cx.n_faces, bool), cx.dual_logical(a)))


def test_verdict_invariant_under_trivial_loops():
    cx = build_rhg(4)
    rng = np.random.default_rng(9)
    for _ in range(20):
        actual = sample_fch_errors(cx, 0.9, rng)
        corr = mwpm_decode(cx, extract_syndrome(cx, actual))
        ok = decode_verdict(cx, actual, corr)
        shifted = ErrorChain(corr.primal.copy(), corr.dual.copy())
        for e in rng.choice(cx.n_edges, 5, replace=False):
            shifted.primal[cx.edge_faces[e]] ^= True
        for f in rng.choice(cx.n_faces, 5, replace=False):
            shifted.dual[cx.face_edges[f]] ^= True
        assert decode_verdict(cx, actual, shifted) == ok


def test_verdict_rejects_mismatched_correction():
    cx = build_rhg(3)
    with pytest.raises(ValueError):
        decode_verdict(cx, ErrorChain.from_indices(cx, primal=[0]), ErrorChain.empty(cx))


def test_low_noise_rarely_fails():
    cx = build_rhg(6)
    rng = np.random.default_rng(3)
    fails = sum(logical_failure(cx, sample_fch_errors(cx, 1 / 0.3, rng)) for _ in range(50))
    assert fails == 0


# --- cRPGM ------------------------------------------------------------------


def test_ferromagnetic_ground_energy():
    cx = build_rhg(3)
    E = crpgm_energy(cx, QuenchedDisorder.ferromagnetic(cx), GaugeConfig.ones(cx))
    assert E == -len(cx.pairs)
    assert ising_energy(cx, ErrorChain.empty(cx)) == -len(cx.pairs)


def test_single_error_raises_energy_by_twice_its_degree():
    cx = build_rhg(3)
    base = -len(cx.pairs)
    assert ising_energy(cx, ErrorChain.from_indices(cx, primal=[5])) == base + 2 * 4
    assert ising_energy(cx, ErrorChain.from_indices(cx, dual=[5])) == base + 2 * 4


def test_gauge_invariance():
    cx = build_rhg(3)
    rng = np.random.default_rng(1)
    dis = QuenchedDisorder.from_chain(sample_fch_errors(cx, 0.5, rng))
    sigma = GaugeConfig.random(cx, rng)
    E0 = crpgm_energy(cx, dis, sigma)
    syn0 = extract_syndrome(cx, dis.to_chain())
    w0 = homology_winding(cx, dis.to_chain() ^ dis.to_chain())
    for _ in range(100):
        g = GaugeConfig.random(cx, rng)
        moved = dis.gauge_transform(cx, g)
        assert crpgm_energy(cx, moved, compose(sigma, g)) == E0
        # gauge moves keep the syndrome and the homology class of the disorder chain
        assert extract_syndrome(cx, moved.to_chain()) == syn0
        assert np.array_equal(homology_winding(cx, moved.to_chain() ^ dis.to_chain()), w0)


def test_gauge_flip_is_local():
    cx = build_rhg(3)
    rng = np.random.default_rng(2)
    dis = QuenchedDisorder.from_chain(sample_fch_errors(cx, 0.5, rng))
    g = GaugeConfig.ones(cx)
    E0 = crpgm_energy(cx, dis, g)
    for e in range(0, cx.n_edges, 7):
        h = GaugeConfig(g.sigma.copy(), g.sigma_bar.copy())
        h.sigma[e] = -1
        # one sigma_e touches the 4 faces around e, each in 4 pairs
        assert abs(crpgm_energy(cx, dis, h) - E0) <= 2 * 16


def test_gauge_chain_tracks_energy_and_class():
    cx = build_rhg(3)
    rng = np.random.default_rng(4)
    start = sample_fch_errors(cx, 0.6, rng)
    dis = QuenchedDisorder.from_chain(start)
    chain = GaugeChain(cx, dis, 0.7, 5)
    chain.sweep(30)
    assert chain.energy == pytest.approx(crpgm_energy(cx, dis, chain.gauge))
    now = ErrorChain(chain.a < 0, chain.b < 0)
    assert extract_syndrome(cx, now) == extract_syndrome(cx, start)
    assert not homology_winding(cx, now ^ start).any()


def test_gauge_chain_zero_temperature_ferromagnet_frozen():
    cx = build_rhg(3)
    chain = GaugeChain(cx, QuenchedDisorder.ferromagnetic(cx), math.inf, 0)
    chain.sweep(10)
    assert chain.energy == -len(cx.pairs)
    assert np.all(chain.gauge.sigma == 1) and np.all(chain.gauge.sigma_bar == 1)


def test_internal_energy_error_and_validation():
    cx = build_rhg(2)
    with pytest.raises(ValueError):
        crpgm_internal_energy(cx, 0.5, [], McSchedule(1, 2))
    dis = [QuenchedDisorder.ferromagnetic(cx)] * 3
    u = crpgm_internal_energy(cx, math.inf, dis, McSchedule(2, 4))
    assert u.mean == -len(cx.pairs) and u.stderr == 0.0


def test_homology_classes():
    cl = homology_classes()
    assert len(cl) == 16 and cl[0] == (None, None)
    cx = build_rhg(3)
    for c in cl:
        bits = homology_winding(cx, logical_representative(cx, c))
        p, d = c
        assert bits[:3].sum() == (p is not None) and bits[3:].sum() == (d is not None)


def test_free_energy_empty_syndrome_picks_trivial_class():
    cx = build_rhg(3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", McWarning)
        res = free_energy_decode(cx, Syndrome.empty(cx), ErrorChain.empty(cx), 1 / 0.6, McSchedule(200, 400, seed=1), n_ladder=11)
    assert res.best_class == (None, None)
    assert res.probabilities.sum() == pytest.approx(1.0)
    assert res.probabilities[res.best] > 0.9
    assert res.beta_f.shape == (16,)


def test_free_energy_rejects_wrong_reference():
    cx = build_rhg(2)
    syn = Syndrome.empty(cx)
    with pytest.raises(ValueError):
        free_energy_decode(cx, syn, ErrorChain.from_indices(cx, primal=[0]), 1.0, McSchedule(1, 2))
