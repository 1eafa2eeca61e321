import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfacelab.code import build_planar_code, build_toric_code
from surfacelab.decoder import (
    DecoderConfig,
    WindowState,
    coset_label,
    decode_2d,
    decode_3d,
    decode_events,
    decode_ml,
    decode_windowed,
    exact_failure_probability,
    readout_logical,
    scaled_weight,
    sector_geometry,
    window_flush,
    window_step,
)
from surfacelab.homology import Chain, boundary, coboundary
from surfacelab.noise import SpacetimeErrorHistory, sample_phenomenological, trial_rng
from surfacelab.syndrome import MonopoleSet, extract_monopoles, measure_history


def build(kind, L):
    return build_toric_code(L) if kind == "toric" else build_planar_code(L)


def defects_of(code, chain, sector):
    return boundary(chain, code.lattice) if sector == "Z" else coboundary(chain, code.lattice)


# --- configuration ---------------------------------------------------------


def test_scaled_weights():
    assert scaled_weight(0.1) == round(1e6 * math.log(9))
    cfg = DecoderConfig(p=0.1, q=0.2)
    assert cfg.int_weight_h == 2197225
    assert cfg.int_weight_v == round(1e6 * math.log(4))
    assert DecoderConfig(p=0.1).int_weight_v is None


@pytest.mark.parametrize("p,q", [(0, 0.1), (0.5, 0.1), (0.1, 0.5), (0.1, -0.1)])
def test_config_rejects_bad_priors(p, q):
    with pytest.raises(ValueError):
        DecoderConfig(p=p, q=q)


# --- 2D decoding -------------------------------------------------------------


def test_no_defects_no_correction():
    code = build_toric_code(6)
    assert len(decode_2d(code, Chain(0))) == 0
    assert len(decode_2d(code, Chain(2))) == 0


def test_two_defects_two_apart_on_torus():
    code = build_toric_code(8)
    lat = code.lattice
    a, b = lat.index(0, (2, 3)), lat.index(0, (4, 3))
    corr = decode_2d(code, Chain(0, [a, b]), DecoderConfig(p=0.05))
    assert len(corr) == 2
    assert boundary(corr, lat) == Chain(0, [a, b])
    # the graph distance agrees
    g = nx.Graph([tuple(e) for e in lat.faces(1)])
    assert nx.shortest_path_length(g, a, b) == 2


def test_planar_defect_next_to_rough_edge():
    code = build_planar_code(3)
    lat = code.lattice
    s = lat.index(0, (1, 1))
    corr = decode_2d(code, Chain(0, [s]))
    assert len(corr) == 1
    assert boundary(corr, lat) == Chain(0, [s])


@pytest.mark.parametrize("sector", ["Z", "X"])
def test_planar_L3_minimal_for_every_syndrome(sector):
    # exhaustive minimal-chain oracle over all 2^13 patterns
    code = build_planar_code(3)
    lat = code.lattice
    n = code.n_qubits
    best = {}
    for bits in range(2**n):
        chain = Chain(1, [i for i in range(n) if bits >> i & 1])
        key = defects_of(code, chain, sector)
        if key not in best or len(chain) < best[key]:
            best[key] = len(chain)
    assert len(best) == 2 ** (len(code.x_checks) if sector == "Z" else len(code.z_checks))
    for syn, w in best.items():
        corr = decode_2d(code, syn)
        assert defects_of(code, corr, sector) == syn
        assert len(corr) == w


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(["toric", "planar"]),
    st.integers(3, 10),
    st.sampled_from(["Z", "X"]),
    st.floats(0.01, 0.2),
    st.integers(0, 2**31),
)
def test_2d_boundary_and_minimality(kind, L, sector, p, seed):
    code = build(kind, L)
    rng = np.random.default_rng(seed)
    err = Chain.from_mask(1, rng.random(code.n_qubits) < p)
    syn = defects_of(code, err, sector)
    corr = decode_2d(code, syn, DecoderConfig(p=min(p, 0.49)))
    assert defects_of(code, corr, sector) == syn
    assert len(corr) <= len(err)


def test_raw_indices_need_sector():
    code = build_toric_code(4)
    with pytest.raises(ValueError):
        decode_2d(code, np.array([0, 1]))
    assert len(decode_2d(code, np.array([0, 1]), sector="Z")) == 1


def test_paths_are_x_first():
    code = build_toric_code(6)
    lat = code.lattice
    geo = sector_geometry(code, "Z")
    a, b = lat.index(0, (1, 1)), lat.index(0, (3, 2))
    path = geo.path(a, b)
    axes = [lat.cell(1, link)[1][0] for link in path]
    assert axes == [0, 0, 1]


# --- 3D decoding -------------------------------------------------------------


def test_single_measurement_error_needs_no_correction():
    code = build_toric_code(5)
    h = SpacetimeErrorHistory.empty(code, 4)
    h.site_misreads[1, 6] = True
    ev = extract_monopoles(measure_history(code, h))
    assert len(decode_3d(code, ev, DecoderConfig(p=0.05, q=0.05))) == 0


def test_persistent_qubit_error_corrected_on_its_link():
    code = build_toric_code(3)
    h = SpacetimeErrorHistory.empty(code, 3)
    h.z_errors[1, 4] = True
    ev = extract_monopoles(measure_history(code, h))
    assert list(decode_3d(code, ev, DecoderConfig(p=0.05, q=0.05)).cells) == [4]


def test_empty_events():
    code = build_planar_code(4)
    ev = MonopoleSet(np.zeros((0, 2), np.int64), np.zeros((0, 2), np.int64), 3)
    assert len(decode_3d(code, ev, DecoderConfig(p=0.1, q=0.1))) == 0


def _spacetime_oracle(code, ev, wh, wv, sector):
    # networkx shortest paths on the explicit spacetime graph, then an
    # external max-weight matching
    lat = code.lattice
    ends = lat.faces(1) if sector == "Z" else lat.cofaces(1)
    T = int(ev[:, 1].max()) + 1 if len(ev) else 1
    g = nx.Graph()
    for t in range(T):
        for a, b in ends:
            u = ("B",) if a < 0 else (int(a), t)
            v = ("B",) if b < 0 else (int(b), t)
            g.add_edge(u, v, weight=wh)
        if t + 1 < T:
            n_checks = len(code.x_checks) if sector == "Z" else len(code.z_checks)
            for c in range(n_checks):
                g.add_edge((c, t), (c, t + 1), weight=wv)
    nodes = [(int(c), int(t)) for c, t in ev]
    dist = {u: nx.single_source_dijkstra_path_length(g, u) for u in nodes}
    m = nx.Graph()
    big = 10**12
    for i, j in itertools.combinations(range(len(nodes)), 2):
        m.add_edge(i, j, weight=big - dist[nodes[i]][nodes[j]])
    if not lat.periodic:
        for i in range(len(nodes)):
            m.add_edge(i, ("v", i), weight=big - dist[nodes[i]][("B",)])
            for j in range(i):
                m.add_edge(("v", i), ("v", j), weight=big)
    mate = nx.max_weight_matching(m, maxcardinality=True)
    total = 0
    for a, b in mate:
        if isinstance(a, tuple) and isinstance(b, tuple):
            continue
        if isinstance(a, tuple) or isinstance(b, tuple):
            i = b if isinstance(a, tuple) else a
            total += dist[nodes[i]][("B",)]
        else:
            total += dist[nodes[a]][nodes[b]]
    return total


def _my_cost(code, res, wh, wv, sector):
    geo = sector_geometry(code, sector)
    total = 0
    for a, b in res.pairs:
        ca, ta = res.events[a]
        if b == -1:
            total += int(geo.boundary_distance(np.array([ca]))[0]) * wh
        else:
            cb, tb = res.events[b]
            total += int(geo.spatial_distance(np.array([ca]), np.array([cb]))[0]) * wh + abs(ta - tb) * wv
    return total


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["toric", "planar"]), st.sampled_from(["Z", "X"]), st.integers(0, 2**31))
def test_3d_matches_spacetime_oracle(kind, sector, seed):
    code = build(kind, 3)
    h = sample_phenomenological(code, 0.08, 0.08, 3, trial_rng(seed, 0))
    ev = extract_monopoles(measure_history(code, h)).sector(sector)
    cfg = DecoderConfig(p=0.08, q=0.05)
    res = decode_events(code, ev, cfg, sector)
    wh, wv = cfg.int_weight_h, cfg.int_weight_v
    assert _my_cost(code, res, wh, wv, sector) == _spacetime_oracle(code, ev, wh, wv, sector)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["toric", "planar"]), st.integers(3, 8), st.sampled_from(["Z", "X"]), st.integers(0, 2**31))
def test_3d_correction_clears_final_syndrome(kind, L, sector, seed):
    code = build(kind, L)
    h = sample_phenomenological(code, 0.04, 0.04, L, trial_rng(seed, 0))
    ev = extract_monopoles(measure_history(code, h))
    cfg = DecoderConfig(p=0.04, q=0.04)
    corr = decode_3d(code, ev, cfg, sector)
    qubits, _ = h.sector(sector)
    net = Chain.from_mask(1, np.bitwise_xor.reduce(qubits, axis=0))
    assert len(defects_of(code, net + corr, sector)) == 0


# --- maximum likelihood --------------------------------------------------------


def test_ml_trivial_syndrome():
    code = build_planar_code(3)
    assert decode_ml(code, Chain(0), 0.01).trivial


def test_ml_single_error_class():
    code = build_planar_code(3)
    for link in range(code.n_qubits):
        e = Chain(1, [link])
        syn = boundary(e, code.lattice)
        assert decode_ml(code, syn, 0.1) == coset_label(code, e, "Z")


def test_ml_tie_at_half():
    code = build_planar_code(3)
    lat = code.lattice
    syn = boundary(Chain(1, [5]), lat)
    assert decode_ml(code, syn, 0.5).trivial


def test_ml_rejects_large_codes():
    with pytest.raises(ValueError):
        decode_ml(build_planar_code(4), Chain(0), 0.1)


@pytest.mark.parametrize("p", [0.05, 0.10, 0.15])
def test_ml_dominates_mwpm(p):
    code = build_planar_code(3)
    ml = exact_failure_probability(code, p, "ml")
    mw = exact_failure_probability(code, p, "mwpm")
    assert 0 < ml <= mw


def test_exact_failure_sector_symmetry():
    # the planar layout is self-dual, so ML failure is equal in both sectors;
    # MWPM breaks ties between equal-weight corrections differently per sector
    code = build_planar_code(3)
    z = exact_failure_probability(code, 0.1, "ml", "Z")
    x = exact_failure_probability(code, 0.1, "ml", "X")
    assert z == pytest.approx(x, abs=1e-12)
    for sector in ("Z", "X"):
        assert exact_failure_probability(code, 0.1, "mwpm", sector) >= z


# --- overlapping windows -------------------------------------------------------


def test_window_empty():
    code = build_toric_code(5)
    corr, st_ = window_step(WindowState(3), code, np.zeros((0, 2)), DecoderConfig(p=0.05, q=0.05))
    assert len(corr) == 0 and len(st_.events) == 0 and st_.t_end == 3


def test_window_finalizes_old_pair():
    code = build_toric_code(6)
    lat = code.lattice
    a, b = lat.index(0, (1, 1)), lat.index(0, (2, 1))
    cfg = DecoderConfig(p=0.05, q=0.05)
    state = WindowState(2)
    corr, state = window_step(state, code, [[a, 0], [b, 0]], cfg)
    assert len(corr) == 0 and len(state.events) == 2  # still in the newest rounds
    corr, state = window_step(state, code, np.zeros((0, 2)), cfg)
    assert list(corr.cells) == [lat.index(1, (1, 1), (0,))]
    assert len(state.events) == 0


def test_window_retains_pair_reaching_new_rounds():
    code = build_toric_code(6)
    lat = code.lattice
    a = lat.index(0, (1, 1))
    cfg = DecoderConfig(p=0.05, q=0.05)
    corr, state = window_step(WindowState(2), code, [[a, 1]], cfg)
    corr, state = window_step(state, code, [[a, 2]], cfg)
    assert len(corr) == 0
    assert state.events.tolist() == [[a, 1], [a, 2]]


def test_window_rejects_misplaced_events():
    code = build_toric_code(4)
    with pytest.raises(ValueError):
        window_step(WindowState(2, t_end=4), code, [[0, 1]], DecoderConfig(p=0.1, q=0.1))


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["toric", "planar"]),
    st.integers(3, 8),
    st.integers(1, 6),
    st.integers(1, 8),
    st.sampled_from(["Z", "X"]),
    st.integers(0, 2**31),
)
def test_window_equivalence_without_measurement_errors(kind, L, T_hist, T_win, sector, seed):
    # errors present before the first readout, perfect readouts afterwards
    code = build(kind, L)
    rng = np.random.default_rng(seed)
    h = SpacetimeErrorHistory.empty(code, T_hist)
    qubits, _ = h.sector(sector)
    qubits[0] = rng.random(code.n_qubits) < 0.1
    ev = extract_monopoles(measure_history(code, h))
    cfg = DecoderConfig(p=0.1, q=0.0, window_T=T_win)
    net = Chain.from_mask(1, qubits[0])
    assert decode_windowed(code, ev, cfg, sector) == decode_2d(code, defects_of(code, net, sector), cfg)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["toric", "planar"]), st.integers(3, 7), st.integers(0, 2**31))
def test_single_window_replays_one_shot_decode(kind, L, seed):
    code = build(kind, L)
    h = sample_phenomenological(code, 0.04, 0.04, L, trial_rng(seed, 0))
    ev = extract_monopoles(measure_history(code, h))
    cfg = DecoderConfig(p=0.04, q=0.04, window_T=L)
    assert decode_windowed(code, ev, cfg) == decode_3d(code, ev, cfg)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["toric", "planar"]),
    st.integers(3, 8),
    st.integers(1, 4),
    st.sampled_from(["Z", "X"]),
    st.integers(0, 2**31),
)
def test_windowed_correction_clears_final_syndrome(kind, L, T_win, sector, seed):
    code = build(kind, L)
    h = sample_phenomenological(code, 0.03, 0.03, 2 * L, trial_rng(seed, 0))
    ev = extract_monopoles(measure_history(code, h))
    corr = decode_windowed(code, ev, DecoderConfig(p=0.03, q=0.03, window_T=T_win), sector)
    qubits, _ = h.sector(sector)
    net = Chain.from_mask(1, np.bitwise_xor.reduce(qubits, axis=0))
    assert len(defects_of(code, net + corr, sector)) == 0


def test_flush_with_no_events():
    code = build_toric_code(4)
    assert len(window_flush(WindowState(2), code, np.zeros((0, 2)), DecoderConfig(p=0.1, q=0.1))) == 0


# --- readout -------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["toric", "planar"])
def test_readout_examples(kind):
    code = build(kind, 5)
    n = code.n_qubits
    zero = np.zeros(n, bool)
    assert readout_logical(code, zero) == 0
    one_flip = zero.copy()
    one_flip[7] = True
    assert readout_logical(code, one_flip) == 0
    logical_one = code.logical_x[0].mask(n)
    assert readout_logical(code, logical_one) == 1
    noisy = logical_one.copy()
    noisy[3] ^= True
    assert readout_logical(code, noisy) == 1
    # X basis reads the other logical operator
    assert readout_logical(code, code.logical_z[0].mask(n), basis="X") == 1


def test_readout_rejects_wrong_length():
    with pytest.raises(ValueError):
        readout_logical(build_planar_code(3), np.zeros(5))
