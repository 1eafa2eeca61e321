import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfacelab.code import build_planar_code, build_toric_code
from surfacelab.noise import SpacetimeErrorHistory, sample_phenomenological, trial_rng
from surfacelab.syndrome import (
    dump_history,
    extract_monopoles,
    incidence,
    load_history,
    measure_history,
)


def test_empty_history_trivial_syndrome():
    code = build_toric_code(4)
    sh = measure_history(code, SpacetimeErrorHistory.empty(code, 5))
    assert not sh.site.any() and not sh.plaquette.any()
    assert sh.rounds == 6
    ev = extract_monopoles(sh)
    assert len(ev) == 0


def test_persistent_qubit_error():
    code = build_toric_code(5)
    lat = code.lattice
    h = SpacetimeErrorHistory.empty(code, 6)
    link = lat.index(1, (1, 1), (0,))
    h.z_errors[3, link] = True
    sh = measure_history(code, h)
    ends = sorted(lat.faces(1)[link])
    for t in range(sh.rounds):
        assert sorted(np.flatnonzero(sh.site[t])) == (ends if t >= 3 else [])
    ev = extract_monopoles(sh)
    assert ev.as_set("site") == {(int(e), 3) for e in ends}
    assert len(ev.plaquette) == 0


def test_isolated_measurement_error():
    code = build_toric_code(5)
    h = SpacetimeErrorHistory.empty(code, 6)
    h.site_misreads[2, 7] = True
    sh = measure_history(code, h)
    assert np.array_equal(np.flatnonzero(sh.site[:, 7]), [2])
    assert sh.site.sum() == 1
    assert extract_monopoles(sh).as_set("site") == {(7, 2), (7, 3)}


def test_without_perfect_round():
    code = build_toric_code(3)
    h = SpacetimeErrorHistory.empty(code, 4)
    h.site_misreads[3, 0] = True
    sh = measure_history(code, h, final_round_perfect=False)
    assert sh.rounds == 4
    assert extract_monopoles(sh).as_set("site") == {(0, 3)}


def test_closed_spacetime_loop_leaves_events_unchanged():
    code = build_toric_code(5)
    lat = code.lattice
    base = sample_phenomenological(code, 0.05, 0.05, 6, trial_rng(2, 0))
    loop = SpacetimeErrorHistory.empty(code, 6)
    # error on a link at t=1, undone at t=4, with both end checks misread in
    # between so the records never change
    link = lat.index(1, (2, 2), (1,))
    loop.z_errors[1, link] = loop.z_errors[4, link] = True
    for t in range(1, 4):
        loop.site_misreads[t, lat.faces(1)[link]] = True
    ev0 = extract_monopoles(measure_history(code, base))
    ev1 = extract_monopoles(measure_history(code, base ^ loop))
    assert ev0.as_set("site") == ev1.as_set("site")
    assert ev0.as_set("plaquette") == ev1.as_set("plaquette")


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(1, 6), st.floats(0, 0.3), st.integers(0, 2**31))
def test_event_count_even_on_torus(L, T, p, seed):
    code = build_toric_code(L)
    h = sample_phenomenological(code, p, p, T, trial_rng(seed, 0))
    ev = extract_monopoles(measure_history(code, h))
    assert len(ev.site) % 2 == 0 and len(ev.plaquette) % 2 == 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["toric", "planar"]), st.integers(2, 6), st.integers(1, 5), st.integers(0, 2**31))
def test_events_are_linear(kind, L, T, seed):
    code = build_toric_code(L) if kind == "toric" else build_planar_code(L)
    a = sample_phenomenological(code, 0.1, 0.1, T, trial_rng(seed, 0))
    b = sample_phenomenological(code, 0.1, 0.1, T, trial_rng(seed, 1))
    ea = extract_monopoles(measure_history(code, a))
    eb = extract_monopoles(measure_history(code, b))
    eab = extract_monopoles(measure_history(code, a ^ b))
    for ct in ("site", "plaquette"):
        assert eab.as_set(ct) == ea.as_set(ct) ^ eb.as_set(ct)


def test_events_sorted_by_round_then_check():
    code = build_toric_code(6)
    h = sample_phenomenological(code, 0.1, 0.1, 5, trial_rng(0, 0))
    ev = extract_monopoles(measure_history(code, h))
    keys = [(t, c) for c, t in ev.site]
    assert keys == sorted(keys)


def test_incidence_shapes():
    code = build_planar_code(4)
    assert incidence(code, "site").shape == (len(code.x_checks), code.n_qubits)
    assert incidence(code, "plaquette").shape == (len(code.z_checks), code.n_qubits)


@pytest.mark.parametrize("check_type", ["site", "plaquette"])
def test_binary_roundtrip(check_type):
    code = build_planar_code(5)
    h = sample_phenomenological(code, 0.1, 0.1, 7, trial_rng(4, 0))
    sh = measure_history(code, h)
    header, rec = load_history(dump_history(sh, check_type))
    assert header["L"] == 5 and header["T"] == 8 and header["check_type"] == check_type
    assert header["kind"] == "planar" and header["final_round_perfect"] is True
    assert np.array_equal(rec, sh.records(check_type))


def test_binary_rejects_unknown_version():
    code = build_toric_code(3)
    sh = measure_history(code, SpacetimeErrorHistory.empty(code, 2))
    blob = bytearray(dump_history(sh, "site"))
    blob = blob.replace(b'"version": 1', b'"version": 9')
    with pytest.raises(ValueError):
        load_history(bytes(blob))
