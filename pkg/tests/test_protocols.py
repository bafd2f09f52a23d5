import math

import numpy as np
import pytest
import scipy.linalg

from lightcones.lattice import LatticeGraph
from lightcones.protocols import (
    GuaranteeError,
    build_spreading_protocol,
    commutator_lower_bound,
    connected_correlator,
    connected_correlator_dense,
    copy_cascade_segments,
    correlator_lower_bound,
    ghz_duration_exponent,
    ghz_transfer_fidelity,
    ghz_transfer_schedule,
    matrix_element_a,
    run_spreading_experiment,
    spreading_parameters,
)
from lightcones.spin import (
    OperatorState,
    Schedule,
    evolve_operator,
    validate_envelope,
)


def test_spreading_parameters_examples():
    p = spreading_parameters(10, 3.0, 2.0)
    assert p.ell == 1 and p.V == 3
    assert np.isclose(p.tau, 1.0 / 20.0**2.0)
    with pytest.raises(ValueError):
        spreading_parameters(4, 6.0, 2.0)  # ell = 2 >= r/2
    with pytest.raises(ValueError):
        spreading_parameters(10, 4.0, 2.0)  # t/3 not an integer


def test_commutator_lower_bound_values():
    assert np.isclose(commutator_lower_bound(3.0, 10, 3.0, 1), 6.25e-5)
    assert np.isclose(commutator_lower_bound(3.0, 10, 5.0, 2), 1.5625e-7)
    # t^(2d+1) scaling at fixed r
    lo = commutator_lower_bound(3.0, 30, 3.0, 1)
    hi = commutator_lower_bound(6.0, 30, 3.0, 1)
    assert np.isclose(hi / lo, 2.0**3)
    with pytest.raises(GuaranteeError):
        commutator_lower_bound(3.0, 10, 0.4, 1)  # V^2 tau too large
    with pytest.raises(GuaranteeError):
        commutator_lower_bound(2.0, 10, 3.0, 1)


def test_matrix_element_a():
    assert matrix_element_a(0.0, 5) == 0.0
    tau = 0.013
    assert np.isclose(matrix_element_a(tau, 1), -2j * math.sin(2 * tau), atol=1e-15)
    # independent closed form: |a| = 2 |sin(2 tau V^2)|
    for v in (1, 3, 5, 9):
        a = matrix_element_a(tau, v)
        assert np.isclose(abs(a), 2 * abs(math.sin(2 * tau * v**2)), atol=1e-12)


def test_cascade_spreads_x_string():
    lat = LatticeGraph.chain(7)
    sched = Schedule(7, copy_cascade_segments(lat, 3, 2))
    out = evolve_operator(OperatorState.single_pauli(7, 3, "X"), sched)
    assert set(out.strings.keys()) == {"IXXXXXI"}
    assert np.isclose(out.strings["IXXXXXI"], 1.0, atol=1e-12)


def test_cascade_z_copy_spreads_z_string():
    lat = LatticeGraph.chain(5)
    sched = Schedule(5, copy_cascade_segments(lat, 2, 1, z_copy=True))
    out = evolve_operator(OperatorState.single_pauli(5, 2, "Z"), sched)
    assert set(out.strings.keys()) == {"IZZZI"}
    assert np.isclose(out.strings["IZZZI"], 1.0, atol=1e-12)


def test_cascade_fixes_zero_background():
    from lightcones.spin import SpinState, evolve_state

    lat = LatticeGraph.chain(6)
    sched = Schedule(6, copy_cascade_segments(lat, 2, 2))
    out = evolve_state(SpinState.computational(6), sched)
    assert np.isclose(abs(out.amplitudes[0]), 1.0, atol=1e-12)


def test_schedule_passes_envelope():
    sched, params = build_spreading_protocol(10, 3.0, 3.0)
    lat = LatticeGraph.chain(sched.n_sites)
    report = validate_envelope(sched, lat, alpha=3.0, h=1.0)
    assert report.passed, report


def test_step2_unitary_is_commuting_product():
    # the coupling segment exponential equals the product of per-site factors
    sched, params = build_spreading_protocol(7, 3.0, 3.0)
    zz_index = params.ell  # after the cascade shells
    duration, terms = sched.segments[zz_index]
    assert all(len(t.support) == 2 for t in terms)
    h_full = sched.segment_matrix(zz_index)
    u_full = scipy.linalg.expm(-1j * duration * h_full)
    per_site = {}
    for t in terms:
        per_site.setdefault(t.support[0], []).append(t)
    prod = np.eye(2**sched.n_sites, dtype=complex)
    for j, terms_j in per_site.items():
        hj = sum(
            Schedule(sched.n_sites, [(1.0, [t])]).segment_matrix(0) for t in terms_j
        )
        uj = scipy.linalg.expm(-1j * duration * hj)
        assert np.allclose(hj @ h_full, h_full @ hj, atol=1e-12)
        prod = prod @ uj
    assert np.max(np.abs(prod - u_full)) < 1e-10


def test_spreading_dense_cross_validation():
    # full-schedule simulation at ell = 1 matches the block closed form
    for alpha, t in ((3.0, 3.0), (2.0, 3.0)):
        res = run_spreading_experiment(7, t, alpha, dense_check=True)
        assert res.dense_norm is not None
        assert np.isclose(res.dense_norm, res.exact_norm, atol=1e-9)
        assert res.exact_norm >= res.lower_bound


def test_spreading_dominance_grid():
    for t in (3.0, 6.0):
        for r in (8, 10, 14):
            for alpha in (2.0, 2.5, 3.0):
                res = run_spreading_experiment(r, t, alpha)
                assert res.params.guaranteed
                assert res.exact_norm >= res.lower_bound


def test_correlator_values_and_dense_check():
    # closed form matches the six-site state-vector experiment
    for alpha, t, r in ((3.0, 3.0, 10), (2.0, 3.0, 8), (2.5, 3.0, 14)):
        closed = connected_correlator(t, r, alpha)
        dense = connected_correlator_dense(t, r, alpha)
        assert np.isclose(closed, dense, atol=1e-10), (alpha, t, r)
        assert closed >= correlator_lower_bound(t, r, alpha)
    assert np.isclose(correlator_lower_bound(3.0, 10, 3.0), 3.125e-5)


def test_correlator_zero_at_zero_coupling():
    # tau -> 0 as r -> infinity; directly: t small is not allowed (t/3 int),
    # so check via the closed form at vanishing tau through matrix_element_a
    assert abs(matrix_element_a(0.0, 3)) == 0.0


def test_ghz_duration_exponents():
    assert np.isclose(ghz_duration_exponent(2.6, 1, "plain"), 2.6 / 3)
    assert np.isclose(
        ghz_duration_exponent(2.6, 1, "boosted"), 2.6 * 1.6 / 3.6
    )
    with pytest.raises(ValueError):
        ghz_duration_exponent(2.6, 1, "fast")


def test_ghz_transfer_zero_fixed_point():
    sched, info = ghz_transfer_schedule(8, 1, 6, alpha=2.6)
    fid = ghz_transfer_fidelity(sched, 1, 6, 1.0, 0.0)
    assert fid > 1 - 1e-9


def test_ghz_transfer_exact_fidelity():
    sched, info = ghz_transfer_schedule(12, 1, 9, alpha=2.6)
    assert info.ell == 1
    for a, b in ((0.0, 1.0), (0.6, 0.8), (1 / math.sqrt(2), 1j / math.sqrt(2)), (0.3, 0.8 - 0.52j)):
        fid = ghz_transfer_fidelity(sched, 1, 9, a, b)
        assert fid > 1 - 1e-9, (a, b, fid)


def test_ghz_transfer_two_shell_blocks():
    # ell = 2 exercises multi-shell cascades and their exact inverses
    sched, info = ghz_transfer_schedule(13, 2, 10, alpha=2.6, ell=2)
    assert info.ell == 2
    fid = ghz_transfer_fidelity(sched, 2, 10, 0.6, 0.8j)
    assert fid > 1 - 1e-9, fid


def test_spreading_dominance_d2_closed_form():
    # the closed form covers higher dimensions through the ball volume
    for t, r, alpha in ((3.0, 10, 4.0), (6.0, 14, 5.0)):
        res = run_spreading_experiment(r, t, alpha, d=2)
        assert res.params.V in (5, 13)  # interior ball volumes in d = 2
        assert res.params.guaranteed
        assert res.exact_norm >= res.lower_bound


def test_ghz_transfer_envelope():
    sched, _ = ghz_transfer_schedule(12, 1, 9, alpha=2.6, h=1.0)
    lat = LatticeGraph.chain(12)
    assert validate_envelope(sched, lat, alpha=2.6, h=1.0).passed


def test_ghz_transfer_geometry_errors():
    with pytest.raises(ValueError):
        ghz_transfer_schedule(6, 0, 2, alpha=2.6)  # too close
    with pytest.raises(ValueError):
        ghz_transfer_schedule(6, 0, 5, alpha=2.6)  # no room for the blocks
