import numpy as np
import pytest

from lightcones.lattice import LatticeGraph, Region
from lightcones.spin import (
    HamiltonianTerm,
    OperatorState,
    PAULI,
    Schedule,
    SpinState,
    commutator,
    evolve_operator,
    evolve_state,
    frobenius_norm,
    ground_state_correlator,
    operator_norm,
    otoc_weight,
    pauli_matrix,
    project_PX,
    project_PX_alternating,
    project_Qx,
    right_weight_distribution,
    validate_envelope,
)


def random_hermitian_strings(n_sites, n_terms, rng):
    labels = ["".join(rng.choice(list("IXYZ"), size=n_sites)) for _ in range(n_terms)]
    return OperatorState.from_strings(
        n_sites, {lab: float(rng.normal()) for lab in labels}
    )


def x_op(n, site):
    return OperatorState.single_pauli(n, site, "X")


def z_op(n, site):
    return OperatorState.single_pauli(n, site, "Z")


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------


def test_pauli_matrix_basics():
    assert np.allclose(pauli_matrix("X"), PAULI["X"])
    xz = np.kron(PAULI["X"], PAULI["Z"])
    assert np.allclose(pauli_matrix("XZ"), xz)


def test_dense_string_roundtrip():
    rng = np.random.default_rng(1)
    op = random_hermitian_strings(3, 5, rng)
    dense = op.dense
    back = OperatorState.from_dense(3, dense)
    for label, c in op.strings.items():
        assert np.isclose(back.strings.get(label, 0.0), c, atol=1e-12)


def test_dual_representation_norms_agree():
    rng = np.random.default_rng(2)
    for _ in range(20):
        op = random_hermitian_strings(3, 4, rng)
        via_strings = frobenius_norm(op)
        via_dense = frobenius_norm(OperatorState.from_dense(3, op.dense))
        assert np.isclose(via_strings, via_dense, atol=1e-12)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def test_operator_norm_examples():
    assert np.isclose(operator_norm(x_op(2, 0)), 1.0)
    zero = OperatorState.from_dense(1, np.zeros((2, 2)))
    assert operator_norm(zero) == 0.0
    xz = x_op(1, 0) + z_op(1, 0)
    assert np.isclose(operator_norm(xz), np.sqrt(2.0))


def test_frobenius_norm_examples():
    ident = OperatorState.from_strings(2, {"II": 1.0})
    assert np.isclose(frobenius_norm(ident), 1.0)
    assert np.isclose(frobenius_norm(OperatorState.from_strings(2, {"XY": 3.0 - 4.0j})), 5.0)


def test_norm_ordering_random():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        dim = 2**n
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        m = m + m.conj().T
        op = OperatorState.from_dense(n, m)
        assert frobenius_norm(op) <= operator_norm(op) + 1e-12


def test_commutator_examples():
    assert operator_norm(commutator(x_op(1, 0), x_op(1, 0))) == 0.0
    c = commutator(x_op(1, 0), z_op(1, 0))
    assert np.allclose(c.dense, -2j * PAULI["Y"])
    disjoint = commutator(x_op(2, 0), z_op(2, 1))
    assert operator_norm(disjoint) == 0.0


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------


def test_evolve_state_empty_schedule():
    psi = SpinState.computational(3)
    out = evolve_state(psi, Schedule(3, []))
    assert np.allclose(out.amplitudes, psi.amplitudes)


def test_evolution_resource_caps():
    from lightcones.spin import DEFAULT_MAX_L, OPERATOR_MAX_L

    big = DEFAULT_MAX_L + 1
    with pytest.raises(ValueError):
        evolve_state(SpinState.computational(big), Schedule(big, []))
    big_op = OperatorState.single_pauli(OPERATOR_MAX_L + 1, 0, "X")
    with pytest.raises(ValueError):
        evolve_operator(big_op, Schedule(OPERATOR_MAX_L + 1, []))


def test_evolve_state_pi_pulse():
    h = 0.7
    sched = Schedule(2, [(np.pi / (2 * h), [HamiltonianTerm((0,), h * PAULI["X"])])])
    out = evolve_state(SpinState.computational(2), sched)
    # |00> -> -i |10>
    idx = 0b10
    assert np.isclose(abs(out.amplitudes[idx]), 1.0, atol=1e-12)
    assert np.isclose(out.norm(), 1.0, atol=1e-12)


def test_commuting_segments_order_independent():
    za = HamiltonianTerm((0, 1), np.kron(PAULI["Z"], PAULI["Z"]))
    zb = HamiltonianTerm((1, 2), np.kron(PAULI["Z"], PAULI["Z"]))
    rng = np.random.default_rng(5)
    amp = rng.normal(size=8) + 1j * rng.normal(size=8)
    amp /= np.linalg.norm(amp)
    psi = SpinState(amp)
    s1 = Schedule(3, [(0.3, [za]), (0.7, [zb])])
    s2 = Schedule(3, [(0.7, [zb]), (0.3, [za])])
    assert np.allclose(
        evolve_state(psi, s1).amplitudes, evolve_state(psi, s2).amplitudes, atol=1e-12
    )


def test_evolve_state_sparse_dense_agree():
    rng = np.random.default_rng(6)
    n = 10  # sparse path
    terms = [
        HamiltonianTerm((i, i + 1), np.kron(PAULI["X"], PAULI["X"]) * 0.3)
        for i in range(n - 1)
    ]
    sched = Schedule(n, [(0.4, terms)])
    psi = SpinState.computational(n)
    out = evolve_state(psi, sched)
    assert np.isclose(out.norm(), 1.0, atol=1e-10)
    # cross-check against dense exponential on the same segment
    import scipy.linalg

    hdense = sched.segment_matrix(0)
    expected = scipy.linalg.expm(-1j * 0.4 * hdense) @ psi.amplitudes
    assert np.allclose(out.amplitudes, expected, atol=1e-9)


def test_evolve_operator_identity_at_t0():
    op = z_op(2, 0)
    out = evolve_operator(op, Schedule(2, []))
    assert np.allclose(out.dense, op.dense)


def test_evolve_operator_commuting_is_fixed():
    zz = HamiltonianTerm((0, 1), np.kron(PAULI["Z"], PAULI["Z"]))
    sched = Schedule(2, [(1.3, [zz])])
    out = evolve_operator(z_op(2, 0), sched)
    assert np.allclose(out.dense, z_op(2, 0).dense, atol=1e-12)


def test_evolve_operator_single_spin_closed_form():
    # oracle: U Z U' with U = exp(-i h t X) equals cos(2ht) Z - sin(2ht) Y
    h, t = 0.9, 0.37
    sched = Schedule(1, [(t, [HamiltonianTerm((0,), h * PAULI["X"])])])
    out = evolve_operator(z_op(1, 0), sched)
    expected = np.cos(2 * h * t) * PAULI["Z"] - np.sin(2 * h * t) * PAULI["Y"]
    assert np.allclose(out.dense, expected, atol=1e-12)


def test_operator_evolution_is_frobenius_isometry():
    rng = np.random.default_rng(7)
    op = random_hermitian_strings(3, 6, rng)
    terms = [
        HamiltonianTerm((0, 1), rng.normal() * np.kron(PAULI["X"], PAULI["Z"])),
        HamiltonianTerm((1, 2), rng.normal() * np.kron(PAULI["Y"], PAULI["Y"])),
        HamiltonianTerm((2,), rng.normal() * PAULI["X"]),
    ]
    sched = Schedule(3, [(0.21, terms), (0.55, terms[:2])])
    out = evolve_operator(op, sched)
    assert np.isclose(frobenius_norm(out), frobenius_norm(op), atol=1e-10)


def test_pushforward_preserves_expectations():
    # <psi(t)| U O U' |psi(t)> = <psi|O|psi>
    rng = np.random.default_rng(8)
    amp = rng.normal(size=8) + 1j * rng.normal(size=8)
    amp /= np.linalg.norm(amp)
    psi = SpinState(amp)
    op = random_hermitian_strings(3, 5, rng)
    sched = Schedule(
        3, [(0.6, [HamiltonianTerm((0, 2), np.kron(PAULI["X"], PAULI["Y"]))])]
    )
    lhs = np.vdot(
        evolve_state(psi, sched).amplitudes,
        evolve_operator(op, sched).dense @ evolve_state(psi, sched).amplitudes,
    )
    rhs = np.vdot(psi.amplitudes, op.dense @ psi.amplitudes)
    assert np.isclose(lhs, rhs, atol=1e-10)


def test_unitarity_random_schedules():
    rng = np.random.default_rng(9)
    for _ in range(10):
        n = 4
        segments = []
        for _ in range(3):
            terms = []
            for _ in range(3):
                i, j = sorted(rng.choice(n, size=2, replace=False))
                m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
                terms.append(HamiltonianTerm((int(i), int(j)), m + m.conj().T))
            segments.append((float(rng.uniform(0.05, 0.5)), terms))
        sched = Schedule(n, segments)
        amp = rng.normal(size=16) + 1j * rng.normal(size=16)
        amp /= np.linalg.norm(amp)
        out = evolve_state(SpinState(amp), sched)
        assert abs(out.norm() - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------


def test_project_PX_string_examples():
    assert project_PX(x_op(2, 0), Region([0])).strings == {"XI": 1.0}
    assert project_PX(x_op(2, 0), Region([1])).strings == {}
    op = OperatorState.from_strings(2, {"XX": 1.0, "ZI": 1.0})
    kept = project_PX(op, Region([1])).strings
    assert kept == {"XX": 1.0}
    with pytest.raises(ValueError):
        project_PX(op, Region([]))


def test_project_PX_dense_matches_strings():
    rng = np.random.default_rng(10)
    for _ in range(10):
        op = random_hermitian_strings(3, 6, rng)
        region = Region([0, 2])
        via_strings = project_PX(op, region)
        via_dense = project_PX(OperatorState.from_dense(3, op.dense), region)
        assert np.allclose(via_strings.dense, via_dense.dense, atol=1e-11)


def test_project_PX_alternating_equivalence():
    # inclusion-exclusion definition agrees with the string filter on L <= 4
    rng = np.random.default_rng(11)
    for n in (2, 3, 4):
        op = random_hermitian_strings(n, 8, rng)
        region = Region(list(range(0, n, 2)))
        a = project_PX(OperatorState.from_dense(n, op.dense), region)
        b = project_PX_alternating(op, region)
        assert np.allclose(a.dense, b.dense, atol=1e-10)


def test_project_PX_norm_bound():
    rng = np.random.default_rng(12)
    for _ in range(20):
        dim = 8
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        op = OperatorState.from_dense(3, m + m.conj().T)
        proj = project_PX(op, Region([1]))
        assert operator_norm(proj) <= 2 * operator_norm(op) + 1e-10


def test_project_Qx_examples():
    assert project_Qx(x_op(3, 2), 2).strings == {"IIX": 1.0}
    assert project_Qx(x_op(3, 2), 1).strings == {}
    op = OperatorState.from_strings(3, {"XIX": 1.0, "XXI": 1.0})
    assert project_Qx(op, 2).strings == {"XIX": 1.0}
    assert project_Qx(op, 1).strings == {"XXI": 1.0}


def test_Qx_completeness_and_orthogonality():
    rng = np.random.default_rng(13)
    op = random_hermitian_strings(3, 10, rng)
    dense = OperatorState.from_dense(3, op.dense)
    # sum of all Q_x pieces plus the identity component restores the operator
    total = np.zeros_like(op.dense)
    for x in range(3):
        total += project_Qx(dense, x).dense
    ident_coeff = np.trace(op.dense) / 8.0
    total += ident_coeff * np.eye(8)
    assert np.allclose(total, op.dense, atol=1e-11)
    # Q_i Q_j = delta_ij Q_j
    q1 = project_Qx(dense, 1)
    assert np.allclose(project_Qx(q1, 1).dense, q1.dense, atol=1e-11)
    assert np.allclose(project_Qx(q1, 2).dense, 0.0, atol=1e-11)


def test_px_idempotent():
    rng = np.random.default_rng(14)
    op = random_hermitian_strings(3, 8, rng)
    dense = OperatorState.from_dense(3, op.dense)
    region = Region([0, 1])
    once = project_PX(dense, region)
    twice = project_PX(OperatorState.from_dense(3, once.dense), region)
    assert np.allclose(once.dense, twice.dense, atol=1e-11)


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


def test_right_weight_distribution_examples():
    op = x_op(2, 0)
    probs = right_weight_distribution(op)
    assert np.allclose(probs, [1.0, 0.0, 0.0], atol=1e-12)
    sup = OperatorState.from_strings(2, {"XI": 1 / np.sqrt(2), "IX": 1 / np.sqrt(2)})
    probs = right_weight_distribution(sup)
    assert np.allclose(probs, [0.5, 0.5, 0.0], atol=1e-12)


def test_right_weight_sums_to_one_after_evolution():
    rng = np.random.default_rng(15)
    op = random_hermitian_strings(3, 6, rng).normalized()
    sched = Schedule(
        3,
        [
            (0.5, [HamiltonianTerm((0, 1), np.kron(PAULI["X"], PAULI["X"]))]),
            (0.3, [HamiltonianTerm((1, 2), np.kron(PAULI["Z"], PAULI["Y"]))]),
        ],
    )
    probs = right_weight_distribution(evolve_operator(op, sched))
    assert np.all(probs >= -1e-12)
    assert np.isclose(probs.sum(), 1.0, atol=1e-10)


def test_right_weight_requires_normalization():
    with pytest.raises(ValueError):
        right_weight_distribution(OperatorState.from_strings(2, {"XI": 2.0}))


def test_otoc_weight_examples():
    # t=0: weight sits entirely on the initial support
    empty = Schedule(2, [])
    assert np.isclose(otoc_weight(x_op(2, 0), empty, 0), 1.0, atol=1e-12)
    assert np.isclose(otoc_weight(x_op(2, 0), empty, 1), 0.0, atol=1e-12)


def test_otoc_weight_two_site_closed_form():
    # oracle: H = Z0 Z1, X0(t) = cos(2t) X0 -+ sin(2t) X0... support weight at
    # site 1 is sin^2(2t) (string Y0 Z1 carries the site-1 weight)
    zz = HamiltonianTerm((0, 1), np.kron(PAULI["Z"], PAULI["Z"]))
    for t in (0.2, 0.7, 1.1):
        sched = Schedule(2, [(t, [zz])])
        w = otoc_weight(x_op(2, 0), sched, 1)
        assert np.isclose(w, np.sin(2 * t) ** 2, atol=1e-11)


def test_otoc_weight_bounds_commutator_otoc():
    # sup over single-site probes of the normalized squared commutator is
    # bounded by 4x the support weight
    zz = HamiltonianTerm((0, 1), np.kron(PAULI["Z"], PAULI["Z"]))
    sched = Schedule(2, [(0.6, [zz])])
    evolved = evolve_operator(x_op(2, 0), sched)
    w = otoc_weight(x_op(2, 0), sched, 1)
    for probe in ("X", "Y", "Z"):
        probe_op = OperatorState.single_pauli(2, 1, probe)
        c = commutator(evolved, probe_op)
        otoc = frobenius_norm(c) ** 2
        assert otoc <= 4 * w + 1e-10


# ---------------------------------------------------------------------------
# ground states
# ---------------------------------------------------------------------------


def tfi_terms(n, alpha, g):
    terms = []
    for i in range(n):
        for j in range(i + 1, n):
            coupling = -1.0 / (j - i) ** alpha
            terms.append(
                HamiltonianTerm((i, j), coupling * np.kron(PAULI["Z"], PAULI["Z"]))
            )
    for i in range(n):
        terms.append(HamiltonianTerm((i,), -g * PAULI["X"]))
    return terms


def test_ground_state_correlator_trivial_cases():
    terms = [
        HamiltonianTerm((0,), -PAULI["Z"]),
        HamiltonianTerm((1,), -PAULI["Z"]),
    ]
    ident = OperatorState.from_strings(2, {"II": 1.0})
    corr, gap = ground_state_correlator(terms, ident, z_op(2, 1), n_sites=2)
    assert np.isclose(corr, 0.0, atol=1e-12)
    corr, gap = ground_state_correlator(terms, z_op(2, 0), z_op(2, 1), n_sites=2)
    assert np.isclose(corr, 0.0, atol=1e-12)  # product ground state
    assert gap > 0.5


def test_ground_state_correlator_tfi():
    n = 8
    corr, gap = ground_state_correlator(
        tfi_terms(n, 3.0, 2.0), z_op(n, 0), z_op(n, 6), n_sites=n
    )
    assert gap > 0.1
    assert 0 < abs(corr) < 1.0


def test_degenerate_ground_state_rejected():
    terms = [HamiltonianTerm((0, 1), np.kron(PAULI["Z"], PAULI["Z"]))]
    with pytest.raises(ValueError):
        ground_state_correlator(terms, z_op(2, 0), z_op(2, 1), n_sites=2)


# ---------------------------------------------------------------------------
# envelope validation
# ---------------------------------------------------------------------------


def test_validate_envelope_empty_passes():
    chain = LatticeGraph.chain(5)
    report = validate_envelope(Schedule(5, []), chain, alpha=3.0)
    assert report.passed


def test_validate_envelope_flags_violations():
    chain = LatticeGraph.chain(5)
    ok = Schedule(
        5, [(1.0, [HamiltonianTerm((0, 2), 0.1 * np.kron(PAULI["Z"], PAULI["Z"]))])]
    )
    assert validate_envelope(ok, chain, alpha=3.0).passed  # 0.1 <= 1/8
    bad = Schedule(
        5, [(1.0, [HamiltonianTerm((0, 2), 0.3 * np.kron(PAULI["Z"], PAULI["Z"]))])]
    )
    report = validate_envelope(bad, chain, alpha=3.0)
    assert not report.passed
    assert report.worst_pair == (0, 2)
    assert report.worst_segment == 0
    assert report.worst_ratio > 2.0


def test_validate_envelope_sums_terms_per_pair():
    chain = LatticeGraph.chain(3)
    zz = np.kron(PAULI["Z"], PAULI["Z"])
    # two terms on the same pair add up: 0.6 + 0.6 > 1 = h/1^alpha
    sched = Schedule(
        3, [(1.0, [HamiltonianTerm((0, 1), 0.6 * zz), HamiltonianTerm((0, 1), 0.6 * zz)])]
    )
    assert not validate_envelope(sched, chain, alpha=3.0).passed


def test_operator_and_state_json_roundtrip():
    rng = np.random.default_rng(16)
    op = random_hermitian_strings(3, 5, rng)
    back = OperatorState.from_json(op.to_json())
    assert back.n_sites == 3
    for label, c in op.strings.items():
        assert np.isclose(back.strings[label], c)
    amp = rng.normal(size=8) + 1j * rng.normal(size=8)
    amp /= np.linalg.norm(amp)
    psi = SpinState(amp)
    back_psi = SpinState.from_json(psi.to_json())
    assert np.allclose(back_psi.amplitudes, psi.amplitudes)


def test_operator_json_golden_value():
    # frozen golden file for the interchange format
    golden = (
        '{"kind": "pauli_operator", "n_sites": 2, "terms": '
        '[{"string": "XI", "re": 0.5, "im": 0.0}, '
        '{"string": "ZY", "re": 0.0, "im": -1.25}]}'
    )
    op = OperatorState.from_json(golden)
    assert op.strings == {"XI": 0.5, "ZY": -1.25j}
    assert OperatorState.from_json(op.to_json()).strings == op.strings


def test_schedule_json_roundtrip():
    zz = HamiltonianTerm((0, 1), 0.25 * np.kron(PAULI["Z"], PAULI["Z"]))
    x0 = HamiltonianTerm((0,), 0.5 * PAULI["X"])
    sched = Schedule(3, [(0.5, [zz, x0]), (1.5, [zz])])
    back = Schedule.from_json(sched.to_json())
    assert back.n_sites == 3
    assert len(back.segments) == 2
    for (d1, t1), (d2, t2) in zip(sched.segments, back.segments):
        assert d1 == d2
        for a, b in zip(t1, t2):
            assert a.support == b.support
            assert np.allclose(a.matrix, b.matrix)
