import numpy as np
import pytest

from lightcones.free import (
    SingleParticleHamiltonian,
    SpSchedule,
    TailParams,
    basis_state,
    evolve_sp,
    expectation_F_beta,
    fit_tail_constants,
    position_distribution,
    tail_probability,
    truncated_evolution_error,
)
from lightcones.lattice import LatticeGraph, ball


def two_site_hopper(h=1.0):
    lat = LatticeGraph.chain(2)
    mat = np.array([[0.0, h], [h, 0.0]], dtype=complex)
    return SingleParticleHamiltonian.from_dense(lat, mat)


def test_evolve_identity_at_t0():
    h = two_site_hopper()
    psi = basis_state(2, 0)
    assert np.allclose(evolve_sp(psi, h, 0.0), psi)


def test_two_site_transfer_closed_form():
    coupling = 0.8
    h = two_site_hopper(coupling)
    psi = evolve_sp(basis_state(2, 0), h, np.pi / (2 * coupling))
    # |0> -> -i |1> at the half period
    assert np.isclose(abs(psi[1]), 1.0, atol=1e-12)
    assert np.isclose(psi[1], -1j, atol=1e-12)


def test_norm_preserved_many_segments():
    rng = np.random.default_rng(0)
    lat = LatticeGraph.chain(16)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    segments = []
    for _ in range(1000):
        m = rng.normal(size=(16, 16)) * 0.2
        segments.append((0.05, SingleParticleHamiltonian.from_dense(lat, (m + m.T).astype(complex))))
    out = evolve_sp(psi, SpSchedule(segments))
    assert abs(np.linalg.norm(out) - 1.0) < 1e-9


def test_chebyshev_matches_dense():
    lat = LatticeGraph.chain(60)
    hn = SingleParticleHamiltonian.nearest_neighbor(lat, 1.0)
    hd = SingleParticleHamiltonian.from_dense(lat, hn.dense)
    psi = basis_state(60, 30)
    for t in (0.5, 3.0, 11.0):
        via_dense = hd.evolve(psi, t)
        from lightcones.free import _chebyshev_expm

        via_cheb = _chebyshev_expm(hn, psi, t)
        assert np.max(np.abs(via_dense - via_cheb)) < 1e-10


def test_toeplitz_matvec_matches_dense():
    n, alpha = 40, 2.5
    toe = SingleParticleHamiltonian.toeplitz_power_law(n, alpha, h=0.7)
    dense = SingleParticleHamiltonian.power_law(LatticeGraph.chain(n), alpha, h=0.7)
    rng = np.random.default_rng(1)
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    assert np.max(np.abs(toe.matvec(x) - dense.dense @ x)) < 1e-12
    psi = basis_state(n, n // 2)
    a = toe.evolve(psi, 2.0)
    b = dense.evolve(psi, 2.0)
    assert np.max(np.abs(a - b)) < 1e-9


def test_position_distribution():
    assert np.allclose(position_distribution(basis_state(4, 2)), [0, 0, 1, 0])
    uniform = np.ones(5, dtype=complex) / np.sqrt(5)
    assert np.allclose(position_distribution(uniform), 0.2)
    with pytest.raises(ValueError):
        position_distribution(np.ones(4))


def test_tail_params_validation():
    p = TailParams(alpha=3.0, d=1, epsilon=0.1, u=0.5)
    assert np.isclose(p.beta, 1.9)
    with pytest.raises(ValueError):
        TailParams(alpha=1.05, d=1, epsilon=0.1)


def test_expectation_F_beta_examples():
    lat = LatticeGraph.chain(21)
    p = TailParams(alpha=3.0, d=1, epsilon=1.0, u=0.0)  # beta = 1
    psi = basis_state(21, 0)
    assert expectation_F_beta(psi, lat, 0, p, 0.0) == 0.0
    # uniform over the radius-3 ball around site 10 with u = 0 and beta = 1:
    # expectation equals the mean distance (enumeration oracle)
    region = ball(lat, 10, 3)
    psi = np.zeros(21, dtype=complex)
    psi[list(region)] = 1.0 / np.sqrt(len(region))
    mean_dist = np.mean([abs(s - 10) for s in region])
    assert np.isclose(expectation_F_beta(psi, lat, 10, p, 5.0), mean_dist, atol=1e-12)


def test_expectation_grows_at_most_linearly_under_powerlaw():
    # with the cone carved out at a super-ballistic velocity, the expectation
    # of the clipped functional stays below K t for a K fitted on early times
    n, alpha = 200, 3.0  # alpha = d + 2
    lat = LatticeGraph.chain(n)
    h = SingleParticleHamiltonian.power_law(lat, alpha)
    p = TailParams(alpha=alpha, d=1, epsilon=0.1, u=3.0)
    psi0 = basis_state(n, n // 2)
    ts = np.linspace(0.5, 4.0, 8)
    vals = [expectation_F_beta(h.evolve(psi0, t), lat, n // 2, p, t) for t in ts]
    k_early = max(v / t for v, t in zip(vals[:4], ts[:4]))
    assert all(v <= 1.5 * k_early * t + 1e-12 for v, t in zip(vals, ts))


def test_tail_probability_and_markov():
    n = 128
    lat = LatticeGraph.chain(n)
    h = SingleParticleHamiltonian.nearest_neighbor(lat, 1.0)
    origin = n // 2
    psi0 = basis_state(n, origin)
    assert tail_probability(psi0, lat, origin, 1) == 0.0
    assert tail_probability(psi0, lat, origin, 0) == 1.0
    p = TailParams(alpha=3.0, d=1, epsilon=0.1, u=1.5)
    for t in (1.0, 3.0, 6.0):
        psi = h.evolve(psi0, t)
        e = expectation_F_beta(psi, lat, origin, p, t)
        for r in (4, 8, 16, 32):
            if r <= p.u * t:
                continue
            tail = tail_probability(psi, lat, origin, r)
            assert tail <= e / (r - p.u * t) ** p.beta + 1e-12


def test_truncated_evolution_error():
    n, alpha = 96, 3.0
    lat = LatticeGraph.chain(n)
    h = SingleParticleHamiltonian.power_law(lat, alpha)
    origin = n // 2
    # whole-lattice truncation changes nothing
    assert truncated_evolution_error(h, n, 1.0, origin) < 1e-12
    errs = [truncated_evolution_error(h, r, 1.5, origin) for r in (4, 8, 16, 32)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))  # monotone in r
    assert errs[-1] < errs[0]


def test_fit_tail_constants():
    # a single zero-Hamiltonian trajectory admits K = 0
    samples = [(t, r, 0.0) for t in (1.0, 2.0) for r in (2, 4)]
    k, u = fit_tail_constants(3.0, 1, samples)
    assert k == 0.0
    # nearest-neighbor model: finite constants with ballistic u
    n = 256
    lat = LatticeGraph.chain(n)
    h = SingleParticleHamiltonian.nearest_neighbor(lat, 1.0)
    origin = n // 2
    psi0 = basis_state(n, origin)
    samples = []
    for t in (1.0, 2.0, 4.0, 8.0):
        psi = h.evolve(psi0, t)
        for r in (4, 8, 16, 32, 64):
            samples.append((t, r, tail_probability(psi, lat, origin, r)))
    k, u = fit_tail_constants(3.0, 1, samples, u_grid=np.linspace(0, 4, 81))
    assert np.isfinite(k) and k >= 0
    assert 1.0 <= u <= 3.0  # ballistic speed ~ 2h
    # sub-linear regime forces u = 0
    k0, u0 = fit_tail_constants(1.5, 1, samples, epsilon=0.1)
    assert u0 == 0.0 and np.isfinite(k0)


def test_evolve_requires_normalized_input():
    h = two_site_hopper()
    with pytest.raises(ValueError):
        evolve_sp(2.0 * basis_state(2, 0), h, 1.0)


def test_transfer_trajectories_have_bounded_tail_constants():
    # envelope-respecting cube-doubling evolutions (which beat the linear
    # cone) still admit bounded tail constants across four distance
    # doublings: the fitted prefactor never trends upward
    from lightcones.transfer import build_transfer_plan

    alpha, eps = 1.5, 0.1
    ks = []
    for dist in (8, 16, 32, 64):
        lat = LatticeGraph.chain(dist + 1)
        plan = build_transfer_plan(lat, 0, dist, alpha)
        samples = []
        psi = basis_state(lat.n_sites, 0)
        t_cum = 0.0
        for stage in plan.stages:
            psi = stage.hamiltonian(lat).evolve(psi, stage.duration)
            t_cum += stage.duration
            for frac in (0.25, 0.5, 0.75):
                r = max(1, int(frac * dist))
                samples.append((t_cum, r, tail_probability(psi, lat, 0, r)))
        k, u = fit_tail_constants(alpha, 1, samples, eps)
        assert u == 0.0  # alpha <= d + 1 regime
        ks.append(k)
    assert max(ks) <= 2.0 * ks[0]
