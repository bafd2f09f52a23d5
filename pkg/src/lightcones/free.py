"""Single-particle dynamics on large lattices.

Wave functions are plain complex numpy vectors over lattice sites (unit norm
within 1e-10).  Hamiltonians are Hermitian hopping matrices; evolution uses
a cached dense eigendecomposition up to DENSE_EVOLVE_CAP sites and a
Chebyshev expansion of the exponential applied to the vector above that
(tolerance CHEBYSHEV_TOL, so both paths are exact to floating point for the
purposes of every tolerance in this package).

Statistics are immaterial in the single-excitation sector: everything here
applies verbatim to one boson, one fermion, or one hardcore-boson spin flip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .lattice import LatticeGraph, ball

__all__ = [
    "DENSE_EVOLVE_CAP",
    "SingleParticleHamiltonian",
    "SpSchedule",
    "TailParams",
    "basis_state",
    "evolve_sp",
    "position_distribution",
    "expectation_F_beta",
    "tail_probability",
    "truncated_evolution_error",
    "fit_tail_constants",
]

DENSE_EVOLVE_CAP = 4000
CHEBYSHEV_TOL = 1e-12
NORM_TOL = 1e-10


def basis_state(n_sites: int, site: int) -> np.ndarray:
    psi = np.zeros(n_sites, dtype=complex)
    psi[site] = 1.0
    return psi


class SingleParticleHamiltonian:
    """Hermitian hopping generator sum_ij h_ij |i><j| on a lattice.

    Holds either a dense/sparse matrix or a structured matvec (1d Toeplitz
    hoppings via FFT).  `norm_bound` is any upper bound on the spectral norm
    (max absolute row sum by default), used to scale the Chebyshev expansion.
    """

    def __init__(self, lattice: LatticeGraph, matrix=None, matvec=None, norm_bound=None):
        self.lattice = lattice
        self.n_sites = lattice.n_sites
        self._matrix = matrix
        self._matvec = matvec
        self._eig = None
        if matrix is None and matvec is None:
            raise ValueError("need a matrix or a matvec")
        if matrix is not None:
            if matrix.shape != (self.n_sites, self.n_sites):
                raise ValueError("matrix shape does not match the lattice")
            if sp.issparse(matrix):
                dev = abs(matrix - matrix.getH()).max()
            else:
                dev = np.max(np.abs(matrix - matrix.conj().T))
            if dev > 1e-12:
                raise ValueError("hopping matrix must be Hermitian")
        if norm_bound is None:
            if matrix is None:
                raise ValueError("matvec-only Hamiltonians need an explicit norm_bound")
            norm_bound = float(np.abs(matrix).sum(axis=1).max())
        self.norm_bound = float(norm_bound)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_dense(cls, lattice: LatticeGraph, matrix) -> "SingleParticleHamiltonian":
        return cls(lattice, matrix=np.asarray(matrix, dtype=complex))

    @classmethod
    def nearest_neighbor(cls, lattice: LatticeGraph, h: float = 1.0) -> "SingleParticleHamiltonian":
        rows, cols = [], []
        for i in range(lattice.n_sites):
            for j in lattice.neighbors(i):
                rows.append(i)
                cols.append(j)
        mat = sp.coo_matrix(
            (h * np.ones(len(rows)), (rows, cols)),
            shape=(lattice.n_sites, lattice.n_sites),
        ).tocsr()
        return cls(lattice, matrix=mat)

    @classmethod
    def power_law(cls, lattice: LatticeGraph, alpha: float, h: float = 1.0, rng=None) -> "SingleParticleHamiltonian":
        """Dense hoppings h_ij = c_ij h / D(i,j)^alpha with c_ij = 1, or
        uniform random phases/signs in [-1, 1] when an rng is supplied."""
        coords = lattice.coordinates()
        dist = np.abs(coords[:, None, :] - coords[None, :, :]).sum(axis=2).astype(float)
        np.fill_diagonal(dist, np.inf)
        mat = h / dist**alpha
        if rng is not None:
            c = rng.uniform(-1.0, 1.0, size=mat.shape)
            c = (c + c.T) / 2.0
            mat = mat * c
        np.fill_diagonal(mat, 0.0)
        return cls(lattice, matrix=mat.astype(complex))

    @classmethod
    def toeplitz_power_law(cls, n_sites: int, alpha: float, h: float = 1.0) -> "SingleParticleHamiltonian":
        """1d translation-invariant hoppings h/|i-j|^alpha with an FFT
        matvec (circulant embedding): supports 10^4..10^5 sites."""
        lattice = LatticeGraph.chain(n_sites)
        j = np.arange(1, n_sites, dtype=float)
        kernel = np.concatenate([[0.0], h / j**alpha])
        circ = np.concatenate([kernel, [0.0], kernel[:0:-1]])  # length 2n
        fft_c = np.fft.fft(circ)
        norm_bound = float(2.0 * kernel.sum())

        def matvec(x):
            padded = np.zeros(2 * n_sites, dtype=complex)
            padded[:n_sites] = x
            return np.fft.ifft(fft_c * np.fft.fft(padded))[:n_sites]

        return cls(lattice, matvec=matvec, norm_bound=norm_bound)

    # -- linear algebra ------------------------------------------------------

    def matvec(self, x):
        if self._matvec is not None:
            return self._matvec(x)
        return self._matrix @ x

    @property
    def dense(self) -> np.ndarray:
        if self._matrix is None:
            raise ValueError("structured Hamiltonian has no dense matrix")
        if sp.issparse(self._matrix):
            return self._matrix.toarray()
        return self._matrix

    def restricted(self, sites) -> "SingleParticleHamiltonian":
        """Keep only hoppings with both endpoints in `sites`."""
        mask = np.zeros(self.n_sites, dtype=bool)
        mask[np.asarray(list(sites), dtype=int)] = True
        mat = self.dense.copy()
        keep = np.outer(mask, mask)
        mat[~keep] = 0.0
        return SingleParticleHamiltonian(self.lattice, matrix=mat)

    # -- evolution -----------------------------------------------------------

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        """exp(-i H t) psi, exact to floating point."""
        if t == 0.0:
            return psi.astype(complex).copy()
        if self._matrix is not None and self.n_sites <= DENSE_EVOLVE_CAP:
            if self._eig is None:
                self._eig = np.linalg.eigh(self.dense)
            vals, vecs = self._eig
            return vecs @ (np.exp(-1j * vals * t) * (vecs.conj().T @ psi))
        return _chebyshev_expm(self, psi, t)


def _chebyshev_expm(h: SingleParticleHamiltonian, psi: np.ndarray, t: float) -> np.ndarray:
    """Chebyshev expansion of exp(-i H t) psi on the spectral interval
    [-rho, rho] with rho = norm_bound; Bessel coefficients decay
    super-exponentially past degree rho*t."""
    rho = h.norm_bound
    if rho == 0.0:
        return psi.astype(complex).copy()
    z = rho * abs(t)
    sign = -1.0 if t >= 0 else 1.0
    k_max = int(z + 40 + 12 * math.sqrt(z + 1))
    ks = np.arange(k_max + 1)
    bessel = jv(ks, z)
    # drop the negligible tail
    keep = np.nonzero(np.abs(bessel) > CHEBYSHEV_TOL / 10)[0]
    k_max = int(keep.max()) if keep.size else 0
    coeffs = np.array(
        [(2.0 if k else 1.0) * (sign * 1j) ** k * bessel[k] for k in range(k_max + 1)]
    )
    inv = 1.0 / rho
    prev = psi.astype(complex)
    out = coeffs[0] * prev
    if k_max >= 1:
        cur = inv * h.matvec(prev)
        out = out + coeffs[1] * cur
        for k in range(2, k_max + 1):
            nxt = 2.0 * inv * h.matvec(cur) - prev
            out = out + coeffs[k] * nxt
            prev, cur = cur, nxt
    return out


@dataclass
class SpSchedule:
    """Piecewise-constant single-particle schedule: (duration, H) segments."""

    segments: list

    def total_duration(self) -> float:
        return float(sum(d for d, _ in self.segments))

    def evolve(self, psi: np.ndarray) -> np.ndarray:
        out = psi
        for duration, h in self.segments:
            out = h.evolve(out, duration)
        return out


def evolve_sp(psi: np.ndarray, h, t: float | None = None) -> np.ndarray:
    """Evolve a wave function under a Hamiltonian (for time t) or through a
    schedule (t ignored); preserves the norm to 1e-10."""
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise ValueError("wave function must be normalized")
    if isinstance(h, SpSchedule):
        out = h.evolve(psi)
    else:
        if t is None or t < 0:
            raise ValueError("need t >= 0")
        out = h.evolve(psi, t)
    return out


def position_distribution(psi: np.ndarray) -> np.ndarray:
    """|<i|psi>|^2 over sites; validates normalization."""
    p = np.abs(psi) ** 2
    if abs(p.sum() - 1.0) > 1e-12 * len(psi) + NORM_TOL:
        raise ValueError("wave function must be normalized")
    return p


@dataclass(frozen=True)
class TailParams:
    """Tail exponent beta = alpha - d - epsilon and cone velocity u."""

    alpha: float
    d: int = 1
    epsilon: float = 0.1
    u: float = 0.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.u < 0:
            raise ValueError("need epsilon > 0 and u >= 0")
        if self.beta <= 0:
            raise ValueError("need beta = alpha - d - epsilon > 0")

    @property
    def beta(self) -> float:
        return self.alpha - self.d - self.epsilon


def _cone_functional(lattice: LatticeGraph, origin: int, params: TailParams, t: float) -> np.ndarray:
    """F(x, t) = max(0, D(x, origin) - u t), clipped at zero so the Markov
    step stays valid (the nonpositive min() variant would break it)."""
    d = lattice.distances_from(origin).astype(float)
    return np.maximum(0.0, d - params.u * t)


def expectation_F_beta(psi, lattice: LatticeGraph, origin: int, params: TailParams, t: float) -> float:
    """E_t[F^beta] under the position distribution of psi."""
    f = _cone_functional(lattice, origin, params, t)
    return float(np.sum(position_distribution(psi) * f**params.beta))


def tail_probability(psi, lattice: LatticeGraph, origin: int, r: float) -> float:
    """Total probability at distance >= r from the origin."""
    if r <= 0:
        return 1.0
    d = lattice.distances_from(origin)
    return float(position_distribution(psi)[d >= r].sum())


def truncated_evolution_error(h: SingleParticleHamiltonian, r: int, t: float, origin: int) -> float:
    """|| psi_full(t) - psi_trunc(t) || for evolution from |origin>, where the
    truncation keeps only hoppings supported inside the ball of radius r."""
    region = ball(h.lattice, origin, r)
    psi0 = basis_state(h.n_sites, origin)
    full = h.evolve(psi0, t)
    trunc = h.restricted(region).evolve(psi0, t)
    return float(np.linalg.norm(full - trunc))


def fit_tail_constants(alpha: float, d: int, samples, epsilon: float = 0.1, u_grid=None):
    """Smallest feasible (K, u) with tail <= K t / (r - u t)^beta at every
    observed sample (t, r, tail); u is fixed to 0 for d < alpha <= d + 1.

    K(u), the minimal feasible prefactor at velocity u, decreases
    monotonically as u grows (larger u shrinks the bound's domain), so the
    joint minimum is read off the Pareto knee: the velocity where log K(u)
    bends hardest (for ballistic dynamics this is the front velocity, past
    which only exponentially small tails remain).  Samples with r <= u t are
    outside the bound's domain and impose no constraint.  Returns (K, u).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("need at least one (t, r, tail) sample")
    beta = alpha - d - epsilon
    if beta <= 0:
        raise ValueError("need alpha - d - epsilon > 0")
    t, r, tail = samples[:, 0], samples[:, 1], samples[:, 2]

    def k_needed(u):
        pos = (r > u * t) & (t > 0)
        if not pos.any():
            return math.nan
        return float(np.max(tail[pos] * (r[pos] - u * t[pos]) ** beta / t[pos]))

    if alpha <= d + 1:
        k = k_needed(0.0)
        if math.isnan(k):
            raise ValueError("no sample lies in the bound's domain")
        return k, 0.0
    if u_grid is None:
        u_grid = np.linspace(0.0, 4.0, 81)
    u_grid = np.asarray(u_grid, dtype=float)
    ks = np.array([k_needed(u) for u in u_grid])
    valid = ~np.isnan(ks)
    u_grid, ks = u_grid[valid], ks[valid]
    if ks.size == 0:
        raise ValueError("no grid velocity leaves any sample in the bound's domain")
    if ks[0] == 0.0:
        return 0.0, float(u_grid[0])
    if ks.size < 3 or ks.min() <= 0.0:
        i = int(np.argmin(ks))
        return float(ks[i]), float(u_grid[i])
    logk = np.log(ks)
    curvature = logk[2:] - 2.0 * logk[1:-1] + logk[:-2]
    knee = int(np.argmax(curvature)) + 1
    return float(ks[knee]), float(u_grid[knee])
