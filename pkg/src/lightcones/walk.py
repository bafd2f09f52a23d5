"""Operator-quantum-walk certificates for the right-frontier light cone.

The space of operators on a chain of sites 0..L is split by the right-most
occupied site; subsets S of {1..L} (bitmasks) label exact supports.  A
nonnegative symmetric matrix M bounds the growth rate of the expected
frontier functional, and any positive trial vector certifies an upper bound
on its largest eigenvalue through the Collatz-Wielandt quotient.  A bounded
certificate pins the frontier to move at a finite rate, which lower-bounds
the time t2 for a fraction delta of any left-seeded operator to cross x.

Two regimes:
  steep (alpha > 5/2): frontier functional F_S = max(S), trial exponent
      beta = alpha - 2;
  shallow (3/2 < alpha <= 5/2): F_S = max_j j^gamma / (1 + K' log j) with
      gamma = alpha - 3/2 and K' = gamma/4 (the convexity choice), and
      log-corrected matrix entries and trial vector.

Matrix entries use the distance between the frontier sites of the two
subsets (for the steep case this equals the difference of frontier values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .spin import (
    OperatorState,
    _suffix_trivial_weight,
    frobenius_norm,
    project_Qx,
)

__all__ = [
    "FrontierFunctional",
    "WalkMatrix",
    "TrialVector",
    "frontier_value",
    "build_walk_matrix",
    "collatz_wielandt_bound",
    "collatz_wielandt_streamed",
    "spectral_norm_power_iteration",
    "default_walk_constant",
    "t2_lower_bound",
    "measure_t2_delta",
    "exact_tail_weight",
    "first_order_tail_weight",
    "tightness_system",
]

MATERIALIZE_MAX_L = 16
SUBSET_MAX_L = 20

VARIANTS = ("operator_walk", "state_transfer")


@dataclass(frozen=True)
class FrontierFunctional:
    """Regime-dependent scalar tracking the right-most extent of a support."""

    alpha: float
    regime: str = field(init=False)
    gamma: float = field(init=False, default=float("nan"))
    Kprime: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        if self.alpha <= 1.5:
            raise ValueError("frontier bounds need alpha > 3/2")
        if self.alpha > 2.5:
            object.__setattr__(self, "regime", "steep")
        else:
            object.__setattr__(self, "regime", "shallow")
            gamma = self.alpha - 1.5
            object.__setattr__(self, "gamma", gamma)
            object.__setattr__(self, "Kprime", gamma / 4.0)

    @property
    def at_boundary(self) -> bool:
        """alpha = 5/2 sits on the regime edge (gamma = 1)."""
        return self.regime == "shallow" and self.gamma >= 1.0

    def site_value(self, j) -> np.ndarray:
        """Functional value of a single occupied site (vectorized)."""
        j = np.asarray(j, dtype=float)
        if self.regime == "steep":
            return j
        out = np.zeros_like(j)
        pos = j > 0
        out[pos] = j[pos] ** self.gamma / (1.0 + self.Kprime * np.log(j[pos]))
        return out


def frontier_value(subset, functional: FrontierFunctional) -> float:
    """F of a support set; the empty set / site-0 sentinel gives 0."""
    sites = [s for s in subset if s > 0]
    if not sites:
        return 0.0
    return float(np.max(functional.site_value(np.array(sites))))


# ---------------------------------------------------------------------------
# entry weights
# ---------------------------------------------------------------------------


def _entry_weights(L: int, alpha: float, variant: str):
    """(w_add, w_swap, w_gap) indexed by frontier-site gap 1..L.

    w_add: matrix entry for adding/removing the frontier element,
    w_swap: entry for swapping the frontier element (state transfer only),
    w_gap: per-gap factor of the trial vector.
    """
    f = FrontierFunctional(alpha)
    g = np.arange(L + 1, dtype=float)
    g[0] = np.nan  # gap 0 never occurs
    if f.regime == "steep":
        beta = alpha - 2.0
        w_add = g ** (2.0 - alpha)
        w_swap = g ** (1.0 - alpha)
        w_gap = g ** (-beta)
    else:
        logc = 1.0 + f.Kprime * np.log(g)
        w_add = g ** (f.gamma + 1.0 - alpha) / logc
        w_swap = g ** (f.gamma - alpha) / logc
        w_gap = g ** (f.gamma + 1.0 - alpha) / logc
    w_add[0] = w_swap[0] = w_gap[0] = 0.0
    if variant != "state_transfer":
        w_swap = None
    return w_add, w_swap, w_gap


def default_walk_constant(alpha: float, h: float = 1.0) -> float:
    """A computable witness for the submultiplicativity constant A: the
    worst-case bound 2 h sum_k k^(-alpha), evaluated numerically with an
    integral tail correction."""
    if alpha <= 1.0:
        raise ValueError("needs alpha > 1")
    m = np.arange(1, 200_001, dtype=float)
    s = float(np.sum(m**-alpha)) + 200_000.0 ** (1.0 - alpha) / (alpha - 1.0)
    return 2.0 * h * s


# ---------------------------------------------------------------------------
# walk matrix (materialized)
# ---------------------------------------------------------------------------


@dataclass
class WalkMatrix:
    L: int
    alpha: float
    A: float
    variant: str
    matrix: sp.csr_matrix

    def is_irreducible(self) -> bool:
        n, _ = connected_components(self.matrix, directed=False)
        return n == 1


def build_walk_matrix(L: int, alpha: float, A: float = 1.0, variant: str = "operator_walk") -> WalkMatrix:
    """Materialize the subset-indexed walk matrix as scipy sparse.

    Nonzero entries connect S and S u {k} for k beyond the frontier of S
    (the only single-element changes that move the frontier), plus, in the
    state-transfer variant, pairs R u {m}, R u {n} with m, n beyond the
    frontier of R.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if L > MATERIALIZE_MAX_L:
        raise ValueError(f"materialization capped at L={MATERIALIZE_MAX_L}")
    w_add, w_swap, _ = _entry_weights(L, alpha, variant)
    size = 1 << L
    top1, top2 = _kernels.subset_tops(L)
    masks = np.arange(size, dtype=np.int64)
    rows, cols, vals = [], [], []
    t1 = top1.astype(np.int64)
    for k in range(1, L + 1):
        sel = t1 < k
        q = masks[sel] | (np.int64(1) << (k - 1))
        rows.append(masks[sel])
        cols.append(q)
        vals.append(A * w_add[k - t1[sel]])
    if variant == "state_transfer":
        t2 = top2.astype(np.int64)
        nz = masks > 0
        rest = masks.copy()
        rest[nz] &= ~(np.int64(1) << (t1[nz] - 1))
        for n in range(1, L + 1):
            sel = nz & (t2 < n) & (t1 < n)  # emit each unordered pair once
            q = rest[sel] | (np.int64(1) << (n - 1))
            rows.append(masks[sel])
            cols.append(q)
            vals.append(A * w_swap[n - t1[sel]])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    upper = sp.coo_matrix((v, (r, c)), shape=(size, size))
    mat = (upper + upper.T).tocsr()
    return WalkMatrix(L=L, alpha=alpha, A=A, variant=variant, matrix=mat)


# ---------------------------------------------------------------------------
# trial vector and certificates
# ---------------------------------------------------------------------------


@dataclass
class TrialVector:
    """Positive trial vector built from products of gap weights."""

    L: int
    alpha: float
    values: np.ndarray

    @classmethod
    def build(cls, L: int, alpha: float) -> "TrialVector":
        _, _, w_gap = _entry_weights(L, alpha, "operator_walk")
        vals = _kernels.trial_vector_table(L, w_gap)
        return cls(L=L, alpha=alpha, values=vals)


def collatz_wielandt_bound(walk: WalkMatrix, phi: TrialVector) -> float:
    """max_S (M phi)_S / phi_S: a certified upper bound on ||M||."""
    values = phi.values
    if np.any(values <= 0):
        raise ValueError("trial vector must be strictly positive")
    quotients = walk.matrix.dot(values) / values
    return float(quotients.max())


def collatz_wielandt_streamed(L: int, alpha: float, A: float = 1.0, variant: str = "operator_walk") -> float:
    """Row-streamed Collatz-Wielandt certificate: never materializes M.

    Row sums weighted by the gap-product trial vector depend on a subset only
    through its two right-most elements, so rows are generated on the fly
    from O(L^2) tables while streaming all 2^L subsets.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if L > SUBSET_MAX_L:
        raise ValueError(f"subset enumeration capped at L={SUBSET_MAX_L}")
    w_add, w_swap, w_gap = _entry_weights(L, alpha, variant)
    # additions: sum_{m=1..L-j} entry(m) * phi-ratio(m)
    prods = np.concatenate([[0.0], np.cumsum(w_add[1:] * w_gap[1:])])
    add_tail = A * prods[L - np.arange(L + 1)]
    swap_tab = None
    if variant == "state_transfer":
        swap_tab = np.zeros((L + 1, L + 1))
        for j2 in range(L):
            for j in range(j2 + 1, L + 1):
                n = np.arange(j2 + 1, L + 1)
                n = n[n != j]
                if n.size:
                    swap_tab[j2, j] = A * float(
                        np.sum(w_swap[np.abs(j - n)] * w_gap[n - j2] / w_gap[j - j2])
                    )
    return _kernels.stream_row_max(L, A, add_tail, swap_tab)


def collatz_wielandt_closed(L: int, alpha: float, A: float = 1.0, variant: str = "operator_walk") -> float:
    """Closed-form certificate: the streamed maximum ranges over the
    achievable (second, first) frontier pairs only, so 2^L enumeration is
    equivalent to an O(L^2) scan.  Kept as an independent oracle for the
    streamed path and for L beyond the subset cap."""
    w_add, w_swap, w_gap = _entry_weights(L, alpha, variant)
    prods = np.concatenate([[0.0], np.cumsum(w_add[1:] * w_gap[1:])])
    add_tail = A * prods[L - np.arange(L + 1)]
    best = add_tail[0]  # empty set
    for j in range(1, L + 1):
        for j2 in range(0, j):
            row = A + add_tail[j]
            if variant == "state_transfer":
                n = np.arange(j2 + 1, L + 1)
                n = n[n != j]
                if n.size:
                    row += A * float(
                        np.sum(w_swap[np.abs(j - n)] * w_gap[n - j2] / w_gap[j - j2])
                    )
            best = max(best, row)
    return float(best)


def _shifted_power_iteration(matvec, n, shift, tol, max_iter):
    """Power iteration on M + shift*I.

    The walk matrix's adjacency alternates subset parity, so its spectrum is
    symmetric about zero and the unshifted iteration oscillates between the
    +/- extremal eigenvectors; a positive diagonal shift breaks the tie and
    keeps the iterate in the positive cone.
    """
    x = np.ones(n) / math.sqrt(n)
    lam = 0.0
    residual = math.inf
    for _ in range(max_iter):
        y = matvec(x) + shift * x
        lam = float(x @ y)
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            return 0.0
        residual = np.linalg.norm(y - lam * x)
        if residual <= tol * max(abs(lam), 1e-300):
            return lam - shift
        x = y / norm_y
    raise RuntimeError(
        f"power iteration did not converge: residual {residual:.3e} after {max_iter} steps"
    )


def spectral_norm_power_iteration(matrix, tol: float = 1e-8, max_iter: int = 20000):
    """Largest eigenvalue of a symmetric nonnegative matrix by (shifted)
    power iteration with a relative residual stopping criterion."""
    if sp.issparse(matrix):
        matrix = matrix.tocsr()
        shift = float(np.abs(matrix).sum(axis=1).max())
    else:
        matrix = np.asarray(matrix, dtype=float)
        shift = float(np.abs(matrix).sum(axis=1).max())
    if shift == 0.0:
        return 0.0
    return _shifted_power_iteration(matrix.dot, matrix.shape[0], shift, tol, max_iter)


def spectral_norm_streamed(L, alpha, A=1.0, variant="operator_walk", tol=1e-8, max_iter=20000):
    """Power iteration against the implicit (streamed) walk matrix."""
    w_add, w_swap, _ = _entry_weights(L, alpha, variant)
    size = 1 << L
    shift = collatz_wielandt_closed(L, alpha, A, variant)  # cheap row-sum bound

    def matvec(x):
        return _kernels.stream_matvec(x, L, A, w_add, w_swap)

    return _shifted_power_iteration(matvec, size, shift, tol, max_iter)


# ---------------------------------------------------------------------------
# t2 bound and measurement
# ---------------------------------------------------------------------------


def t2_lower_bound(x: float, delta: float, alpha: float, C: float) -> float:
    """Certified lower bound on the frontier-crossing time: K = delta / C
    with C the certified growth-rate bound."""
    if alpha <= 1.5:
        raise ValueError("needs alpha > 3/2")
    if x < 1 or delta <= 0 or C <= 0:
        raise ValueError("need x >= 1, delta > 0, C > 0")
    K = delta / C
    if alpha > 2.5:
        return K * x
    f = FrontierFunctional(alpha)
    return K * x ** (alpha - 1.5) / (1.0 + f.Kprime * math.log(x))


@dataclass
class T2Measurement:
    time: float
    uncertainty: float
    crossed: bool


def right_tail_weight(op: OperatorState, x: int) -> float:
    """sum_{y >= x} (op|Q_y|op) for a unit-Frobenius-norm operator."""
    total = frobenius_norm(op) ** 2
    return float(total - _suffix_trivial_weight(op.dense, op.n_sites, x))


def measure_t2_delta(terms, op0: OperatorState, delta: float, x: int, t_grid, refine_steps: int = 25) -> T2Measurement:
    """First time on (and refined within) a grid at which the right-tail
    weight beyond site x of the pushed-forward operator exceeds delta.

    `terms` is a time-independent Hamiltonian (list of HamiltonianTerm); the
    operator must be left-localized, Q_0 op0 = op0, with unit Frobenius norm.
    The crossing is bracketed on the grid, bisected `refine_steps` times, and
    reported as the bracket midpoint with half-width uncertainty.
    """
    n = op0.n_sites
    if abs(frobenius_norm(op0) - 1.0) > 1e-10:
        raise ValueError("op0 must have unit Frobenius norm")
    q0 = project_Qx(op0, 0)
    if frobenius_norm(q0 - op0) > 1e-10:
        raise ValueError("op0 must be left-localized (Q_0 op0 = op0)")
    if delta <= 0:
        return T2Measurement(time=0.0, uncertainty=0.0, crossed=True)
    from .spin import _embed_permute

    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    for t in terms:
        h += _embed_permute(t.matrix, t.support, n)
    vals, vecs = np.linalg.eigh(h)
    base = vecs.conj().T @ op0.dense @ vecs

    def weight_at(t: float) -> float:
        phase = np.exp(-1j * vals * t)
        mat = vecs @ (phase[:, None] * base * phase.conj()[None, :]) @ vecs.conj().T
        return right_tail_weight(OperatorState.from_dense(n, mat), x)

    t_grid = np.asarray(sorted(t_grid), dtype=float)
    prev_t = 0.0
    for t in t_grid:
        if weight_at(t) > delta:
            lo, hi = prev_t, t
            for _ in range(refine_steps):
                mid = 0.5 * (lo + hi)
                if weight_at(mid) > delta:
                    hi = mid
                else:
                    lo = mid
            return T2Measurement(
                time=0.5 * (lo + hi), uncertainty=0.5 * (hi - lo), crossed=True
            )
        prev_t = t
    return T2Measurement(time=math.inf, uncertainty=math.inf, crossed=False)


# ---------------------------------------------------------------------------
# tightness of the frontier bound
# ---------------------------------------------------------------------------


def exact_tail_weight(L: int, alpha: float, t: float) -> float:
    """Frobenius weight beyond 2L/3 of the block raising operator evolved
    under uniform cross-block ZZ couplings of strength 1/L^alpha.

    The left block J = {0..L/3-1} carries the operator prod_j (X_j + i Y_j)
    + h.c.; the right block K = {2L/3..L-1} receives weight through the
    Z-diagonal evolution, giving exactly
        sqrt(1 - cos(2 |J| t / L^alpha)^(2 |K|)).
    """
    if L % 3 != 0:
        raise ValueError("L must be divisible by 3")
    v = L // 3
    phase = 2.0 * v * t / L**alpha
    return math.sqrt(max(0.0, 1.0 - math.cos(phase) ** (2 * v)))


def first_order_tail_weight(L: int, alpha: float, t: float) -> float:
    """Linearization of exact_tail_weight: sqrt(|K|) * 2 |J| t / L^alpha."""
    if L % 3 != 0:
        raise ValueError("L must be divisible by 3")
    v = L // 3
    return math.sqrt(v) * 2.0 * v * t / L**alpha


def tightness_system(L: int, alpha: float):
    """(terms, op0) realizing the tightness example on L sites, for dense
    cross-checks of exact_tail_weight at small L."""
    from itertools import combinations

    from .spin import PAULI, HamiltonianTerm

    if L % 3 != 0:
        raise ValueError("L must be divisible by 3")
    v = L // 3
    zz = np.kron(PAULI["Z"], PAULI["Z"])
    terms = [
        HamiltonianTerm((j, k), zz / L**alpha)
        for j in range(0, v)
        for k in range(2 * v, 3 * v)
    ]
    strings = {}
    for n_y in range(0, v + 1, 2):  # even Y counts survive in P + h.c.
        for ys in combinations(range(v), n_y):
            label = "".join(
                ("Y" if i in ys else "X") if i < v else "I" for i in range(L)
            )
            strings[label] = 2.0 * (1j**n_y).real
    op0 = OperatorState.from_strings(L, strings).normalized()
    return terms, op0
