"""Exact spin-1/2 many-body dynamics for small chains.

States are dense complex vectors of length 2^L, operators carry a dual
representation (dense 2^L x 2^L matrix and/or a weighted Pauli-string map),
and time-dependent Hamiltonians are piecewise-constant schedules whose
segment exponentials are evaluated exactly (up to floating point).

Site 0 is the leftmost tensor factor; basis state index bits are read
left-to-right, so site k toggles bit (L-1-k) of the index.

Operator evolution pushes the perturbation created at time zero forward
through the schedule: O -> U(t) O U(t)' with U(t) the same ordered product
of segment exponentials that evolve_state applies, i.e. the flow
dO/dt = -i [H(t), O].  Norms, commutator norms, and all Frobenius weights
are identical to the opposite (Heisenberg) convention under schedule
reversal; expectation values satisfy <psi(t)| U O U' |psi(t)> = <psi|O|psi>.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import LatticeGraph, Region, manhattan_distance

__all__ = [
    "PAULI",
    "SpinState",
    "OperatorState",
    "HamiltonianTerm",
    "Schedule",
    "pauli_matrix",
    "evolve_state",
    "evolve_operator",
    "operator_norm",
    "frobenius_norm",
    "commutator",
    "project_PX",
    "project_Qx",
    "otoc_weight",
    "right_weight_distribution",
    "ground_state_correlator",
    "validate_envelope",
    "EnvelopeReport",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

HERMITICITY_TOL = 1e-12
NORMALIZATION_TOL = 1e-10
DENSE_EIG_DIM = 4096          # largest dimension for dense spectral norms
DEFAULT_MAX_L = 14            # refusal threshold for dense state evolution
OPERATOR_MAX_L = 12           # refusal threshold for dense operator evolution
STRING_DECOMPOSE_MAX_L = 12   # full Pauli decomposition needs 4^L memory


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string such as 'IXZ' (site 0 leftmost)."""
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, PAULI[ch])
    return out


def _embed_permute(matrix: np.ndarray, support, n_sites: int) -> np.ndarray:
    """Embed an operator on `support` into the full space: kron with identity
    on the remaining sites, then permute tensor factors into place."""
    support = tuple(support)
    k = len(support)
    if matrix.shape != (2**k, 2**k):
        raise ValueError("local matrix does not match support size")
    if list(support) != sorted(set(support)):
        raise ValueError("support must be sorted and duplicate-free")
    rest = [s for s in range(n_sites) if s not in support]
    big = np.kron(matrix, np.eye(2 ** (n_sites - k)))
    order = list(support) + rest          # current qubit order of `big`
    tensor = big.reshape((2,) * (2 * n_sites))
    axes = [order.index(q) for q in range(n_sites)]
    tensor = tensor.transpose(axes + [a + n_sites for a in axes])
    return tensor.reshape(2**n_sites, 2**n_sites)


def _kron_order_permutation(support, n_sites: int) -> np.ndarray:
    """perm[i] = basis index of standard-ordered state i in the qubit order
    (support sites first, remaining sites after)."""
    order = list(support) + [s for s in range(n_sites) if s not in support]
    idx = np.arange(2**n_sites, dtype=np.int64)
    out = np.zeros_like(idx)
    for pos, site in enumerate(order):
        bit = (idx >> (n_sites - 1 - site)) & 1
        out |= bit << (n_sites - 1 - pos)
    return out


def _embed_sparse(matrix: np.ndarray, support, n_sites: int) -> sp.csr_matrix:
    """Sparse embedding of a local operator: kron with the identity in the
    (support, rest) qubit order, then a sparse basis permutation back to the
    standard order.  Never densifies the span between support sites."""
    support = tuple(support)
    k = len(support)
    big = sp.kron(
        sp.csr_matrix(matrix),
        sp.identity(2 ** (n_sites - k), format="csr", dtype=complex),
        format="csr",
    )
    perm = _kron_order_permutation(support, n_sites)
    return big[perm][:, perm].tocsr()


# =============================================================================
# States and operators
# =============================================================================


class SpinState:
    """A pure state of L spin-1/2 sites as a dense amplitude vector."""

    def __init__(self, amplitudes, n_sites=None):
        amp = np.asarray(amplitudes, dtype=complex).ravel()
        if n_sites is None:
            n_sites = int(round(np.log2(amp.size)))
        if amp.size != 2**n_sites:
            raise ValueError("amplitude vector length is not 2^L")
        self.n_sites = n_sites
        self.amplitudes = amp

    @classmethod
    def computational(cls, n_sites: int, bits=None) -> "SpinState":
        """Basis state |b_0 b_1 ... b_{L-1}>; default all zeros."""
        idx = 0
        if bits is not None:
            for b in bits:
                idx = (idx << 1) | int(b)
        amp = np.zeros(2**n_sites, dtype=complex)
        amp[idx] = 1.0
        return cls(amp, n_sites)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "SpinState") -> complex:
        return complex(np.vdot(other.amplitudes, self.amplitudes))

    def fidelity(self, other: "SpinState") -> float:
        return abs(self.overlap(other)) ** 2

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "spin_state",
                "n_sites": self.n_sites,
                "re": self.amplitudes.real.tolist(),
                "im": self.amplitudes.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SpinState":
        payload = json.loads(text)
        if payload.get("kind") != "spin_state":
            raise ValueError("not a spin-state payload")
        amp = np.array(payload["re"]) + 1j * np.array(payload["im"])
        return cls(amp, payload["n_sites"])


class OperatorState:
    """Hermitian (or general) operator on L sites with dual representation.

    Either a dense matrix, a Pauli-string map {label: coefficient}, or both;
    conversions are cached.  Pauli labels are strings over 'IXYZ' with site 0
    leftmost.
    """

    def __init__(self, n_sites, dense=None, strings=None):
        if dense is None and strings is None:
            raise ValueError("need dense matrix or string map")
        self.n_sites = int(n_sites)
        self._dense = None if dense is None else np.asarray(dense, dtype=complex)
        if self._dense is not None and self._dense.shape != (2**self.n_sites,) * 2:
            raise ValueError("dense matrix has wrong shape")
        self._strings = None
        if strings is not None:
            clean = {}
            for label, c in strings.items():
                if len(label) != self.n_sites or any(ch not in "IXYZ" for ch in label):
                    raise ValueError(f"bad Pauli label {label!r}")
                if abs(c) > 1e-14:
                    clean[label] = complex(c)
            self._strings = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_strings(cls, n_sites, strings) -> "OperatorState":
        return cls(n_sites, strings=strings)

    @classmethod
    def from_dense(cls, n_sites, dense) -> "OperatorState":
        return cls(n_sites, dense=dense)

    @classmethod
    def single_pauli(cls, n_sites, site, kind) -> "OperatorState":
        label = "".join(kind if k == site else "I" for k in range(n_sites))
        return cls.from_strings(n_sites, {label: 1.0})

    # -- representations ------------------------------------------------

    @property
    def dense(self) -> np.ndarray:
        if self._dense is None:
            dim = 2**self.n_sites
            out = np.zeros((dim, dim), dtype=complex)
            for label, c in self._strings.items():
                out += c * pauli_matrix(label)
            self._dense = out
        return self._dense

    @property
    def strings(self) -> dict:
        if self._strings is None:
            if self.n_sites > STRING_DECOMPOSE_MAX_L:
                raise ValueError(
                    f"Pauli decomposition capped at L={STRING_DECOMPOSE_MAX_L}"
                )
            self._strings = _pauli_decompose(self.dense, self.n_sites)
        return self._strings

    def has_strings(self) -> bool:
        return self._strings is not None

    # -- algebra ---------------------------------------------------------

    def __add__(self, other):
        if self._strings is not None and other._strings is not None:
            out = dict(self._strings)
            for k, v in other._strings.items():
                out[k] = out.get(k, 0.0) + v
            return OperatorState.from_strings(self.n_sites, out)
        return OperatorState.from_dense(self.n_sites, self.dense + other.dense)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        scalar = complex(scalar)
        if self._strings is not None:
            return OperatorState.from_strings(
                self.n_sites, {k: scalar * v for k, v in self._strings.items()}
            )
        return OperatorState.from_dense(self.n_sites, scalar * self.dense)

    def is_hermitian(self, tol=HERMITICITY_TOL) -> bool:
        d = self.dense
        return bool(np.max(np.abs(d - d.conj().T)) <= tol)

    # -- JSON interchange (golden-file format) ----------------------------

    def to_json(self) -> str:
        items = [
            {"string": label, "re": c.real, "im": c.imag}
            for label, c in sorted(self.strings.items())
        ]
        return json.dumps({"kind": "pauli_operator", "n_sites": self.n_sites, "terms": items})

    @classmethod
    def from_json(cls, text: str) -> "OperatorState":
        payload = json.loads(text)
        if payload.get("kind") != "pauli_operator":
            raise ValueError("not a Pauli-operator payload")
        strings = {
            item["string"]: complex(item["re"], item["im"]) for item in payload["terms"]
        }
        return cls.from_strings(payload["n_sites"], strings)

    def normalized(self) -> "OperatorState":
        """Divide by the dimension-normalized Frobenius norm."""
        f = frobenius_norm(self)
        if f == 0:
            raise ValueError("cannot normalize the zero operator")
        return (1.0 / f) * self


def _pauli_decompose(dense: np.ndarray, n_sites: int) -> dict:
    """Full Pauli-string decomposition of a dense operator.

    Contracts one site at a time with the map  A[a, r, c] = P_a[c, r] / 2,
    so the result tensor holds tr(P_string @ O) / 2^L.
    """
    conv = np.stack([PAULI[ch].T / 2.0 for ch in "IXYZ"])  # (4, 2, 2)
    t = dense.reshape((2,) * (2 * n_sites))
    for site in range(n_sites):
        # layout: (a_0..a_{site-1}, r_site..r_{L-1}, c_site..c_{L-1}), so the
        # row axis of the current site sits at `site` and its column axis at
        # n_sites (one column axis disappears per completed site)
        t = np.tensordot(conv, t, axes=[(1, 2), (site, n_sites)])
        t = np.moveaxis(t, 0, site)
    coeffs = t.reshape(-1)
    out = {}
    nz = np.nonzero(np.abs(coeffs) > 1e-14)[0]
    for flat in nz:
        digits = np.unravel_index(flat, (4,) * n_sites)
        label = "".join("IXYZ"[d] for d in digits)
        out[label] = complex(coeffs[flat])
    return out


# =============================================================================
# Hamiltonians and schedules
# =============================================================================


@dataclass
class HamiltonianTerm:
    """A local Hermitian term acting on a sorted tuple of sites.

    The envelope validator sums spectral norms of multi-site terms per pair,
    so two-site pieces should be kept separate from any single-site parts.
    """

    support: tuple
    matrix: np.ndarray

    def __post_init__(self):
        self.support = tuple(int(s) for s in self.support)
        self.matrix = np.asarray(self.matrix, dtype=complex)
        k = len(self.support)
        if self.matrix.shape != (2**k, 2**k):
            raise ValueError("term matrix does not match support size")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > HERMITICITY_TOL:
            raise ValueError("term matrix is not Hermitian")
        if list(self.support) != sorted(set(self.support)):
            raise ValueError("support must be sorted and duplicate-free")

    def norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


@dataclass
class Schedule:
    """Piecewise-constant Hamiltonian: ordered (duration, terms) segments."""

    n_sites: int
    segments: list

    def __post_init__(self):
        for duration, terms in self.segments:
            if duration <= 0:
                raise ValueError("segment durations must be positive")
            for term in terms:
                if term.support and term.support[-1] >= self.n_sites:
                    raise ValueError("term support outside the chain")

    def total_duration(self) -> float:
        return float(sum(d for d, _ in self.segments))

    def time_reversed(self) -> "Schedule":
        """Segments in reverse order with negated generators."""
        rev = [
            (d, [HamiltonianTerm(t.support, -t.matrix) for t in terms])
            for d, terms in reversed(self.segments)
        ]
        return Schedule(self.n_sites, rev)

    def segment_matrix(self, k: int, sparse=False):
        """The full 2^L x 2^L generator of segment k."""
        _, terms = self.segments[k]
        if sparse:
            dim = 2**self.n_sites
            out = sp.csr_matrix((dim, dim), dtype=complex)
            for t in terms:
                out = out + _embed_sparse(t.matrix, t.support, self.n_sites)
            return out
        dim = 2**self.n_sites
        out = np.zeros((dim, dim), dtype=complex)
        for t in terms:
            out += _embed_permute(t.matrix, t.support, self.n_sites)
        return out

    # -- JSON interchange -------------------------------------------------

    def to_json(self) -> str:
        def mat(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]

        payload = {
            "kind": "spin",
            "n_sites": self.n_sites,
            "segments": [
                {
                    "duration": float(d),
                    "terms": [
                        {"support": list(t.support), "matrix": mat(t.matrix)}
                        for t in terms
                    ],
                }
                for d, terms in self.segments
            ],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        payload = json.loads(text)
        if payload.get("kind") != "spin":
            raise ValueError("not a spin schedule")

        def unmat(m):
            return np.array([[complex(re, im) for re, im in row] for row in m])

        segments = [
            (
                seg["duration"],
                [HamiltonianTerm(tuple(t["support"]), unmat(t["matrix"])) for t in seg["terms"]],
            )
            for seg in payload["segments"]
        ]
        return cls(payload["n_sites"], segments)


# =============================================================================
# Evolution
# =============================================================================


def _segment_unitary(schedule: Schedule, k: int) -> np.ndarray:
    duration, _ = schedule.segments[k]
    h = schedule.segment_matrix(k)
    vals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * vals * duration)
    return (vecs * phases) @ vecs.conj().T


def evolve_state(psi: SpinState, schedule: Schedule) -> SpinState:
    """Apply the ordered product of segment exponentials to a state."""
    if psi.n_sites != schedule.n_sites:
        raise ValueError("state and schedule act on different chains")
    if psi.n_sites > DEFAULT_MAX_L:
        raise ValueError(f"state evolution capped at L={DEFAULT_MAX_L}")
    amp = psi.amplitudes.copy()
    use_sparse = schedule.n_sites > 9
    for k, (duration, _) in enumerate(schedule.segments):
        if use_sparse:
            h = schedule.segment_matrix(k, sparse=True)
            amp = spla.expm_multiply((-1j * duration) * h, amp)
        else:
            amp = _segment_unitary(schedule, k) @ amp
    return SpinState(amp, psi.n_sites)


def evolve_operator(op: OperatorState, schedule: Schedule) -> OperatorState:
    """Push an operator forward through the schedule: U(t) op U(t)'.

    U(t) is the ordered product of segment exponentials (first segment acts
    first), matching evolve_state.  Frobenius norm is preserved exactly.
    """
    if op.n_sites != schedule.n_sites:
        raise ValueError("operator and schedule act on different chains")
    if op.n_sites > OPERATOR_MAX_L:
        raise ValueError(f"dense operator evolution capped at L={OPERATOR_MAX_L}")
    mat = op.dense.copy()
    for k in range(len(schedule.segments)):
        u = _segment_unitary(schedule, k)
        mat = u @ mat @ u.conj().T
    return OperatorState.from_dense(op.n_sites, mat)


def operator_norm(op: OperatorState) -> float:
    """Spectral norm of a Hermitian or anti-Hermitian operator."""
    mat = op.dense
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("operator matrix is not square")
    herm_dev = np.max(np.abs(mat - mat.conj().T))
    anti_dev = np.max(np.abs(mat + mat.conj().T))
    if min(herm_dev, anti_dev) > 1e-8:
        raise ValueError("operator_norm needs a Hermitian or anti-Hermitian input")
    work = mat if herm_dev <= anti_dev else 1j * mat
    if mat.shape[0] <= DENSE_EIG_DIM:
        return float(np.max(np.abs(np.linalg.eigvalsh(work))))
    val = spla.eigsh(work, k=1, which="LM", tol=1e-8, return_eigenvectors=False)
    return float(abs(val[0]))


def frobenius_norm(op: OperatorState) -> float:
    """Dimension-normalized Frobenius norm sqrt(tr(O'O) / 2^L)."""
    if op.has_strings():
        return float(np.sqrt(sum(abs(c) ** 2 for c in op._strings.values())))
    d = op.dense
    return float(np.linalg.norm(d) / np.sqrt(d.shape[0]))


def commutator(a: OperatorState, b: OperatorState) -> OperatorState:
    if a.n_sites != b.n_sites:
        raise ValueError("operators act on different chains")
    return OperatorState.from_dense(a.n_sites, a.dense @ b.dense - b.dense @ a.dense)


# =============================================================================
# Projectors
# =============================================================================


def _partial_trace_normalized(mat: np.ndarray, sites, n_sites: int) -> np.ndarray:
    """tr_sites(O) / 2^{|sites|}: trivializes the given sites, keeping the
    operator on the remaining factors."""
    t = mat.reshape((2,) * (2 * n_sites))
    removed = 0
    for s in sorted(sites):
        axis = s - removed
        half = t.ndim // 2
        t = np.trace(t, axis1=axis, axis2=axis + half) / 2.0
        removed += 1
    keep = n_sites - removed
    return t.reshape(2**keep, 2**keep)


def _reinsert_identity(mat: np.ndarray, sites, n_sites: int) -> np.ndarray:
    """Tensor identity factors back at `sites` (inverse layout of the
    normalized partial trace)."""
    keep = [s for s in range(n_sites) if s not in set(sites)]
    return _embed_permute(mat, tuple(keep), n_sites)


def project_PX(op: OperatorState, region: Region) -> OperatorState:
    """Keep the part of the operator acting non-trivially somewhere in X.

    Equals  O - tr_X(O)/2^{|X|} (x) 1_X,  i.e. removes every Pauli string
    that is the identity on all of X.
    """
    sites = tuple(region)
    if not sites:
        raise ValueError("projection region must be nonempty")
    if op.has_strings() and op._dense is None:
        kept = {
            label: c
            for label, c in op.strings.items()
            if any(label[s] != "I" for s in sites)
        }
        return OperatorState.from_strings(op.n_sites, kept)
    reduced = _partial_trace_normalized(op.dense, sites, op.n_sites)
    return OperatorState.from_dense(
        op.n_sites, op.dense - _reinsert_identity(reduced, sites, op.n_sites)
    )


def project_Qx(op: OperatorState, x: int) -> OperatorState:
    """Keep strings whose right-most non-identity site is exactly x."""
    if not (0 <= x < op.n_sites):
        raise ValueError("site out of range")
    if op.has_strings() and op._dense is None:
        kept = {
            label: c
            for label, c in op.strings.items()
            if label[x] != "I" and all(ch == "I" for ch in label[x + 1 :])
        }
        return OperatorState.from_strings(op.n_sites, kept)
    n = op.n_sites
    # strings trivial on every site > x, minus strings trivial on every site >= x
    tail_gt = tuple(range(x + 1, n))
    tail_ge = tuple(range(x, n))
    part_gt = _reinsert_identity(
        _partial_trace_normalized(op.dense, tail_gt, n), tail_gt, n
    ) if tail_gt else op.dense
    part_ge = _reinsert_identity(
        _partial_trace_normalized(op.dense, tail_ge, n), tail_ge, n
    )
    return OperatorState.from_dense(n, part_gt - part_ge)


def project_PX_alternating(op: OperatorState, region: Region) -> OperatorState:
    """Inclusion-exclusion form of the support projector, kept as an
    independent cross-check of project_PX on small systems."""
    sites = tuple(region)
    if not sites:
        raise ValueError("projection region must be nonempty")
    n = op.n_sites
    out = np.zeros_like(op.dense)
    from itertools import combinations

    for k in range(1, len(sites) + 1):
        for subset in combinations(sites, k):
            term = op.dense
            for s in subset:
                reduced = _partial_trace_normalized(term, (s,), n)
                term = term - _reinsert_identity(reduced, (s,), n)
            out += (-1) ** (k + 1) * term
    return OperatorState.from_dense(n, out)


# =============================================================================
# Weights and correlators
# =============================================================================


def _suffix_trivial_weight(mat: np.ndarray, n_sites: int, k: int) -> float:
    """Frobenius weight (normalized, squared) of the component trivial on all
    sites >= k."""
    sites = tuple(range(k, n_sites))
    if not sites:
        reduced = mat
        dim = 2**n_sites
        return float(np.linalg.norm(reduced) ** 2 / dim)
    reduced = _partial_trace_normalized(mat, sites, n_sites)
    dim = reduced.shape[0]
    return float(np.linalg.norm(reduced) ** 2 / dim)


def right_weight_distribution(op: OperatorState) -> np.ndarray:
    """Probabilities (op|Q_i|op) for i = 0..L-1 plus the identity weight in
    the final slot.  Requires a unit-Frobenius-norm operator."""
    if abs(frobenius_norm(op) - 1.0) > NORMALIZATION_TOL:
        raise ValueError("operator must have unit Frobenius norm")
    n = op.n_sites
    mat = op.dense
    t = [_suffix_trivial_weight(mat, n, k) for k in range(n + 1)]
    probs = np.empty(n + 1)
    for y in range(n):
        probs[y] = t[y + 1] - t[y]
    probs[n] = t[0]  # identity component
    probs = np.clip(probs, 0.0, None)
    return probs


def support_weight(op: OperatorState, x: int) -> float:
    """(op|P_x|op): Frobenius weight of the strings acting non-trivially at x."""
    total = frobenius_norm(op) ** 2
    return float(total - _trivial_at_site_weight(op.dense, op.n_sites, x))


def _trivial_at_site_weight(mat: np.ndarray, n_sites: int, x: int) -> float:
    reduced = _partial_trace_normalized(mat, (x,), n_sites)
    dim = reduced.shape[0]
    return float(np.linalg.norm(reduced) ** 2 / dim)


def otoc_weight(op0: OperatorState, schedule: Schedule, x: int) -> float:
    """(O_0(t) | P_x | O_0(t)) for a unit-Frobenius-norm initial operator.

    Upper-bounds (times 4) the infinite-temperature squared-commutator OTOC
    against any unit-norm single-site probe at x.
    """
    if abs(frobenius_norm(op0) - 1.0) > NORMALIZATION_TOL:
        raise ValueError("initial operator must have unit Frobenius norm")
    evolved = evolve_operator(op0, schedule)
    return support_weight(evolved, x)


def ground_state_correlator(terms, a: OperatorState, b: OperatorState, n_sites=None):
    """Connected ground-state correlator <AB> - <A><B> and the spectral gap,
    by dense diagonalization of a time-independent Hamiltonian."""
    if n_sites is None:
        n_sites = a.n_sites
    dim = 2**n_sites
    h = np.zeros((dim, dim), dtype=complex)
    for t in terms:
        h += _embed_permute(t.matrix, t.support, n_sites)
    vals, vecs = np.linalg.eigh(h)
    gap = float(vals[1] - vals[0])
    if gap <= 1e-10:
        raise ValueError(f"ground state is degenerate (gap={gap:.2e})")
    psi0 = vecs[:, 0]
    amat, bmat = a.dense, b.dense
    ab = np.vdot(psi0, amat @ (bmat @ psi0))
    ea = np.vdot(psi0, amat @ psi0)
    eb = np.vdot(psi0, bmat @ psi0)
    corr = ab - ea * eb
    return float(corr.real), gap


# =============================================================================
# Envelope validation
# =============================================================================


@dataclass
class EnvelopeReport:
    passed: bool
    worst_pair: tuple | None
    worst_segment: int | None
    worst_ratio: float

    def __bool__(self):
        return self.passed


def validate_envelope(schedule: Schedule, lattice: LatticeGraph, alpha: float, h: float = 1.0) -> EnvelopeReport:
    """Check that every segment obeys sum_{X containing {i,j}} ||H_X|| <=
    h / D(i,j)^alpha for every pair of distinct sites.

    Single-site terms never enter the pair sums.  Returns the worst offender
    across pairs and segments.
    """
    worst_ratio = 0.0
    worst_pair = None
    worst_segment = None
    for seg_idx, (_, terms) in enumerate(schedule.segments):
        pair_sums: dict = {}
        for term in terms:
            if len(term.support) < 2:
                continue
            norm = term.norm()
            from itertools import combinations

            for i, j in combinations(term.support, 2):
                pair_sums[(i, j)] = pair_sums.get((i, j), 0.0) + norm
        for (i, j), total in pair_sums.items():
            allowed = h / manhattan_distance(lattice, i, j) ** alpha
            ratio = total / allowed
            if ratio > worst_ratio:
                worst_ratio = ratio
                worst_pair = (i, j)
                worst_segment = seg_idx
    return EnvelopeReport(
        passed=worst_ratio <= 1.0 + 1e-12,
        worst_pair=worst_pair,
        worst_segment=worst_segment,
        worst_ratio=worst_ratio,
    )
