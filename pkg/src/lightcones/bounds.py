"""Closed-form evaluators for the analytic propagation bounds.

Every existential constant (c, vbar, K, K', C, Delta) is an explicit input
with default 1; these evaluators never pretend to know a universal constant.
Logarithms are natural throughout, and r < 2 inputs are rejected rather than
clamped so log factors cannot silently degenerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BoundParams",
    "BoundVacuousError",
    "lr_bound_multisite",
    "local_obs_truncation_error",
    "simulation_radius",
    "gate_count_estimate",
    "topo_time_bound",
    "clustering_bound",
    "lightcone_exponent",
    "LIGHTCONE_KINDS",
]

LIGHTCONE_KINDS = ("lieb_robinson", "frobenius", "free")


class BoundVacuousError(ValueError):
    """Raised when the requested point lies where the bound says nothing."""


@dataclass
class BoundParams:
    """Constants entering the closed-form bounds.

    alpha, d, h describe the interaction; c and vbar are the multi-site
    commutator-bound constants; K covers the per-bound prefactors; Delta is
    the spectral gap for the clustering bound; epsilon is the tail-exponent
    slack.
    """

    alpha: float
    d: int = 1
    h: float = 1.0
    c: float = 1.0
    vbar: float = 1.0
    K: float = 1.0
    Delta: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0 or self.d < 1:
            raise ValueError("need alpha > 0 and d >= 1")
        for name in ("h", "c", "vbar", "K", "Delta", "epsilon"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def lr_bound_multisite(t: float, r: float, support_size: int, p: BoundParams) -> float:
    """Commutator-norm bound c |X| t^(d+1) log^(2d) r / (r - vbar t)^(alpha-d).

    Valid for alpha > 2d+1 outside the light cone r > vbar * t; support_size
    is |X|, and the single-site case reduces to the one-operator form.
    """
    _require(p.alpha > 2 * p.d + 1, "needs alpha > 2d+1")
    _require(r >= 2, "needs r >= 2 for the log factor")
    _require(support_size >= 1, "support_size must be >= 1")
    _require(t >= 0, "t must be >= 0")
    if r <= p.vbar * t:
        raise BoundVacuousError(f"inside the light cone: r={r} <= vbar*t={p.vbar * t}")
    return (
        p.c
        * support_size
        * t ** (p.d + 1)
        * math.log(r) ** (2 * p.d)
        / (r - p.vbar * t) ** (p.alpha - p.d)
    )


def local_obs_truncation_error(t: float, r: float, p: BoundParams) -> float:
    """Truncated-evolution error bound K t^(d+2) log^(2d) r / r^(alpha-d),
    valid for alpha > 2d+1 and r >= 4 vbar t >= 1."""
    _require(p.alpha > 2 * p.d + 1, "needs alpha > 2d+1")
    _require(t >= 0, "t must be >= 0")
    _require(r >= 2, "needs r >= 2 for the log factor")
    if t > 0:
        _require(r >= 4 * p.vbar * t >= 1, "needs r >= 4*vbar*t >= 1")
    return p.K * t ** (p.d + 2) * math.log(r) ** (2 * p.d) / r ** (p.alpha - p.d)


def simulation_radius(t: float, p: BoundParams) -> float:
    """Radius max(t^((d+2)/(alpha-d)) * log t, t) sufficient for constant
    truncation error; for t <= 1 the log branch is non-positive and the
    linear branch is returned."""
    _require(p.alpha > 2 * p.d + 1, "needs alpha > 2d+1")
    _require(t > 0, "t must be > 0")
    if t <= 1:
        return float(t)
    return max(t ** ((p.d + 2) / (p.alpha - p.d)) * math.log(t), t)


def gate_count_estimate(n_r: float, t: float, p: BoundParams) -> float:
    """Elementary-gate estimate (N_r t)^(alpha/(alpha-d)); the order-dependent
    o(1) exponent slack is dropped."""
    _require(p.alpha > p.d, "needs alpha > d")
    _require(n_r >= 1 and t >= 0, "need N_r >= 1 and t >= 0")
    return (n_r * t) ** (p.alpha / (p.alpha - p.d))


def topo_time_bound(l_size: float, p: BoundParams) -> float:
    """Minimum time scale to create topological order on diameter-L lattices:
    L for alpha > 3d+1, else L^((alpha-2d)/(d+1)) / log^(2d) L on
    2d+1 <= alpha <= 3d+1."""
    _require(p.alpha >= 2 * p.d + 1, "needs alpha >= 2d+1")
    _require(l_size >= 2, "needs L >= 2 for the log factor")
    if p.alpha > 3 * p.d + 1:
        return float(l_size)
    return l_size ** ((p.alpha - 2 * p.d) / (p.d + 1)) / math.log(l_size) ** (2 * p.d)


def clustering_gamma(alpha: float, d: int) -> float:
    """Exponent gamma = alpha (alpha - d + 1) / (alpha - 2d) of the algebraic
    light cone entering the clustering bound."""
    _require(alpha > 2 * d, "needs alpha > 2d")
    return alpha * (alpha - d + 1) / (alpha - 2 * d)


def clustering_bound(r: float, p: BoundParams) -> float:
    """Gapped ground-state correlator bound
    [2^(gamma-1) c Gamma(gamma/2) alpha^(gamma/2) / (pi Delta^gamma) + 1]
    * log^(gamma/2)(r) / r^alpha."""
    _require(p.alpha > 2 * p.d, "needs alpha > 2d")
    _require(r >= 2, "needs r >= 2 for the log factor")
    g = clustering_gamma(p.alpha, p.d)
    prefactor = (
        2 ** (g - 1) * p.c * math.gamma(g / 2) * p.alpha ** (g / 2) / (math.pi * p.Delta**g)
        + 1.0
    )
    return prefactor * math.log(r) ** (g / 2) / r**p.alpha


def lightcone_exponent(alpha: float, d: int, kind: str):
    """Light-cone exponent (t >~ r^exponent) and its status for each bound
    family.

    Returns (exponent, status) with status one of:
      guaranteed    proven light cone at this exponent
      boundary      exactly at a regime threshold
      upper_limit   no cone guaranteed; protocols force exponent <= value
      log_corrected guaranteed up to a logarithmic correction
      logarithmic   cone is logarithmic in r (exponent 0)
      saturated     distance-independent time suffices (exponent 0)
    """
    if kind not in LIGHTCONE_KINDS:
        raise ValueError(f"unknown light-cone kind {kind!r}")
    _require(alpha > 0 and d >= 1, "need alpha > 0, d >= 1")
    if kind == "lieb_robinson":
        threshold = 2 * d + 1
        if alpha > threshold:
            return 1.0, "guaranteed"
        if alpha == threshold:
            return 1.0, "boundary"
        return alpha / (1 + 2 * d), "upper_limit"
    if kind == "frobenius":
        _require(d == 1, "the many-body walk bound is one-dimensional")
        _require(alpha > 1.5, "needs alpha > 3/2")
        if alpha > 2.5:
            return 1.0, "guaranteed"
        if alpha == 2.5:
            return 1.0, "boundary"
        return alpha - 1.5, "log_corrected"
    # free particles
    if alpha > d + 1:
        return 1.0, "guaranteed"
    if alpha == d + 1:
        return 1.0, "boundary"
    if alpha > d:
        return alpha - d, "guaranteed"
    if alpha == d:
        return 0.0, "logarithmic"
    return 0.0, "saturated"


def guaranteed_exponent(alpha: float, d: int, kind: str) -> float:
    """The exponent actually guaranteed by the bound family (0 where only an
    upper limit on possible cones is known)."""
    value, status = lightcone_exponent(alpha, d, kind)
    if status == "upper_limit":
        return 0.0
    return value
