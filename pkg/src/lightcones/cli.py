"""Reproducible experiment runner.

Configs are flat `key = value` text files (numbers, strings, or
bracketed comma lists; `#` starts a comment).  Every run validates its
configuration and resource caps before any computation, then writes
<experiment>.csv (data; first line carries the config hash) and
<experiment>.meta.json (canonical config, column descriptions and units,
and the relation each experiment checks).  Reruns with the same config and
seed are byte-identical; grid points may execute on a thread pool but rows
are always written in grid order.

Exit codes: 0 success, 2 validation error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, bounds, free, protocols, transfer, walk
from .lattice import LatticeGraph
from .spin import Schedule, validate_envelope

__all__ = ["main", "run", "parse_flat_config", "ConfigError", "ResourceCapError"]


class ConfigError(ValueError):
    pass


class ResourceCapError(RuntimeError):
    pass


DEFAULT_CAPS = {"max_l": 12, "max_sites": 40000, "max_subset_l": 16}


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _parse_scalar(token: str):
    token = token.strip().strip('"').strip("'")
    for caster in (int, float):
        try:
            return caster(token)
        except ValueError:
            continue
    return token


def parse_flat_config(text: str) -> dict:
    """Flat key = value / key = [a, b, c] format with # comments."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if value.startswith("["):
            if not value.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated list")
            items = [v for v in value[1:-1].split(",") if v.strip()]
            out[key] = [_parse_scalar(v) for v in items]
        else:
            out[key] = _parse_scalar(value)
    return out


def _as_list(config, key, default=None):
    if key not in config:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return list(default)
    value = config[key]
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError(f"{key!r} grid must be nonempty")
    return values


def _config_hash(config: dict, seed: int) -> str:
    canon = json.dumps({"config": config, "seed": seed}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _grid_map(fn, points, threads):
    if threads <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, points))


def _exp_spread(config, seed, threads, caps):
    ds = _as_list(config, "d", [1])
    alphas = _as_list(config, "alpha")
    ts = _as_list(config, "t")
    rs = _as_list(config, "r")
    points = [(d, a, t, r) for d in ds for a in alphas for t in ts for r in rs]
    for d, a, t, r in points:  # validate the full grid before computing
        protocols.spreading_parameters(r, float(t), float(a), int(d))

    def one(p):
        d, a, t, r = p
        res = protocols.run_spreading_experiment(int(r), float(t), float(a), int(d))
        return {
            "d": d,
            "alpha": a,
            "t": t,
            "r": r,
            "ell": res.params.ell,
            "V": res.params.V,
            "tau": res.params.tau,
            "lower_bound": res.lower_bound,
            "exact_norm": res.exact_norm,
            "ratio": res.ratio,
        }

    columns = {
        "d": "lattice dimension",
        "alpha": "interaction exponent",
        "t": "protocol time",
        "r": "origin-target distance (sites)",
        "ell": "ball radius t/3 (sites)",
        "V": "ball volume (sites)",
        "tau": "per-pair coupling angle h*t/(3*(2r)^alpha)",
        "lower_bound": "guaranteed commutator norm t^(2d+1)/(3^(1+2d) 2^(1+alpha) r^alpha)",
        "exact_norm": "exact commutator norm |a| from the block closed form",
        "ratio": "exact_norm / lower_bound (must be >= 1)",
    }
    return _grid_map(one, points, threads), columns, "exact_norm >= lower_bound at every valid grid point"


def _exp_correlator(config, seed, threads, caps):
    ds = _as_list(config, "d", [1])
    alphas = _as_list(config, "alpha")
    ts = _as_list(config, "t")
    rs = _as_list(config, "r")
    points = [(d, a, t, r) for d in ds for a in alphas for t in ts for r in rs]
    for d, a, t, r in points:
        if protocols.spreading_parameters(r, float(t), float(a), int(d)).V % 2 == 0:
            raise ConfigError(f"grid point {(d, a, t, r)}: even ball volume")

    def one(p):
        d, a, t, r = p
        val = protocols.connected_correlator(float(t), int(r), float(a), int(d))
        bound = protocols.correlator_lower_bound(float(t), int(r), float(a), int(d))
        return {
            "d": d,
            "alpha": a,
            "t": t,
            "r": r,
            "correlator": val,
            "lower_bound": bound,
            "ratio": val / bound,
        }

    columns = {
        "d": "lattice dimension",
        "alpha": "interaction exponent",
        "t": "protocol time",
        "r": "operator separation (sites)",
        "correlator": "connected correlator from the closed form",
        "lower_bound": "guaranteed value t^(2d+1)/(3^(1+2d) 2^(2+alpha) r^alpha)",
        "ratio": "correlator / lower_bound (must be >= 1)",
    }
    return _grid_map(one, points, threads), columns, "correlator >= lower_bound at every valid grid point"


def _exp_frobenius(config, seed, threads, caps):
    ls = [int(v) for v in _as_list(config, "L")]
    alphas = _as_list(config, "alpha")
    variants = _as_list(config, "variant", ["operator_walk"])
    for L in ls:
        if L > walk.SUBSET_MAX_L:
            raise ResourceCapError(f"L={L} exceeds the subset cap {walk.SUBSET_MAX_L}")
    points = [(L, a, v) for L in ls for a in alphas for v in variants]

    def one(p):
        L, a, variant = p
        cw = walk.collatz_wielandt_streamed(L, float(a), 1.0, variant)
        if L <= caps["max_subset_l"]:
            lam = walk.spectral_norm_power_iteration(
                walk.build_walk_matrix(L, float(a), 1.0, variant).matrix
            )
        else:
            lam = walk.spectral_norm_streamed(L, float(a), 1.0, variant)
        return {
            "L": L,
            "alpha": a,
            "variant": variant,
            "cw_bound": cw,
            "lambda_max": lam,
            "ratio": cw / lam,
        }

    columns = {
        "L": "chain truncation length (sites beyond the seed)",
        "alpha": "interaction exponent",
        "variant": "walk adjacency rule",
        "cw_bound": "trial-vector quotient certificate (upper bound)",
        "lambda_max": "power-iteration largest eigenvalue",
        "ratio": "cw_bound / lambda_max (must be >= 1)",
    }
    return _grid_map(one, points, threads), columns, "certificate dominates the spectral norm at every grid point"


def _exp_t2(config, seed, threads, caps):
    L = int(config.get("L", 8))
    if L > caps["max_l"]:
        raise ResourceCapError(f"L={L} exceeds the dense-operator cap {caps['max_l']}")
    alpha = float(config.get("alpha", 3.0))
    delta = float(config.get("delta", 0.5))
    h = float(config.get("h", 1.0))
    xs = [int(v) for v in _as_list(config, "x")]
    t_max = float(config.get("t_max", 14.0))
    n_grid = int(config.get("grid_points", 60))
    if any(x < 1 or x >= L for x in xs):
        raise ConfigError("x values must lie in [1, L)")
    from .spin import HamiltonianTerm, OperatorState, PAULI

    xx = np.kron(PAULI["X"], PAULI["X"])
    yy = np.kron(PAULI["Y"], PAULI["Y"])
    terms = [HamiltonianTerm((i, i + 1), 0.5 * h * (xx + yy)) for i in range(L - 1)]
    op0 = OperatorState.single_pauli(L, 0, "X")
    a_const = walk.default_walk_constant(alpha, h)
    c_cert = walk.collatz_wielandt_streamed(min(12, walk.SUBSET_MAX_L), alpha, a_const)
    grid = np.linspace(t_max / n_grid, t_max, n_grid)

    def one(x):
        res = walk.measure_t2_delta(terms, op0, delta, x, grid)
        return {
            "x": x,
            "delta": delta,
            "measured_t2": res.time,
            "bound_t2": walk.t2_lower_bound(x, delta, alpha, c_cert),
        }

    columns = {
        "x": "crossing site",
        "delta": "weight fraction threshold",
        "measured_t2": "first time the right-tail weight beyond x exceeds delta",
        "bound_t2": "certified lower bound (delta / certificate) * x-scaling",
    }
    return _grid_map(one, xs, threads), columns, "measured_t2 >= bound_t2 at every tested site"


def _lattice_from_config(config, caps, default_sites=1024):
    """Lattices are configured by `dimension` and `extents`; a bare
    `n_sites` is shorthand for a chain."""
    if "extents" in config:
        extents = [int(v) for v in _as_list(config, "extents")]
        dimension = int(config.get("dimension", len(extents)))
        if dimension != len(extents):
            raise ConfigError("dimension does not match the extents list")
    else:
        extents = [int(config.get("n_sites", default_sites))]
    lat = LatticeGraph(tuple(extents))
    if lat.n_sites > caps["max_sites"]:
        raise ResourceCapError(
            f"{lat.n_sites} sites exceed the cap {caps['max_sites']}"
        )
    return lat


def _exp_free_tail(config, seed, threads, caps):
    alpha = float(config.get("alpha", 3.0))
    model = config.get("model", "power_law")
    lattice = _lattice_from_config(config, caps)
    if lattice.dimension != 1:
        raise ConfigError("free-tail models are one-dimensional")
    n_sites = lattice.n_sites
    epsilon = float(config.get("epsilon", 0.1))
    ts = [float(v) for v in _as_list(config, "t")]
    rs = [int(v) for v in _as_list(config, "r")]
    lat = lattice
    origin = n_sites // 2
    if model == "nn":
        ham = free.SingleParticleHamiltonian.nearest_neighbor(lat, 1.0)
    elif model == "power_law":
        if n_sites <= free.DENSE_EVOLVE_CAP:
            ham = free.SingleParticleHamiltonian.power_law(lat, alpha, 1.0)
        else:
            ham = free.SingleParticleHamiltonian.toeplitz_power_law(n_sites, alpha, 1.0)
    else:
        raise ConfigError(f"unknown model {model!r}")
    psi0 = free.basis_state(n_sites, origin)
    states = {t: ham.evolve(psi0, t) for t in ts}
    samples = [
        (t, r, free.tail_probability(states[t], lat, origin, r)) for t in ts for r in rs
    ]
    k_fit, u_fit = free.fit_tail_constants(alpha, 1, samples, epsilon)
    params = free.TailParams(alpha=alpha, d=1, epsilon=epsilon, u=u_fit)
    rows = []
    for t in ts:
        e_beta = free.expectation_F_beta(states[t], lat, origin, params, t)
        for r in rs:
            tail = free.tail_probability(states[t], lat, origin, r)
            markov = (
                e_beta / (r - u_fit * t) ** params.beta if r > u_fit * t else math.inf
            )
            rows.append(
                {
                    "alpha": alpha,
                    "d": 1,
                    "t": t,
                    "r": r,
                    "tail": tail,
                    "markov_bound": markov,
                    "K_fit": k_fit,
                    "u_fit": u_fit,
                }
            )
    columns = {
        "alpha": "hopping exponent",
        "d": "lattice dimension",
        "t": "evolution time",
        "r": "distance from the origin (sites)",
        "tail": "probability weight at distance >= r",
        "markov_bound": "expectation of the clipped cone functional over (r - u t)^beta",
        "K_fit": "fitted tail prefactor",
        "u_fit": "fitted cone velocity",
    }
    return rows, columns, "tail <= markov_bound at every sampled point"


def _exp_transfer(config, seed, threads, caps, noise=False):
    ds = [int(v) for v in _as_list(config, "d", [1])]
    alphas = _as_list(config, "alpha")
    dists = [int(v) for v in _as_list(config, "D")]
    h = float(config.get("h", 1.0))
    points = [(d, a, dist) for d in ds for a in alphas for dist in dists]
    for d, a, dist in points:
        n = (dist + 1) ** d
        if n > caps["max_sites"]:
            raise ResourceCapError(f"transfer lattice of {n} sites exceeds cap")
    if noise:
        epsilon = float(config.get("epsilon", 0.01))
        samples = int(config.get("samples", 100))
        distribution = config.get("distribution", "uniform")

    def one(p):
        d, a, dist = p
        if d == 1:
            lat = LatticeGraph.chain(dist + 1)
            origin, target = 0, dist
        else:
            lat = LatticeGraph((dist + 1,) * d)
            origin = lat.index((0,) * d)
            target = lat.index((dist,) + (0,) * (d - 1))
        plan = transfer.build_transfer_plan(lat, origin, target, float(a), h)
        row = {
            "d": d,
            "alpha": a,
            "D": dist,
            "q": plan.q,
            "total_time": plan.total_time,
            "bound_time": transfer.transfer_time_bound(dist, float(a), d, h),
            "fidelity": transfer.fidelity(plan),
        }
        if noise:
            stats = transfer.robustness_mc(
                plan,
                transfer.NoiseModel(epsilon=epsilon, distribution=distribution, seed=seed),
                samples,
            )
            row.update(
                {
                    "epsilon": epsilon,
                    "samples": samples,
                    "mean_infidelity": stats.mean_infidelity,
                    "p95_infidelity": stats.quantiles[0.95],
                }
            )
        return row

    columns = {
        "d": "lattice dimension",
        "alpha": "interaction exponent",
        "D": "origin-target distance (sites)",
        "q": "number of doubling stages",
        "total_time": "measured plan duration",
        "bound_time": "conservative closed-form duration bound",
        "fidelity": "exact transfer fidelity",
    }
    if noise:
        columns.update(
            {
                "epsilon": "relative coupling error scale",
                "samples": "Monte Carlo samples",
                "mean_infidelity": "mean 1 - fidelity over samples",
                "p95_infidelity": "95th percentile of 1 - fidelity",
            }
        )
    check = "fidelity ~ 1 and total_time <= bound_time at every grid point"
    return _grid_map(one, points, threads), columns, check


def _exp_boson(config, seed, threads, caps):
    n_bosons = int(config.get("N", 2))
    beta_density = float(config.get("beta", 4.0))
    alpha = float(config.get("alpha", 3.0))
    epsilon = float(config.get("epsilon", 0.1))
    draws = int(config.get("draws", 0))
    t_factors = [float(v) for v in _as_list(config, "t_factor", [0.1, 1.0, 4.0])]
    from . import boson

    cfg = boson.build_initial(n_bosons, beta_density, 1, alpha)
    if cfg.lattice.n_sites > boson.ORACLE_MAX_M or n_bosons > boson.ORACLE_MAX_N:
        raise ResourceCapError("boson oracle caps exceeded")
    t_star = boson.easiness_time(n_bosons, cfg.l_gap, alpha, 1, epsilon)

    sample_rows = []

    def one(f):
        t = f * t_star
        tvd = boson.sampler_tvd(cfg, t)
        if draws:
            res = boson.sample_positions(cfg, t, seed=seed, draws=draws)
            sample_rows.append(
                {"t": t, "seed": seed, "positions": res.positions.tolist()}
            )
        return {
            "N": n_bosons,
            "M": cfg.lattice.n_sites,
            "alpha": alpha,
            "t": t,
            "t_star": t_star,
            "tvd": tvd,
            "draws": draws,
        }

    columns = {
        "N": "boson count",
        "M": "lattice sites",
        "alpha": "hopping exponent",
        "t": "evolution time",
        "t_star": "relative easiness-time scale",
        "tvd": "total-variation distance of the factored sampler",
        "draws": "samples drawn (0 = distribution only)",
    }
    rows = _grid_map(one, t_factors, threads)
    extra = {}
    if sample_rows:
        sample_rows.sort(key=lambda r: r["t"])
        extra["boson.samples.jsonl"] = (
            "\n".join(json.dumps(r, sort_keys=True) for r in sample_rows) + "\n"
        )
    return rows, columns, "tvd is small for t << t_star and non-decreasing in t", extra


def _exp_bounds_table(config, seed, threads, caps):
    d = int(config.get("d", 1))
    alphas = _as_list(config, "alpha", list(np.round(np.linspace(1.6, 6.0, 45), 6)))
    kinds = _as_list(config, "kind", list(bounds.LIGHTCONE_KINDS))
    rows = []
    for kind in kinds:
        for a in alphas:
            try:
                expo, status = bounds.lightcone_exponent(float(a), d, kind)
            except ValueError:
                continue
            rows.append(
                {"kind": kind, "alpha": a, "exponent": expo, "status": status}
            )
    if not rows:
        raise ConfigError("no valid (kind, alpha) pairs in the grid")
    columns = {
        "kind": "light-cone family",
        "alpha": "interaction exponent",
        "exponent": "cone exponent (t >~ r^exponent)",
        "status": "guarantee status",
    }
    return rows, columns, "free >= frobenius >= guaranteed commutator exponent on the grid"


def _exp_validate(config, seed, threads, caps):
    path = config.get("schedule")
    if not path:
        raise ConfigError("validate needs a `schedule` path (JSON)")
    alpha = float(config.get("alpha", 3.0))
    h = float(config.get("h", 1.0))
    schedule = Schedule.from_json(Path(path).read_text())
    lattice = LatticeGraph.chain(schedule.n_sites)
    report = validate_envelope(schedule, lattice, alpha, h)
    rows = [
        {
            "n_sites": schedule.n_sites,
            "segments": len(schedule.segments),
            "alpha": alpha,
            "h": h,
            "passed": int(report.passed),
            "worst_ratio": report.worst_ratio,
            "worst_pair": "" if report.worst_pair is None else f"{report.worst_pair[0]}-{report.worst_pair[1]}",
            "worst_segment": -1 if report.worst_segment is None else report.worst_segment,
        }
    ]
    columns = {
        "n_sites": "chain length",
        "segments": "schedule segments",
        "alpha": "interaction exponent checked",
        "h": "coupling scale checked",
        "passed": "1 if every pair obeys the envelope in every segment",
        "worst_ratio": "largest (pair coupling sum) / (h / D^alpha)",
        "worst_pair": "pair attaining worst_ratio",
        "worst_segment": "segment attaining worst_ratio",
    }
    return rows, columns, "sum of pair couplings <= h / D^alpha for every pair, every segment"


EXPERIMENTS = {
    "spread": _exp_spread,
    "correlator": _exp_correlator,
    "frobenius": _exp_frobenius,
    "t2": _exp_t2,
    "free-tail": _exp_free_tail,
    "transfer": _exp_transfer,
    "transfer-noise": lambda c, s, t, k: _exp_transfer(c, s, t, k, noise=True),
    "boson": _exp_boson,
    "bounds-table": _exp_bounds_table,
    "validate": _exp_validate,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _format_value(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.12g}"
    return str(v)


def _write_outputs(out_dir: Path, name: str, rows, columns, check, config, seed, extra=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = _config_hash(config, seed)
    for fname, text in (extra or {}).items():
        (out_dir / fname).write_text(text)
    csv_path = out_dir / f"{name}.csv"
    fields = list(columns.keys())
    with csv_path.open("w", newline="") as fh:
        fh.write(f"# lightcones {name} config_sha256={digest}\n")
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_value(row[k]) for k in fields})
    meta_path = out_dir / f"{name}.meta.json"
    meta = {
        "experiment": name,
        "version": __version__,
        "config": config,
        "seed": seed,
        "config_sha256": digest,
        "columns": columns,
        "checks": check,
        "rows": len(rows),
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path, meta_path


def run(experiment: str, config: dict, out_dir, seed: int = 0, threads: int = 1, caps=None):
    """Validate and execute one experiment; returns (csv_path, meta_path)."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    merged_caps = dict(DEFAULT_CAPS)
    if caps:
        merged_caps.update(caps)
    result = EXPERIMENTS[experiment](config, seed, threads, merged_caps)
    rows, columns, check = result[:3]
    extra = result[3] if len(result) > 3 else None
    return _write_outputs(
        Path(out_dir), experiment, rows, columns, check, config, seed, extra
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lightcones",
        description="Propagation-bound experiments for power-law interacting lattices",
    )
    parser.add_argument("experiment", choices=sorted(EXPERIMENTS), help="experiment to run")
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for grid points")
    parser.add_argument("--max-l", type=int, default=None, help="dense spin-chain cap")
    args = parser.parse_args(argv)
    config = {}
    if args.config is not None:
        try:
            config = parse_flat_config(args.config.read_text())
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    caps = {}
    if args.max_l is not None:
        caps["max_l"] = args.max_l
    try:
        csv_path, meta_path = run(
            args.experiment, config, args.out, args.seed, args.threads, caps
        )
    except ResourceCapError as exc:
        print(f"error: resource cap: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {csv_path} and {meta_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
