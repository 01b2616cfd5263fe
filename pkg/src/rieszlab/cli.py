"""Configuration-driven command-line front end.

One experiment per invocation: TOML config in, CSV/JSON reports out.  Exit
codes: 0 success, 1 usage/config error, 2 numerical or precondition
failure.  Identical config + seed produces byte-identical CSV output; the
JSON summary echoes the fully resolved config, library versions, the wall
clock, and every fitted constant, so each number is reproducible from the
report alone.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

try:  # Python 3.11+
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - environment dependent
    import tomli as _toml

from . import __version__
from .errors import CollisionError, RieszLabError, UsageError
from .fields import (
    GridField,
    GridMeasure,
    GridSpec,
    MollifierSpec,
    mollification_rates,
    sobolev_seminorm,
    holder_zygmund_seminorm,
    bmo_seminorm,
    energy_seminorm,
)
from .kernels import RieszParams, admissible_check, gaussian_admissible, riesz_admissible
from .energy import (
    BoundConstants,
    ParticleConfig,
    commutator_An,
    identity_field,
    modulated_energy,
)
from .counterexamples import (
    CSV_HEADER,
    bmo_hilbert_batch,
    build_cef2,
    cef1_sweep,
    cef2_ratio,
)
from .dynamics import (
    GronwallInput,
    MFBoundParams,
    SimSetup,
    coupled_run,
    gronwall_bound,
    mf_bound_trajectory,
    simulate_particles,
)

SUBCOMMANDS = (
    "energy",
    "commutator",
    "counterexample-cef1",
    "counterexample-cef2",
    "counterexample-bmo1d",
    "mollify-rates",
    "gronwall",
    "simulate",
    "coupled",
    "norms",
    "admissible",
)

OUTPUT_ENV = "RIESZLAB_OUT"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    kernel: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        return {
            "kernel": self.kernel,
            "grid": self.grid,
            "experiment": self.experiment,
            "output": self.output,
        }


_KERNEL_DEFAULTS = {"d": 1, "s": -1.0, "t": 1.0}
_GRID_DEFAULTS = {"n": 256, "length": 4.0, "padding": 2}
_OUTPUT_DEFAULTS = {"dir": ".", "formats": ["csv", "json"], "seed": 0}


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment configuration."""
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except _toml.TOMLDecodeError as exc:
        raise UsageError(f"config parse error in {path}: {exc}")

    cfg = ExperimentConfig(
        kernel={**_KERNEL_DEFAULTS, **raw.get("kernel", {})},
        grid={**_GRID_DEFAULTS, **raw.get("grid", {})},
        experiment=dict(raw.get("experiment", {})),
        output={**_OUTPUT_DEFAULTS, **raw.get("output", {})},
    )
    d, s = cfg.kernel["d"], cfg.kernel["s"]
    if d not in (1, 2, 3):
        raise UsageError(f"kernel.d must be 1, 2, or 3 (config {path})")
    if not -2.0 < s < d:
        raise UsageError(f"kernel.s violates -2 < s < d (s={s}, d={d}, config {path})")
    if cfg.kernel["t"] <= 0:
        raise UsageError(f"kernel.t must be positive (config {path})")
    n = cfg.grid["n"]
    if n < 4 or (n & (n - 1)) != 0:
        raise UsageError(f"grid.n must be a power of two >= 4 (config {path})")
    if cfg.grid["length"] <= 0:
        raise UsageError(f"grid.length must be positive (config {path})")
    if cfg.grid["padding"] < 2:
        raise UsageError(f"grid.padding must be >= 2 (config {path})")
    if int(cfg.output["seed"]) < 0:
        raise UsageError(f"output.seed must be a nonnegative integer (config {path})")
    return cfg


def substream(seed: int, label: str) -> np.random.Generator:
    """Counter-based generator; per-experiment substreams by labeled hashing."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# report writers


def format_float(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: str, header: tuple, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(x) for x in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary(path: str, cfg: ExperimentConfig, payload: dict, t0: float) -> None:
    import scipy

    doc = {
        "config": cfg.resolved(),
        "versions": {
            "rieszlab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "wall_clock_s": time.time() - t0,
        **payload,
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON-serializable: {type(x)}")


# ---------------------------------------------------------------------------
# shared builders


def _grid_spec(cfg: ExperimentConfig, d: int | None = None) -> GridSpec:
    g = cfg.grid
    return GridSpec(
        d=d or cfg.kernel["d"], n=g["n"], length=g["length"], padding=g["padding"]
    )


def _params(cfg: ExperimentConfig) -> RieszParams:
    return RieszParams(d=cfg.kernel["d"], s=cfg.kernel["s"])


def _bump_measure(spec: GridSpec, width: float, center=None) -> GridMeasure:
    center = np.zeros(spec.d) if center is None else np.asarray(center, dtype=float)

    def profile(*xs):
        r2 = sum((x - c) ** 2 for x, c in zip(xs, center)) / width**2
        out = np.zeros_like(r2)
        m = r2 < 1.0
        out[m] = np.exp(-1.0 / (1.0 - r2[m]))
        return out

    return GridMeasure.from_function(spec, profile)


def _sample_particles(mu: GridMeasure, N: int, rng: np.random.Generator) -> ParticleConfig:
    """Draw iid points from the grid density by inverse-CDF on cells."""
    spec = mu.spec
    dens = np.maximum(mu.density.values, 0.0).ravel()
    prob = dens / dens.sum()
    idx = rng.choice(len(prob), size=N, p=prob)
    pts = spec.grid_points()[idx]
    jitter = rng.uniform(-0.5, 0.5, size=pts.shape) * spec.h
    return ParticleConfig(pts + jitter)


def _velocity_from_config(spec: GridSpec, kind: str, rng) -> GridField:
    if kind == "identity":
        return identity_field(spec)
    if kind == "fourier":
        axes = np.meshgrid(*([spec.axis()] * spec.d), indexing="ij")
        comps = []
        for _ in range(spec.d):
            vals = np.zeros_like(axes[0])
            for k in range(1, 5):
                amp = rng.normal() / k**2
                phase = rng.uniform(0, 2 * np.pi)
                vals += amp * np.cos(2 * np.pi * k * axes[0] / spec.length + phase)
            comps.append(vals)
        return GridField(spec, np.stack(comps, axis=-1))
    raise UsageError(f"unknown velocity kind {kind!r}")


# ---------------------------------------------------------------------------
# experiment runners (each returns a JSON payload; CSVs written directly)


def _run_energy(cfg, outdir, formats, rng):
    params = _params(cfg)
    spec = _grid_spec(cfg)
    exp = cfg.experiment
    mu = _bump_measure(spec, exp.get("width", 0.5))
    X = _sample_particles(mu, exp.get("N", 64), rng)
    rep = modulated_energy(X, mu, params, p=exp.get("p", np.inf))
    if "csv" in formats:
        write_csv(
            os.path.join(outdir, "energy.csv"),
            ("i", "r_i"),
            [(i, r) for i, r in enumerate(rep.r_i)],
        )
    return {"report": rep.to_dict()}


def _run_commutator(cfg, outdir, formats, rng):
    params = _params(cfg)
    spec = _grid_spec(cfg)
    exp = cfg.experiment
    mu = _bump_measure(spec, exp.get("width", 0.5))
    X = _sample_particles(mu, exp.get("N", 64), rng)
    v = _velocity_from_config(spec, exp.get("velocity", "identity"), rng)
    rep = commutator_An(X, mu, v, exp.get("order", 1), params)
    return {"report": rep.to_dict()}


def _run_cef1(cfg, outdir, formats, rng):
    params = _params(cfg)
    exp = cfg.experiment
    r_list = exp.get("scales", [1e-2, 1e-3, 1e-4])
    reports, monotone = cef1_sweep(
        params, r_list, n=exp.get("n", cfg.grid["n"]), length=exp.get("length", 1.5)
    )
    if "csv" in formats:
        write_csv(os.path.join(outdir, "cef1.csv"), CSV_HEADER, [r.row() for r in reports])
    return {
        "monotone": monotone,
        "ratios": [r.ratio for r in reports],
        "resonant_normalized": [r.extras["resonant_normalized"] for r in reports],
    }


def _run_cef2(cfg, outdir, formats, rng):
    params = _params(cfg)
    exp = cfg.experiment
    pot = riesz_admissible(params, t_scale=cfg.kernel["t"])
    a = exp.get("sigma_power", 2.2)
    p = exp.get("p", 2.0 * params.d / (a - 2.0) if a > 2 else np.inf)
    rows, ratios = [], []
    for k in exp.get("shells", [8.0, 16.0, 32.0]):
        inst = build_cef2(pot, float(k), n=exp.get("n", 2048), length=exp.get("length", 16.0))
        rep = cef2_ratio(inst, lambda rho: rho ** (a / 2.0), p)
        rows.append(rep.row())
        ratios.append(rep.ratio)
    if "csv" in formats:
        write_csv(os.path.join(outdir, "cef2.csv"), CSV_HEADER, rows)
    return {"ratios": ratios, "sigma_power": a, "p": p}


def _run_bmo1d(cfg, outdir, formats, rng):
    exp = cfg.experiment
    spec = _grid_spec(cfg, d=1)
    best, ratios = bmo_hilbert_batch(spec, exp.get("samples", 50), rng)
    if "csv" in formats:
        write_csv(
            os.path.join(outdir, "bmo1d.csv"),
            ("sample", "ratio"),
            [(i, r) for i, r in enumerate(ratios)],
        )
    return {"max_ratio": best, "samples": len(ratios)}


def _run_mollify_rates(cfg, outdir, formats, rng):
    exp = cfg.experiment
    spec = _grid_spec(cfg)
    x_axes = np.meshgrid(*([spec.axis()] * spec.d), indexing="ij")
    vals = np.zeros_like(x_axes[0])
    for j in range(exp.get("levels", 7)):
        vals += 2.0 ** (-j * exp.get("roughness", 1.0)) * np.cos(
            2 * np.pi * 2**j * x_axes[0] / spec.length
        )
    fld = GridField(spec, vals)
    eps_list = exp.get("epsilons", [0.05, 0.1, 0.2, 0.4])
    rep = mollification_rates(
        fld, [MollifierSpec(e) for e in eps_list], a=exp.get("a", 1.0), k=exp.get("k", 0)
    )
    if "csv" in formats:
        write_csv(
            os.path.join(outdir, "mollify_rates.csv"),
            ("epsilon", "sup_error", "sup_rate", "holder_rate", "modulus_rate", "derivative_rate"),
            list(
                zip(rep.epsilons, rep.sup_errors, rep.sup_rate, rep.holder_rate, rep.modulus_rate, rep.derivative_rate)
            ),
        )
    return {"loglog_order": rep.loglog_order, "sup_rate_maxmin": rep.maxmin(rep.sup_rate)}


def _run_gronwall(cfg, outdir, formats, rng):
    exp = cfg.experiment
    T = exp.get("T", 1.2)
    n = exp.get("steps", 1200)
    t = np.linspace(0.0, T, n + 1)
    inp = GronwallInput(
        a=exp.get("a", 2.0),
        times=t,
        C1=np.full_like(t, exp.get("c1", 1.0)),
        C2=np.full_like(t, exp.get("c2", 0.0)),
        x0=exp.get("x0", 1.0),
    )
    res = gronwall_bound(inp)
    if "csv" in formats:
        write_csv(
            os.path.join(outdir, "gronwall.csv"),
            ("t", "bound"),
            list(zip(res.times, res.bound)),
        )
    return {"T_star": res.T_star if np.isfinite(res.T_star) else "inf"}


def _matrix_from_kind(kind: str, d: int) -> np.ndarray:
    if kind == "gradient":
        return -np.eye(d)
    if kind == "hamiltonian":
        if d < 2:
            raise UsageError("antisymmetric flow needs d >= 2")
        M = np.zeros((d, d))
        M[0, 1], M[1, 0] = 1.0, -1.0
        return M
    if kind == "none":
        return np.zeros((d, d))
    raise UsageError(f"unknown flow kind {kind!r}")


def _run_simulate(cfg, outdir, formats, rng):
    params = _params(cfg)
    exp = cfg.experiment
    spec = _grid_spec(cfg)
    mu = _bump_measure(spec, exp.get("width", 0.5))
    X0 = _sample_particles(mu, exp.get("N", 32), rng)
    setup = SimSetup(
        params=params,
        M=_matrix_from_kind(exp.get("flow", "gradient"), params.d),
        dt=exp.get("dt", 1e-3),
        T=exp.get("T", 0.1),
        collision_floor=exp.get("collision_floor", 1e-9),
    )
    traj = simulate_particles(X0, setup, stride=exp.get("stride", 10))
    rows = []
    for t, cfg_t in zip(traj.times, traj.configs):
        dist = cfg_t.pairwise_distances()
        off = ~np.eye(cfg_t.N, dtype=bool)
        inter = float(np.sum(dist[off] ** (-params.s) / params.s if params.s != 0 else -np.log(dist[off]))) / (2 * cfg_t.N**2)
        rows.append((t, cfg_t.min_gap(), inter))
    if "csv" in formats:
        write_csv(os.path.join(outdir, "trajectory.csv"), ("t", "min_gap", "interaction_energy"), rows)
    return {"steps": len(traj.times), "final_min_gap": traj.configs[-1].min_gap()}


def _run_coupled(cfg, outdir, formats, rng):
    params = _params(cfg)
    exp = cfg.experiment
    spec = _grid_spec(cfg)
    mu0 = _bump_measure(spec, exp.get("width", 0.5))
    X0 = _sample_particles(mu0, exp.get("N", 256), rng)
    setup = SimSetup(
        params=params,
        M=_matrix_from_kind(exp.get("flow", "gradient"), params.d),
        dt=exp.get("dt", 2e-3),
        T=exp.get("T", 0.2),
        grid=spec,
        collision_floor=exp.get("collision_floor", 1e-9),
    )
    mfp = MFBoundParams(
        p=exp.get("p", 2.0),
        q=exp.get("q", np.inf),
        alpha=exp.get("alpha", 1.0),
        delta=exp.get("delta", 1e-2),
        vartheta=exp.get("vartheta", 0.0),
        vartheta_prime=exp.get("vartheta_prime", 0.0),
        C=exp.get("C", 1.0),
        C_p=exp.get("C_p", 1.0),
        C_q=exp.get("C_q", 1.0),
        C_vv=exp.get("C_vv", 1.0),
    )
    powers = []
    if -1.0 < params.s < 0.0 and mfp.vartheta:
        powers.append(abs(params.s) - mfp.vartheta)
    if params.s <= -1.0:
        powers.append(abs(params.s) - 1.0)
    run = coupled_run(
        X0, mu0, setup, report_stride=exp.get("stride", 10), p=mfp.p, q=mfp.q,
        moment_powers=tuple(powers),
    )
    audit = params.s != 0.0 and exp.get("audit", True)
    if audit:
        res = mf_bound_trajectory(run, mfp)
        bound, verdict, eps = res.bound, res.verdict, res.epsilon
    else:
        bound = np.full_like(run.times, np.nan)
        verdict, eps = None, None
    rows = [
        (
            run.times[i],
            run.F_N[i],
            run.A_1[i],
            run.lam[i],
            run.kappa[i],
            run.min_gap[i],
            run.u_W_norm[i],
            run.u_C1_norm[i],
            bound[i],
            1.0 if verdict else 0.0,
        )
        for i in range(len(run.times))
    ]
    if "csv" in formats:
        write_csv(
            os.path.join(outdir, "trajectory.csv"),
            ("t", "F_N", "A_1", "lambda", "kappa", "min_gap", "u_W_norm", "u_C1_norm", "bound", "verdict_flag"),
            rows,
        )
    return {
        "epsilon": eps,
        "verdict": verdict,
        "constants": {"C": mfp.C, "C_p": mfp.C_p, "C_q": mfp.C_q, "C_vv": mfp.C_vv},
        "F_start": run.F_N[0],
        "F_end": run.F_N[-1],
    }


def _run_norms(cfg, outdir, formats, rng):
    exp = cfg.experiment
    spec = _grid_spec(cfg)
    mu = _bump_measure(spec, exp.get("width", 0.5))
    f = GridField(spec, mu.density.values - float(np.mean(mu.density.values)))
    params = _params(cfg)
    pot = riesz_admissible(params, t_scale=cfg.kernel["t"])
    out = {
        "sobolev": sobolev_seminorm(f, exp.get("order", 1.0), exp.get("p", 2.0)),
        "holder": holder_zygmund_seminorm(f, exp.get("theta", 1.0)),
        "bmo": bmo_seminorm(f),
        "energy": energy_seminorm(f, pot),
    }
    return {"norms": out}


def _run_admissible(cfg, outdir, formats, rng):
    exp = cfg.experiment
    params = _params(cfg)
    if exp.get("potential", "riesz") == "gaussian":
        pot = gaussian_admissible(params.d, t_scale=cfg.kernel["t"])
    else:
        pot = riesz_admissible(params, t_scale=cfg.kernel["t"])
    a = exp.get("sigma_power", 1.0)
    radii = np.asarray(exp.get("radii", [2.0 * 2**j for j in range(8)]), dtype=float)
    rep = admissible_check(pot, lambda r: r**a, exp.get("p", 2.0), radii, rng=rng)
    return {
        "cpd_min": rep.cpd_min,
        "decay_ratio": rep.decay_ratio,
        "sigma_ratio": rep.sigma_ratio,
        "symbol_monotone": rep.symbol_monotone,
    }


_RUNNERS = {
    "energy": _run_energy,
    "commutator": _run_commutator,
    "counterexample-cef1": _run_cef1,
    "counterexample-cef2": _run_cef2,
    "counterexample-bmo1d": _run_bmo1d,
    "mollify-rates": _run_mollify_rates,
    "gronwall": _run_gronwall,
    "simulate": _run_simulate,
    "coupled": _run_coupled,
    "norms": _run_norms,
    "admissible": _run_admissible,
}


# ---------------------------------------------------------------------------
# entry point


def run_command(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="rieszlab",
        description="Riesz-kernel modulated-energy laboratory",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="TOML experiment file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="64-bit master seed")
    parser.add_argument("--threads", type=int, default=1, help="thread budget (recorded)")
    parser.add_argument("--format", default=None, help="comma list: csv,json")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0

    t0 = time.time()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.output["seed"] = args.seed
        if args.out is not None:
            cfg.output["dir"] = args.out
        env_dir = os.environ.get(OUTPUT_ENV)
        if env_dir:
            cfg.output["dir"] = env_dir
        if args.format:
            cfg.output["formats"] = [f.strip() for f in args.format.split(",") if f.strip()]
        formats = cfg.output["formats"]
        outdir = cfg.output["dir"]
        os.makedirs(outdir, exist_ok=True)
        rng = substream(int(cfg.output["seed"]), args.subcommand)
        payload = _RUNNERS[args.subcommand](cfg, outdir, formats, rng)
        payload["seed"] = int(cfg.output["seed"])
        payload["threads"] = args.threads
        if "json" in formats:
            write_summary(os.path.join(outdir, "summary.json"), cfg, payload, t0)
        return 0
    except CollisionError as exc:
        record = {"error": "collision", "time": exc.time, "pair": list(exc.pair), "distance": exc.distance}
        try:
            outdir = locals().get("outdir", ".")
            with open(os.path.join(outdir, "error.json"), "w") as fh:
                json.dump(record, fh, indent=2)
        except OSError:
            pass
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except RieszLabError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def main() -> None:  # console entry point
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
