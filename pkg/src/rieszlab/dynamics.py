"""Particle dynamics, the mean-field transport PDE, and bound trajectories.

The particle system is the first-order flow

    dx_i/dt = (1/N) sum_{j != i} M grad g(x_i - x_j) - V^t(x_i),

integrated with classical fourth-order Runge-Kutta and a hard collision
floor (forces are never regularized: that would silently change the energy
semantics).  The limiting density solves the conservative transport

    d mu / dt = div( mu (V - M grad g * mu) ),

advanced pseudo-spectrally with 2/3-rule dealiasing and optional fourth-
order spectral hyperviscosity.  Coupled runs advance both on one clock and
log the modulated energy, the first-order commutator along u = V - M grad
g * mu, and the norm series feeding the mean-field bound trajectory.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CollisionError, DataError, PreconditionError, UsageError
from .fields import (
    GridField,
    GridMeasure,
    GridSpec,
    cubic_interpolate,
    holder_zygmund_seminorm,
    sobolev_seminorm,
)
from .kernels import RieszParams
from .energy import (
    ParticleConfig,
    commutator_An,
    grad_g_kernel_spectra,
    modulated_energy,
    moment,
)
from .fields import convolve_spectrum


@dataclass
class SimSetup:
    """Shared configuration of the particle and mean-field solvers."""

    params: RieszParams
    M: np.ndarray
    dt: float
    T: float
    collision_floor: float = 1e-9
    V: Callable | None = None  # t -> GridField (vector) or None
    grid: GridSpec | None = None
    dealias: bool = True
    hyperviscosity: float = 0.0
    interaction: bool = True

    def __post_init__(self):
        self.M = np.atleast_2d(np.asarray(self.M, dtype=float))
        if self.M.shape != (self.params.d, self.params.d):
            raise UsageError(f"M must be {self.params.d} x {self.params.d}")
        if self.dt <= 0 or self.T < self.dt:
            raise UsageError("need dt > 0 and T >= dt")
        if self.collision_floor <= 0:
            raise UsageError("collision floor must be positive")

    def external_field(self, t: float) -> GridField | None:
        if self.V is None:
            return None
        return self.V(t)


@dataclass
class ParticleTrajectory:
    times: np.ndarray
    configs: list[ParticleConfig]


def _pairwise_drift(points: np.ndarray, params: RieszParams, M: np.ndarray) -> np.ndarray:
    """(1/N) sum_{j != i} M grad g(x_i - x_j) for all i."""
    N = points.shape[0]
    diff = points[:, None, :] - points[None, :, :]
    r2 = np.sum(diff * diff, axis=-1)
    np.fill_diagonal(r2, 1.0)
    w = r2 ** (-(params.s + 2.0) / 2.0)
    np.fill_diagonal(w, 0.0)
    grad = -(w[..., None] * diff)  # grad g(x_i - x_j)
    if not np.all(np.isfinite(grad)):
        raise DataError("NaN force: configuration too singular for this step")
    total = np.sum(grad, axis=1) / N
    return total @ M.T


def _particle_velocity(points: np.ndarray, t: float, setup: SimSetup) -> np.ndarray:
    vel = np.zeros_like(points)
    if setup.interaction:
        vel += _pairwise_drift(points, setup.params, setup.M)
    ext = setup.external_field(t)
    if ext is not None:
        vel -= np.atleast_2d(cubic_interpolate(ext, points)).reshape(points.shape)
    return vel


def _rk4(points: np.ndarray, t: float, dt: float, rhs) -> np.ndarray:
    k1 = rhs(points, t)
    k2 = rhs(points + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(points + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(points + dt * k3, t + dt)
    return points + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_particles(
    X0: ParticleConfig, setup: SimSetup, stride: int = 1
) -> ParticleTrajectory:
    """RK4 trajectory of the pairwise system; hard stop on collisions."""
    if X0.min_gap() <= setup.collision_floor:
        raise PreconditionError("initial configuration is below the collision floor")
    n_steps = int(round(setup.T / setup.dt))
    pts = X0.points.copy()
    times = [0.0]
    configs = [ParticleConfig(pts.copy())]
    rhs = lambda p, t: _particle_velocity(p, t, setup)
    for step in range(1, n_steps + 1):
        t = (step - 1) * setup.dt
        pts = _rk4(pts, t, setup.dt, rhs)
        cfg = ParticleConfig(pts.copy())
        gap = cfg.min_gap()
        if gap < setup.collision_floor:
            dist = cfg.pairwise_distances()
            np.fill_diagonal(dist, np.inf)
            pair = np.unravel_index(np.argmin(dist), dist.shape)
            raise CollisionError(step * setup.dt, pair, gap)
        if step % stride == 0 or step == n_steps:
            times.append(step * setup.dt)
            configs.append(cfg)
    return ParticleTrajectory(times=np.array(times), configs=configs)


# ---------------------------------------------------------------------------
# mean-field transport


@dataclass
class MeasureTrajectory:
    times: np.ndarray
    measures: list[GridMeasure]


def _dealias_mask(spec: GridSpec) -> np.ndarray:
    cutoff = (2.0 / 3.0) * spec.nyquist
    freqs = np.meshgrid(*spec.freqs(), indexing="ij")
    mask = np.ones((spec.n,) * spec.d)
    for f in freqs:
        mask *= np.abs(f) <= cutoff
    return mask


def velocity_field(mu_vals: np.ndarray, t: float, setup: SimSetup) -> GridField:
    """u = V - M (grad g * mu) on the grid (windowed-kernel convolution)."""
    spec = setup.grid
    comps_conv = []
    if setup.interaction:
        spectra = grad_g_kernel_spectra(spec, setup.params)
        comps_conv = [convolve_spectrum(spec, spectra[b], mu_vals) for b in range(spec.d)]
    comps = []
    ext = setup.external_field(t)
    for a in range(spec.d):
        u_a = np.zeros((spec.n,) * spec.d)
        if ext is not None:
            u_a += ext.component(a)
        if setup.interaction:
            for b in range(spec.d):
                u_a -= setup.M[a, b] * comps_conv[b]
        comps.append(u_a)
    vals = np.stack(comps, axis=-1) if spec.d > 1 else comps[0][..., None]
    return GridField(spec, vals)


def _transport_rhs(mu_vals: np.ndarray, t: float, setup: SimSetup, mask: np.ndarray) -> np.ndarray:
    spec = setup.grid
    u = velocity_field(mu_vals, t, setup)
    freqs = np.meshgrid(*spec.freqs(), indexing="ij")
    out = np.zeros_like(mu_vals)
    for a in range(spec.d):
        flux = mu_vals * u.component(a)
        fhat = np.fft.fftn(flux)
        if setup.dealias:
            fhat = fhat * mask
        out += np.fft.ifftn(2j * np.pi * freqs[a] * fhat).real
    if setup.hyperviscosity > 0:
        rho = spec.freq_radius()
        out -= setup.hyperviscosity * np.fft.ifftn(
            (2.0 * np.pi * rho) ** 4 * np.fft.fftn(mu_vals)
        ).real
    return out


def _check_cfl(mu_vals: np.ndarray, t: float, setup: SimSetup):
    u = velocity_field(mu_vals, t, setup)
    vmax = float(np.max(np.sqrt(np.sum(u.values**2, axis=-1))))
    if vmax * setup.dt / setup.grid.h > 0.5:
        raise UsageError(
            f"CFL violation: max speed {vmax:.3g} * dt / h = "
            f"{vmax * setup.dt / setup.grid.h:.3g} > 0.5"
        )


def solve_meanfield(
    mu0: GridMeasure, setup: SimSetup, stride: int = 1
) -> MeasureTrajectory:
    """Pseudo-spectral conservative transport of the density."""
    if setup.grid is None:
        setup.grid = mu0.spec
    if setup.grid != mu0.spec:
        raise UsageError("setup grid and measure grid disagree")
    mask = _dealias_mask(setup.grid)
    n_steps = int(round(setup.T / setup.dt))
    vals = mu0.density.values.copy()
    times = [0.0]
    out = [mu0]
    rhs = lambda v, t: _transport_rhs(v, t, setup, mask)
    for step in range(1, n_steps + 1):
        t = (step - 1) * setup.dt
        _check_cfl(vals, t, setup)
        vals = _rk4(vals, t, setup.dt, rhs)
        if float(np.min(vals)) < -1e-6:
            warnings.warn(
                f"density excursion {float(np.min(vals)):.3g} below -1e-6 at "
                f"t={step * setup.dt:.4g}: transport under-resolved",
                RuntimeWarning,
            )
        if step % stride == 0 or step == n_steps:
            times.append(step * setup.dt)
            out.append(
                GridMeasure(
                    GridField(setup.grid, vals.copy()),
                    mass=float(np.sum(vals) * setup.grid.h**setup.grid.d),
                    probability=False,
                )
            )
    return MeasureTrajectory(times=np.array(times), measures=out)


# ---------------------------------------------------------------------------
# coupled runs


@dataclass
class CoupledRunResult:
    """Stride-sampled diagnostics of a coupled particle / mean-field run."""

    times: np.ndarray
    F_N: np.ndarray
    A_1: np.ndarray
    lam: np.ndarray
    kappa: np.ndarray
    min_gap: np.ndarray
    u_W_norm: np.ndarray
    u_C1_norm: np.ndarray
    mu_Lq: np.ndarray
    mu_sup: np.ndarray
    mu_holder: np.ndarray
    moments: dict[str, np.ndarray]
    N: int
    params: RieszParams
    p: float
    q: float
    final_config: ParticleConfig | None = None
    final_measure: GridMeasure | None = None


def coupled_run(
    X0: ParticleConfig,
    mu0: GridMeasure,
    setup: SimSetup,
    report_stride: int = 1,
    p: float = 2.0,
    q: float = np.inf,
    moment_powers: tuple = (),
) -> CoupledRunResult:
    """Co-advance particles and density; log energy/commutator/norm series.

    Particles follow the exact pairwise field of the microscopic system
    (plus the interpolated external field); the diagnostic transport for
    A_1 and the norm series is the single spectral velocity
    u^t = V^t - M grad g * mu^t that also advects the PDE.
    """
    if setup.grid is None:
        setup.grid = mu0.spec
    if setup.grid != mu0.spec:
        raise UsageError("setup grid and measure grid disagree")
    spec = setup.grid
    mask = _dealias_mask(spec)
    n_steps = int(round(setup.T / setup.dt))
    pts = X0.points.copy()
    vals = mu0.density.values.copy()

    rows = {k: [] for k in ("t", "F", "A1", "lam", "kappa", "gap", "uW", "uC1", "muLq", "muSup", "muHolder")}
    mom_rows = {f"abs_x_{pw:g}": [] for pw in moment_powers}
    s, d = setup.params.s, setup.params.d
    need_holder = s > 0.0 and s >= d - 1.0

    def record(t, pts, vals):
        mu_t = GridMeasure(
            GridField(spec, vals.copy()),
            mass=float(np.sum(vals) * spec.h**spec.d),
            probability=False,
        )
        X_t = ParticleConfig(pts.copy())
        u_t = velocity_field(vals, t, setup)
        rep = modulated_energy(X_t, mu_t, setup.params, p=q)
        com = commutator_An(X_t, mu_t, u_t, 1, setup.params)
        rows["t"].append(t)
        rows["F"].append(rep.F_N)
        rows["A1"].append(com.value)
        rows["lam"].append(rep.lam)
        rows["kappa"].append(rep.kappa if rep.kappa is not None else np.nan)
        rows["gap"].append(X_t.min_gap())
        rows["uW"].append(sobolev_seminorm(u_t, spec.d / p + 1.0, p))
        rows["uC1"].append(holder_zygmund_seminorm(u_t, 1.0))
        rows["muLq"].append(mu_t.lp_norm(q))
        rows["muSup"].append(mu_t.lp_norm(np.inf))
        rows["muHolder"].append(
            holder_zygmund_seminorm(mu_t.density, s + 2.0 - d) if need_holder else np.nan
        )
        for pw in moment_powers:
            mom_rows[f"abs_x_{pw:g}"].append(moment(mu_t, pw))
        return X_t, mu_t

    record(0.0, pts, vals)
    prhs = lambda P, t: _particle_velocity(P, t, setup)
    mrhs = lambda V, t: _transport_rhs(V, t, setup, mask)
    X_last, mu_last = None, None
    for step in range(1, n_steps + 1):
        t = (step - 1) * setup.dt
        _check_cfl(vals, t, setup)
        pts = _rk4(pts, t, setup.dt, prhs)
        vals = _rk4(vals, t, setup.dt, mrhs)
        cfg = ParticleConfig(pts.copy())
        gap = cfg.min_gap()
        if gap < setup.collision_floor:
            dist = cfg.pairwise_distances()
            np.fill_diagonal(dist, np.inf)
            pair = np.unravel_index(np.argmin(dist), dist.shape)
            raise CollisionError(step * setup.dt, pair, gap)
        if step % report_stride == 0 or step == n_steps:
            X_last, mu_last = record(step * setup.dt, pts, vals)

    return CoupledRunResult(
        times=np.array(rows["t"]),
        F_N=np.array(rows["F"]),
        A_1=np.array(rows["A1"]),
        lam=np.array(rows["lam"]),
        kappa=np.array(rows["kappa"]),
        min_gap=np.array(rows["gap"]),
        u_W_norm=np.array(rows["uW"]),
        u_C1_norm=np.array(rows["uC1"]),
        mu_Lq=np.array(rows["muLq"]),
        mu_sup=np.array(rows["muSup"]),
        mu_holder=np.array(rows["muHolder"]),
        moments={k: np.array(v) for k, v in mom_rows.items()},
        N=X0.N,
        params=setup.params,
        p=p,
        q=q,
        final_config=X_last,
        final_measure=mu_last,
    )


# ---------------------------------------------------------------------------
# Gronwall machinery


@dataclass
class GronwallInput:
    """Coefficients of dx/dt <= C1 x^a + C2 x on the simulation clock."""

    a: float
    times: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    x0: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.C1 = np.asarray(self.C1, dtype=float)
        self.C2 = np.asarray(self.C2, dtype=float)
        if self.a < 0 or self.x0 < 0:
            raise UsageError("need a >= 0 and x0 >= 0")
        if np.any(self.C1 < 0) or np.any(self.C2 < 0):
            raise UsageError("coefficient series must be nonnegative")
        if not (len(self.times) == len(self.C1) == len(self.C2)):
            raise UsageError("series must share the time grid")
        if np.any(np.diff(self.times) <= 0):
            raise UsageError("time grid must be strictly increasing")


@dataclass
class GronwallResult:
    times: np.ndarray
    bound: np.ndarray
    T_star: float


def _cumtrapz(f: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))
    return out


def gronwall_bound(inp: GronwallInput) -> GronwallResult:
    """Explicit envelope for dx/dt <= C1 x^a + C2 x by trapezoid quadrature.

    Superlinear a > 1 yields a finite blow-up time T_star (the bound series
    is truncated with NaN beyond it, never an exception); a <= 1 yields the
    global integrating-factor envelope.
    """
    t, a = inp.times, inp.a
    int_C2 = _cumtrapz(inp.C2, t)
    if a == 1.0:
        bound = inp.x0 * np.exp(_cumtrapz(inp.C1 + inp.C2, t))
        return GronwallResult(times=t, bound=bound, T_star=np.inf)
    if a > 1.0:
        I = (a - 1.0) * _cumtrapz(inp.C1 * np.exp((a - 1.0) * int_C2), t)
        if inp.x0 == 0.0:
            return GronwallResult(times=t, bound=np.zeros_like(t), T_star=np.inf)
        cap = inp.x0 ** (1.0 - a)
        base = cap - I
        bound = np.full_like(t, np.nan)
        ok = base > 0
        bound[ok] = np.exp(int_C2[ok]) * base[ok] ** (-1.0 / (a - 1.0))
        if np.all(ok):
            T_star = np.inf
        else:
            j = int(np.argmax(~ok))
            if j == 0:
                T_star = t[0]
            else:
                # linear interpolation of I across the crossing
                frac = (cap - I[j - 1]) / (I[j] - I[j - 1])
                T_star = float(t[j - 1] + frac * (t[j] - t[j - 1]))
        return GronwallResult(times=t, bound=bound, T_star=T_star)
    # a < 1
    one = 1.0 - a
    inner = _cumtrapz(inp.C1 * np.exp(-one * int_C2), t)
    y = inp.x0**one * np.exp(one * int_C2) + one * np.exp(one * int_C2) * inner
    return GronwallResult(times=t, bound=y ** (1.0 / one), T_star=np.inf)


# ---------------------------------------------------------------------------
# Theorem-style mean-field bound trajectory


@dataclass
class MFBoundParams:
    """Exponents, constants, and the eps-schedule of the bound trajectory."""

    p: float = 2.0
    q: float = np.inf
    alpha: float = 1.0
    delta: float = 1e-2
    vartheta: float = 0.0
    vartheta_prime: float = 0.0
    theta: float = 0.0
    C: float = 1.0
    C_p: float = 1.0
    C_q: float = 1.0
    C_vv: float = 1.0

    def validate(self, params: RieszParams):
        d, s = params.d, params.s
        if s == 0.0:
            raise UsageError("the mean-field bound excludes s = 0")
        if not 1.0 < self.p < np.inf:
            raise UsageError("need 1 < p < infinity")
        if -1.0 < s < 0.0:
            if not (abs(s) / 2.0 < self.vartheta < abs(s)):
                raise UsageError("need vartheta in (|s|/2, |s|)")
            if not (0.0 < self.vartheta_prime < self.vartheta):
                raise UsageError("need 0 < vartheta' < vartheta")
        if self.alpha <= 0 or self.delta <= 0:
            raise UsageError("alpha and delta must be positive")


@dataclass
class MFBoundResult:
    epsilon: float
    script_E: np.ndarray
    bound: np.ndarray
    verdict: bool
    zeta: np.ndarray


def _suffix_max(z: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(z[::-1])[::-1]


def _zeta_series(run: CoupledRunResult, mfp: MFBoundParams, epsilon: float) -> np.ndarray:
    """Regime-matched zeta^tau series (the eps-weighted norm tail)."""
    d, s = run.params.d, run.params.s
    q = mfp.q
    holder_q = 1.0 if q == np.inf else (q - 1.0) / q
    if s >= max(d - 2.0, 0.0) and s > 0.0:
        lead = mfp.C_q * run.mu_Lq * run.lam ** (d * holder_q - s)
        expo = (s + 1.0) * q / (d * (q - 1.0)) if q != np.inf else (s + 1.0) / d
        extra = mfp.C_q * run.mu_Lq**expo if s < d - 1.0 else 0.0
        if s >= d - 1.0:
            theta = s + 2.0 - d
            he = (s + 1.0 - d) / theta
            extra = extra + mfp.C * (run.mu_holder**he + epsilon ** (d - s - 1.0) * run.mu_sup**he)
        return epsilon * (lead + extra)
    if 0.0 < s < d - 2.0:
        expo = (s + 1.0) * q / (d * (q - 1.0)) if q != np.inf else (s + 1.0) / d
        return epsilon * mfp.C_q * (
            run.mu_Lq * run.kappa ** (d * holder_q - s) + run.mu_Lq**expo
        )
    if -1.0 < s < 0.0:
        key = f"abs_x_{abs(s) - mfp.vartheta:g}"
        mom = run.moments[key]
        expo = (s + 1.0) * q / (d * (q - 1.0)) if q != np.inf else (s + 1.0) / d
        return epsilon * (
            mfp.C_vv * epsilon ** (mfp.vartheta_prime - 1.0) * mom
            + mfp.C * (1.0 + mfp.C_q * run.mu_Lq**expo)
        )
    key = f"abs_x_{abs(s) - 1:g}"
    return epsilon * mfp.C * run.moments[key]


def mf_bound_trajectory(run: CoupledRunResult, mfp: MFBoundParams) -> MFBoundResult:
    """Assemble script-E and the theorem's displayed bound; audit E <= bound.

    For 0 < s < d the scale eps solves the implicit equation
    eps = delta N^(1 - 2(s+1)/s - alpha) (script_E^0)^(-1/s) by bisection on
    the monotone map eps -> eps^s script_E^0(eps); for s < 0, eps = N^(-alpha).
    """
    params = run.params
    mfp.validate(params)
    d, s = params.d, params.s
    N = run.N
    t = run.times

    if s > 0.0:
        target = (mfp.delta * N ** (1.0 - 2.0 * (s + 1.0) / s - mfp.alpha)) ** s

        def implicit(eps):
            zeta = _zeta_series(run, mfp, eps)
            E0 = run.F_N[0] + float(np.max(zeta))
            return eps**s * max(E0, 1e-300) - target

        lo, hi = 1e-16, 1e4
        if implicit(lo) >= 0.0:
            epsilon = lo
        elif implicit(hi) <= 0.0:
            epsilon = hi
        else:
            for _ in range(200):
                mid = math.sqrt(lo * hi)
                if implicit(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
            epsilon = math.sqrt(lo * hi)
    else:
        epsilon = N ** (-mfp.alpha)

    zeta = _zeta_series(run, mfp, epsilon)
    script_E = run.F_N + _suffix_max(zeta)
    E0 = script_E[0]
    log_eps = 1.0 + abs(math.log(epsilon))
    defect = log_eps ** (1.0 - 1.0 / mfp.p)
    w_int = _cumtrapz(run.u_W_norm * mfp.C_p * defect, t)

    if s > 0.0:
        bound = mfp.C * E0 * np.exp(w_int)
    elif -1.0 < s < 0.0:
        expo = mfp.vartheta / abs(s)
        inner = _cumtrapz(mfp.C_vv * run.u_C1_norm * epsilon**mfp.vartheta, t)
        bound = (np.exp(expo * w_int) * (E0**expo + expo * inner)) ** (1.0 / expo)
    else:
        expo = 1.0 / abs(s)
        inner = _cumtrapz(mfp.C * run.u_C1_norm * epsilon, t)
        bound = (np.exp(expo * w_int) * (E0**expo + expo * inner)) ** (1.0 / expo)

    verdict = bool(np.all(script_E <= bound * (1.0 + 1e-12)))
    return MFBoundResult(epsilon=float(epsilon), script_E=script_E, bound=bound, verdict=verdict, zeta=zeta)
