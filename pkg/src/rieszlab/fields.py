"""Grid fields, spectral transforms, norms, and mollification.

Geometry convention: the physical box is [-L/2, L/2)^d sampled at n
power-of-two points per axis (spacing h = L/n).  Every spectral operation
zero-pads to padding*n points per axis so that circular convolution with a
kernel windowed at radius L/2 is an exact linear convolution for data
supported well inside the box.  Free-space kernels are smoothly windowed:
identical to the true kernel out to ``plateau * L/2`` and zero at L/2.

Fourier convention: e^{-2 pi i xi.x}; |grad| is the multiplier 2 pi |xi|.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DataError, PreconditionError, ResolutionError, UsageError
from .kernels import AdmissiblePotential

WINDOW_PLATEAU = 0.7  # fraction of L/2 on which the kernel window is exactly 1


# ---------------------------------------------------------------------------
# grid geometry


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L/2, L/2)^d with zero-padding factor."""

    d: int
    n: int
    length: float
    padding: int = 2

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise UsageError(f"d must be 1, 2, or 3, got {self.d}")
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise UsageError(f"n must be a power of two >= 4, got {self.n}")
        if self.length <= 0:
            raise UsageError("box length must be positive")
        if self.padding < 2 or self.padding != int(self.padding):
            raise UsageError("padding factor must be an integer >= 2")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def m(self) -> int:
        """Points per axis of the padded grid."""
        return self.padding * self.n

    def axis(self) -> np.ndarray:
        return -0.5 * self.length + self.h * np.arange(self.n)

    def grid_points(self) -> np.ndarray:
        """All physical nodes, shape (n^d, d)."""
        axes = np.meshgrid(*([self.axis()] * self.d), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def padded_coords(self) -> list[np.ndarray]:
        """Signed displacement coordinate per axis on the padded grid."""
        c = self.h * np.arange(self.m, dtype=float)
        c[c >= 0.5 * self.m * self.h] -= self.m * self.h
        return [c] * self.d

    def padded_freqs(self) -> list[np.ndarray]:
        return [np.fft.fftfreq(self.m, d=self.h)] * self.d

    def freqs(self) -> list[np.ndarray]:
        return [np.fft.fftfreq(self.n, d=self.h)] * self.d

    def freq_radius(self) -> np.ndarray:
        mesh = np.meshgrid(*self.freqs(), indexing="ij")
        return np.sqrt(sum(f * f for f in mesh))

    def coords(self) -> list[np.ndarray]:
        """Signed displacement coordinate per axis on the physical grid."""
        c = self.h * np.arange(self.n, dtype=float)
        c[c >= 0.5 * self.n * self.h] -= self.n * self.h
        return [c] * self.d

    def radius(self) -> np.ndarray:
        mesh = np.meshgrid(*self.coords(), indexing="ij")
        return np.sqrt(sum(c * c for c in mesh))

    def padded_radius(self) -> np.ndarray:
        mesh = np.meshgrid(*self.padded_coords(), indexing="ij")
        return np.sqrt(sum(c * c for c in mesh))

    def padded_freq_radius(self) -> np.ndarray:
        mesh = np.meshgrid(*self.padded_freqs(), indexing="ij")
        return np.sqrt(sum(f * f for f in mesh))

    @property
    def dxi(self) -> float:
        """Frequency-lattice spacing of the padded grid."""
        return 1.0 / (self.m * self.h)

    @property
    def nyquist(self) -> float:
        return 0.5 / self.h


# ---------------------------------------------------------------------------
# fields


@dataclass
class GridField:
    """Scalar or vector field sampled on the physical grid.

    ``values`` has shape (n,)*d for scalars or (n,)*d + (d,) for vectors.
    The spectral cache holds the FFT of the zero-padded values (raw numpy
    normalization) and is filled lazily.
    """

    spec: GridSpec
    values: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.spec.n,) * self.spec.d
        if self.values.shape == shape:
            pass
        elif self.values.shape == shape + (self.spec.d,):
            pass
        else:
            raise UsageError(
                f"values shape {self.values.shape} does not match grid {shape} "
                f"(optionally with a trailing component axis of size {self.spec.d})"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError("field values must be finite")

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == self.spec.d + 1

    @property
    def ncomp(self) -> int:
        return self.spec.d if self.is_vector else 1

    def component(self, i: int) -> np.ndarray:
        return self.values[..., i] if self.is_vector else self.values

    def components(self) -> list[np.ndarray]:
        return [self.component(i) for i in range(self.ncomp)]

    def padded(self) -> np.ndarray:
        """Zero-padded values, component axis (if any) preserved last."""
        spec = self.spec
        shape = (spec.m,) * spec.d + ((spec.d,) if self.is_vector else ())
        out = np.zeros(shape)
        sl = tuple(slice(0, spec.n) for _ in range(spec.d))
        out[sl] = self.values
        return out

    def spectrum(self) -> np.ndarray:
        """FFT of the padded values (no h^d factor), cached."""
        if self._spectrum is None:
            pad = self.padded()
            axes = tuple(range(self.spec.d))
            self._spectrum = np.fft.fftn(pad, axes=axes)
        return self._spectrum

    def mean(self) -> float:
        return float(np.mean(self.values))

    def discrete_integral(self) -> float:
        return float(np.sum(self.values) * self.spec.h**self.spec.d)

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.spec, values)

    @staticmethod
    def from_function(spec: GridSpec, fn: Callable, vector: bool = False) -> "GridField":
        axes = np.meshgrid(*([spec.axis()] * spec.d), indexing="ij")
        vals = fn(*axes)
        if vector:
            vals = np.stack(vals, axis=-1)
        return GridField(spec, np.asarray(vals, dtype=float))

    @staticmethod
    def zeros(spec: GridSpec, vector: bool = False) -> "GridField":
        shape = (spec.n,) * spec.d + ((spec.d,) if vector else ())
        return GridField(spec, np.zeros(shape))


def spectral_transform(fld: GridField, direction: str = "forward"):
    """Forward: fill and return the padded spectrum.  Inverse: rebuild the
    field from its cached spectrum (round-trip identity)."""
    if direction == "forward":
        return fld.spectrum()
    if direction == "inverse":
        if fld._spectrum is None:
            raise UsageError("no spectral representation cached; run forward first")
        axes = tuple(range(fld.spec.d))
        vals = np.fft.ifftn(fld._spectrum, axes=axes).real
        sl = tuple(slice(0, fld.spec.n) for _ in range(fld.spec.d))
        return GridField(fld.spec, vals[sl])
    raise UsageError(f"direction must be 'forward' or 'inverse', got {direction!r}")


@dataclass
class GridMeasure:
    """Probability density on the grid with empirical mass bookkeeping."""

    density: GridField
    mass: float = 1.0
    support_radius: float = 0.0
    probability: bool = True

    def __post_init__(self):
        if self.density.is_vector:
            raise UsageError("a measure density must be scalar")
        got = self.density.discrete_integral()
        if abs(got - self.mass) > 1e-10 * max(1.0, abs(self.mass)):
            raise DataError(f"discrete mass {got!r} differs from declared mass {self.mass!r}")
        if self.probability and float(np.min(self.density.values)) < -1e-12:
            raise DataError("probability density has a negative excursion beyond -1e-12")
        if self.support_radius == 0.0:
            vals = np.abs(self.density.values)
            if np.any(vals > 0):
                pts = self.density.spec.grid_points().reshape(
                    (self.density.spec.n,) * self.density.spec.d + (self.density.spec.d,)
                )
                r = np.sqrt(np.sum(pts * pts, axis=-1))
                self.support_radius = float(np.max(r[vals > 1e-14 * vals.max()]))

    @property
    def spec(self) -> GridSpec:
        return self.density.spec

    def lp_norm(self, p: float) -> float:
        return lp_norm_values(self.density.values, self.spec.h**self.spec.d, p)

    @staticmethod
    def from_function(spec: GridSpec, fn: Callable, normalize: bool = True) -> "GridMeasure":
        fld = GridField.from_function(spec, fn)
        vals = fld.values
        if normalize:
            tot = float(np.sum(vals) * spec.h**spec.d)
            if tot <= 0:
                raise DataError("cannot normalize a nonpositive density")
            vals = vals / tot
        return GridMeasure(GridField(spec, vals))


def lp_norm_values(values: np.ndarray, cell: float, p: float) -> float:
    """Discrete L^p norm of pointwise Euclidean magnitude."""
    mag = np.abs(values)
    if p == np.inf:
        return float(np.max(mag))
    if p <= 0:
        raise UsageError("p must be positive or inf")
    return float((np.sum(mag**p) * cell) ** (1.0 / p))


def _vector_magnitude(values: np.ndarray, is_vector: bool) -> np.ndarray:
    if is_vector:
        return np.sqrt(np.sum(values * values, axis=-1))
    return np.abs(values)


# ---------------------------------------------------------------------------
# windowed kernels and convolution


def smooth_fall(t: np.ndarray) -> np.ndarray:
    """C-infinity transition: 1 for t <= 0, 0 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    lo = t <= 0
    hi = t >= 1
    mid = ~(lo | hi)
    out[lo] = 1.0
    tm = t[mid]
    a = np.exp(-1.0 / (1.0 - tm))
    b = np.exp(-1.0 / tm)
    out[mid] = a / (a + b)
    return out


def kernel_window(spec: GridSpec, plateau: float = WINDOW_PLATEAU) -> np.ndarray:
    """Radial window on the padded grid: 1 out to plateau*L/2, 0 at L/2."""
    r = spec.padded_radius()
    r2 = 0.5 * spec.length
    r1 = plateau * r2
    return smooth_fall((r - r1) / (r2 - r1))


def sample_kernel(
    spec: GridSpec,
    fn_of_radius: Callable,
    origin_value: float = 0.0,
    windowed: bool = True,
    plateau: float = WINDOW_PLATEAU,
) -> np.ndarray:
    """Sample a radial kernel on the padded displacement grid.

    The origin node (the excised diagonal cell) gets ``origin_value``.
    """
    r = spec.padded_radius()
    out = np.empty_like(r)
    mask = r > 0
    out[mask] = fn_of_radius(r[mask])
    out[~mask] = origin_value
    if windowed:
        out *= kernel_window(spec, plateau)
        out[~mask] = origin_value
    return out


def sample_kernel_xy(
    spec: GridSpec,
    fn: Callable,
    origin_value: float = 0.0,
    windowed: bool = True,
    plateau: float = WINDOW_PLATEAU,
) -> np.ndarray:
    """Sample kernel(coords..., radius) on the padded displacement grid."""
    mesh = np.meshgrid(*spec.padded_coords(), indexing="ij")
    r = np.sqrt(sum(c * c for c in mesh))
    out = np.empty_like(r)
    mask = r > 0
    out[mask] = fn(*(c[mask] for c in mesh), r[mask])
    out[~mask] = origin_value
    if windowed:
        out *= kernel_window(spec, plateau)
        out[~mask] = origin_value
    return out


def convolve_spectrum(spec: GridSpec, kernel_spectrum: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Linear convolution (K * f)(x_j) = sum_k K(x_j - x_k) f_k h^d.

    ``values`` lives on the physical grid; the result is cropped back to it.
    """
    pad = np.zeros((spec.m,) * spec.d)
    sl = tuple(slice(0, spec.n) for _ in range(spec.d))
    pad[sl] = values
    conv = np.fft.ifftn(kernel_spectrum * np.fft.fftn(pad)).real
    return conv[sl] * spec.h**spec.d


# ---------------------------------------------------------------------------
# interpolation


def cubic_interpolate(fld: GridField, points: np.ndarray) -> np.ndarray:
    """Separable 4-point cubic Lagrange interpolation at arbitrary points.

    Periodic index wrap; exact on cubics, O(h^4) for smooth fields.
    Returns shape (npts,) for scalars, (npts, d) for vectors.
    """
    spec = fld.spec
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != spec.d:
        raise UsageError(f"points must have {spec.d} columns")
    h, n = spec.h, spec.n
    # fractional index of each point along each axis
    u = (pts + 0.5 * spec.length) / h
    base = np.floor(u).astype(int)
    t = u - base  # in [0,1)

    # Lagrange weights on stencil offsets (-1, 0, 1, 2)
    w = np.empty(pts.shape + (4,))
    tm = t
    w[..., 0] = -tm * (tm - 1) * (tm - 2) / 6.0
    w[..., 1] = (tm + 1) * (tm - 1) * (tm - 2) / 2.0
    w[..., 2] = -(tm + 1) * tm * (tm - 2) / 2.0
    w[..., 3] = (tm + 1) * tm * (tm - 1) / 6.0

    idx = [( (base[:, a][:, None] + np.arange(-1, 3)[None, :]) % n) for a in range(spec.d)]

    vals = fld.values
    out_shape = (pts.shape[0],) + ((spec.d,) if fld.is_vector else ())
    out = np.zeros(out_shape)
    # accumulate over the 4^d stencil
    for offsets in np.ndindex(*(4,) * spec.d):
        weight = np.ones(pts.shape[0])
        index = []
        for a, o in enumerate(offsets):
            weight = weight * w[:, a, o]
            index.append(idx[a][:, o])
        node_vals = vals[tuple(index)]
        if fld.is_vector:
            out += weight[:, None] * node_vals
        else:
            out += weight * node_vals
    return out


# ---------------------------------------------------------------------------
# spectral derivatives and multiplier norms


def spectral_gradient(fld: GridField) -> list[GridField]:
    """Per-component spectral gradient on the periodic grid.

    Returned list runs over the derivative direction; each entry keeps the
    component layout of the input.
    """
    spec = fld.spec
    freqs = np.meshgrid(*spec.freqs(), indexing="ij")
    outs = []
    for a in range(spec.d):
        mult = 2j * np.pi * freqs[a]
        if fld.is_vector:
            comps = [np.fft.ifftn(mult * np.fft.fftn(c)).real for c in fld.components()]
            outs.append(GridField(spec, np.stack(comps, axis=-1)))
        else:
            outs.append(GridField(spec, np.fft.ifftn(mult * np.fft.fftn(fld.values)).real))
    return outs


def _pad(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    out = np.zeros((spec.m,) * spec.d)
    sl = tuple(slice(0, spec.n) for _ in range(spec.d))
    out[sl] = values
    return out


def gradient_sup_norm(fld: GridField) -> float:
    """sup over the grid of the Frobenius norm of the spectral Jacobian."""
    grads = spectral_gradient(fld)
    sq = np.zeros((fld.spec.n,) * fld.spec.d)
    for g in grads:
        if g.is_vector:
            sq += np.sum(g.values**2, axis=-1)
        else:
            sq += g.values**2
    return float(np.sqrt(np.max(sq)))


def _require_zero_mean(fld: GridField, what: str):
    scale = max(1.0, float(np.max(np.abs(fld.values))))
    for c in fld.components():
        if abs(float(np.sum(c)) * fld.spec.h**fld.spec.d) > 1e-8 * scale:
            raise PreconditionError(f"{what} requires a zero-mean field")


def sobolev_seminorm(fld: GridField, order: float, p: float) -> float:
    """|| |grad|^order f ||_{L^p} via the padded spectral multiplier.

    p = 2 is evaluated entirely spectrally (Parseval); other p invert the
    multiplied spectrum and take the discrete L^p norm over the padded box.
    The zero mode is always excluded; order < 0 demands zero-mean input.
    """
    if order < 0:
        _require_zero_mean(fld, "a negative-order seminorm")
    spec = fld.spec
    rho = spec.freq_radius()
    mult = np.zeros_like(rho)
    nz = rho > 0
    mult[nz] = (2.0 * np.pi * rho[nz]) ** order
    dxi = 1.0 / spec.length

    if p == 2:
        total = 0.0
        for c in fld.components():
            fhat = np.fft.fftn(c) * spec.h**spec.d
            total += float(np.sum((mult * np.abs(fhat)) ** 2)) * dxi**spec.d
        return math.sqrt(total)

    comps = [np.fft.ifftn(mult * np.fft.fftn(c)).real for c in fld.components()]
    mag = np.sqrt(sum(c * c for c in comps)) if len(comps) > 1 else np.abs(comps[0])
    if p == np.inf:
        return float(np.max(mag))
    if p <= 0:
        raise UsageError("p must be positive or inf")
    return float((np.sum(mag**p) * spec.h**spec.d) ** (1.0 / p))


def _symbol_diverges_at_zero(pot: AdmissiblePotential) -> bool:
    lo, hi = float(pot.symbol(1e-6)), float(pot.symbol(1e-3))
    return lo > 10.0 * hi


def energy_seminorm(fld: GridField, pot: AdmissiblePotential) -> float:
    """Energy seminorm ||f||_{g_t} = sqrt( sum ghat_t(|xi|) |fhat(xi)|^2 dxi^d ).

    Zero mode excluded; zero-mean input demanded whenever the symbol
    diverges at zero frequency.
    """
    if _symbol_diverges_at_zero(pot):
        _require_zero_mean(fld, "an energy seminorm with a diverging symbol")
    spec = fld.spec
    rho = spec.freq_radius()
    nz = rho > 0
    weight = np.zeros_like(rho)
    weight[nz] = pot.scaled_symbol(rho[nz])
    if np.any(~np.isfinite(weight)) or np.any(weight < 0):
        raise DataError("potential symbol returned NaN or negative values")
    dxi = 1.0 / spec.length
    total = 0.0
    for c in fld.components():
        fhat = np.fft.fftn(c) * spec.h**spec.d
        total += float(np.sum(weight * np.abs(fhat) ** 2)) * dxi**spec.d
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# Holder-Zygmund and BMO


def _dyadic_shifts(spec: GridSpec) -> list[tuple[np.ndarray, float]]:
    """Dyadic grid shifts (axis-aligned and main diagonals) with |h| <= L/4."""
    shifts = []
    k = 1
    while k * spec.h <= 0.25 * spec.length + 1e-15:
        for a in range(spec.d):
            vec = np.zeros(spec.d, dtype=int)
            vec[a] = k
            shifts.append((vec, k * spec.h))
        if spec.d > 1 and k * spec.h * math.sqrt(spec.d) <= 0.25 * spec.length + 1e-15:
            shifts.append((np.full(spec.d, k, dtype=int), k * spec.h * math.sqrt(spec.d)))
        k *= 2
    return shifts


def holder_zygmund_seminorm(fld: GridField, theta: float) -> float:
    """Homogeneous Holder-Zygmund seminorm by second differences.

    theta in (0,1]: max over dyadic shifts of ||f(.+h)+f(.-h)-2f||_inf/|h|^theta.
    theta in (1,2]: inductively on the spectral first derivatives.
    """
    if theta <= 0:
        raise UsageError("theta must be positive")
    if theta > 2:
        raise UsageError("theta above 2 is out of scope")
    if theta > 1:
        grads = spectral_gradient(fld)
        return max(holder_zygmund_seminorm(g, theta - 1.0) for g in grads)

    best = 0.0
    vals = fld.values
    axes = tuple(range(fld.spec.d))
    for vec, mag in _dyadic_shifts(fld.spec):
        plus = np.roll(vals, shift=tuple(-vec), axis=axes)
        minus = np.roll(vals, shift=tuple(vec), axis=axes)
        second = plus + minus - 2.0 * vals
        sup = float(np.max(_vector_magnitude(second, fld.is_vector)))
        best = max(best, sup / mag**theta)
    return best


def bmo_seminorm(fld: GridField) -> float:
    """Dyadic BMO: max mean oscillation over dyadic subcubes (>= 2 cells)."""
    if fld.is_vector:
        return max(bmo_seminorm(GridField(fld.spec, c)) for c in fld.components())
    vals = fld.values
    n, d = fld.spec.n, fld.spec.d
    best = 0.0
    b = n
    while b >= 2:
        nb = n // b
        # reshape into (nb, b)*d blocks
        shape = []
        for _ in range(d):
            shape.extend([nb, b])
        order = list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))
        blocks = vals.reshape(shape).transpose(order).reshape((nb**d, b**d))
        means = blocks.mean(axis=1, keepdims=True)
        osc = np.abs(blocks - means).mean(axis=1)
        best = max(best, float(np.max(osc)))
        b //= 2
    return best


# ---------------------------------------------------------------------------
# mollification


def _mollifier_outer_radius(d: int) -> float:
    """Transition endpoint R in (1/4, 1] making the unit-mass bump exact."""
    from scipy.special import gamma as _g

    omega = 2 * np.pi ** (d / 2) / _g(d / 2)

    def mass(R):
        r_in = 0.25
        inner = omega * r_in**d / d
        rr = np.linspace(r_in, R, 4097)
        prof = smooth_fall((rr - r_in) / (R - r_in))
        outer = omega * np.trapezoid(prof * rr ** (d - 1), rr)
        return inner + outer - 1.0

    return float(brentq(mass, 0.2500001, 1.0, xtol=1e-14))


_MOLLIFIER_R = {}


def mollifier_profile(d: int) -> Callable:
    """The fixed even bump chi: 1 on B(0,1/4), supported in the unit ball,
    0 <= chi <= 1, integral 1 (transition endpoint solved per dimension)."""
    if d not in _MOLLIFIER_R:
        _MOLLIFIER_R[d] = _mollifier_outer_radius(d)
    R = _MOLLIFIER_R[d]

    def chi(r):
        return smooth_fall((np.asarray(r, dtype=float) - 0.25) / (R - 0.25))

    return chi


@dataclass(frozen=True)
class MollifierSpec:
    """Mollification scale; the profile chi is the fixed per-dimension bump."""

    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise UsageError("mollifier scale must be positive")

    def sampled(self, spec: GridSpec) -> np.ndarray:
        """chi_eps on the periodic grid, normalized to exact discrete unit mass."""
        if self.epsilon < 2 * spec.h:
            raise ResolutionError(
                f"mollifier scale {self.epsilon:g} is below 2h = {2 * spec.h:g}"
            )
        if self.epsilon > 0.25 * spec.length:
            raise UsageError("mollifier scale above L/4 would wrap around the box")
        chi = mollifier_profile(spec.d)
        r = spec.radius()
        vals = chi(r / self.epsilon) / self.epsilon**spec.d
        tot = float(np.sum(vals) * spec.h**spec.d)
        return vals / tot


def mollify(fld: GridField, m: MollifierSpec) -> GridField:
    """Componentwise periodic convolution with chi_eps (spectral product).

    The mollifier is tiny (eps <= L/4), so the periodic wrap is harmless;
    translation-invariant seminorms do not increase.
    """
    spec = fld.spec
    ker_hat = np.fft.fftn(m.sampled(spec))
    comps = [
        np.fft.ifftn(ker_hat * np.fft.fftn(c)).real * spec.h**spec.d
        for c in fld.components()
    ]
    vals = np.stack(comps, axis=-1) if fld.is_vector else comps[0]
    return GridField(spec, vals)


@dataclass
class RateReport:
    """Mollification error rates across a dyadic scale list.

    Sequences follow the four mollification estimates: the sup error over
    eps^a, the Holder error over eps^(a-b), the modulus-of-continuity
    variant, and the derivative growth ||grad^k v_eps||_inf eps / omega(2 eps).
    """

    epsilons: np.ndarray
    sup_rate: np.ndarray
    holder_rate: np.ndarray
    modulus_rate: np.ndarray
    derivative_rate: np.ndarray
    sup_errors: np.ndarray
    loglog_order: float

    def maxmin(self, seq: np.ndarray) -> float:
        seq = seq[np.isfinite(seq) & (seq > 0)]
        if len(seq) == 0:
            return 0.0
        return float(np.max(seq) / np.min(seq))


def _tensor_derivative(fld: GridField, k: int) -> list[GridField]:
    """All order-k spectral derivative components as scalar fields."""
    fields = [GridField(fld.spec, c) for c in fld.components()]
    for _ in range(k):
        nxt = []
        for f in fields:
            nxt.extend(spectral_gradient(f))
        fields = nxt
    return fields


def _sup_magnitude(fields: Sequence[GridField]) -> float:
    sq = sum(f.values**2 for f in fields)
    return float(np.sqrt(np.max(sq)))


def mollification_rates(
    fld: GridField,
    m_list: Sequence[MollifierSpec],
    a: float,
    k: int = 0,
    b: float | None = None,
    modulus: Callable | None = None,
) -> RateReport:
    """Error-rate sweep for grad^k v - grad^k v_eps across dyadic scales."""
    if len(m_list) < 3:
        raise UsageError("need at least 3 mollification scales")
    if not 0 < a <= 1:
        raise UsageError("a must lie in (0, 1]")
    b = 0.5 * a if b is None else b
    if not 0 < b <= a:
        raise UsageError("b must lie in (0, a]")
    omega = modulus or (lambda t: t**a)

    tensor = _tensor_derivative(fld, k)
    eps = np.array([m.epsilon for m in m_list])
    sup_err, hold_err, deriv_sup = [], [], []
    for m in m_list:
        smooth = [mollify(f, m) for f in tensor]
        diffs = [GridField(fld.spec, f.values - s.values) for f, s in zip(tensor, smooth)]
        sup_err.append(_sup_magnitude(diffs))
        hold_err.append(max(holder_zygmund_seminorm(dd, b) for dd in diffs))
        deriv_sup.append(_sup_magnitude([g for s in smooth for g in spectral_gradient(s)]))
    sup_err = np.array(sup_err)
    hold_err = np.array(hold_err)
    deriv_sup = np.array(deriv_sup)

    with np.errstate(divide="ignore", invalid="ignore"):
        sup_rate = sup_err / eps**a
        holder_rate = hold_err / eps ** (a - b)
        modulus_rate = sup_err / np.array([omega(2 * e) for e in eps])
        derivative_rate = deriv_sup * eps / np.array([omega(2 * e) for e in eps])

    pos = sup_err > 0
    if np.count_nonzero(pos) >= 2:
        slope = np.polyfit(np.log(eps[pos]), np.log(sup_err[pos]), 1)[0]
    else:
        slope = np.inf
    return RateReport(
        epsilons=eps,
        sup_rate=sup_rate,
        holder_rate=holder_rate,
        modulus_rate=modulus_rate,
        derivative_rate=derivative_rate,
        sup_errors=sup_err,
        loglog_order=float(slope),
    )


# ---------------------------------------------------------------------------
# log-Lipschitz modulus (Brezis-Wainger route)


@dataclass
class ModulusReport:
    c_hat: float
    seminorm: float
    p: float
    pairs: int
    worst_distance: float


def log_lipschitz_modulus_check(
    fld: GridField,
    p: float,
    pair_samples: int,
    rng: np.random.Generator | None = None,
) -> ModulusReport:
    """Empirical constant in the log-Lipschitz modulus bound.

    C_hat = max over sampled node pairs of
    |f(x)-f(y)| / ( ||f||_{W^{d/p+1,p}} |x-y| (1+|log|x-y||)^{1-1/p} ).
    """
    if not 1 < p < np.inf:
        raise UsageError("p must lie in (1, infinity)")
    if pair_samples < 1000:
        raise UsageError("need at least 1000 pair samples")
    rng = rng or np.random.default_rng(7)
    spec = fld.spec
    semi = sobolev_seminorm(fld, spec.d / p + 1.0, p)
    if semi <= 0:
        raise PreconditionError("degenerate input: zero Sobolev seminorm")

    pts = spec.grid_points()
    vals = np.stack([c.ravel() for c in fld.components()], axis=-1)
    i = rng.integers(0, len(pts), size=pair_samples)
    j = rng.integers(0, len(pts), size=pair_samples)
    keep = i != j
    i, j = i[keep], j[keep]
    dx = pts[i] - pts[j]
    dist = np.sqrt(np.sum(dx * dx, axis=-1))
    df = np.sqrt(np.sum((vals[i] - vals[j]) ** 2, axis=-1))
    denom = semi * dist * (1.0 + np.abs(np.log(dist))) ** (1.0 - 1.0 / p)
    quot = df / denom
    k = int(np.argmax(quot))
    return ModulusReport(
        c_hat=float(quot[k]),
        seminorm=semi,
        p=p,
        pairs=int(len(i)),
        worst_distance=float(dist[k]),
    )


# ---------------------------------------------------------------------------
# serialization


def save_field_binary(fld: GridField, path) -> None:
    """Flat binary layout: int64 d, int64 n, float64 L, then row-major f64."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qqd", fld.spec.d, fld.spec.n, fld.spec.length))
        fh.write(np.ascontiguousarray(fld.values, dtype="<f8").tobytes())


def load_field_binary(path, padding: int = 2) -> GridField:
    with open(path, "rb") as fh:
        d, n, length = struct.unpack("<qqd", fh.read(24))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    spec = GridSpec(d=int(d), n=int(n), length=float(length), padding=padding)
    per_node = raw.size // n**d
    if per_node == 1:
        vals = raw.reshape((n,) * d)
    elif per_node == d:
        vals = raw.reshape((n,) * d + (d,))
    else:
        raise DataError(f"file holds {raw.size} floats, not a scalar or vector field on n={n}^d")
    return GridField(spec, vals.copy())


def field_to_csv(fld: GridField, path) -> None:
    """CSV dump (small grids): coordinate columns then value column(s)."""
    pts = fld.spec.grid_points()
    vals = np.stack([c.ravel() for c in fld.components()], axis=-1)
    header = ",".join([f"x{a+1}" for a in range(fld.spec.d)] + [f"v{c+1}" for c in range(vals.shape[1])])
    rows = [header]
    for p, v in zip(pts, vals):
        rows.append(",".join(f"{x:.17g}" for x in (*p, *v)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")
