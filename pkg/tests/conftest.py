import numpy as np
import pytest

from rieszlab import GridField, GridMeasure, GridSpec, ParticleConfig


def compact_bump(r2, radius):
    """C-infinity bump of squared radius, exactly zero outside |x| < radius."""
    out = np.zeros_like(r2)
    m = r2 < radius * radius
    out[m] = np.exp(-(radius * radius) / (radius * radius - r2[m]))
    return out


def bump_measure(spec: GridSpec, radius: float = 0.6, center=None) -> GridMeasure:
    center = np.zeros(spec.d) if center is None else np.asarray(center, dtype=float)

    def profile(*xs):
        r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
        return compact_bump(r2, radius)

    return GridMeasure.from_function(spec, profile)


def sample_iid(mu: GridMeasure, N: int, rng: np.random.Generator) -> ParticleConfig:
    spec = mu.spec
    prob = np.maximum(mu.density.values, 0.0).ravel()
    prob = prob / prob.sum()
    idx = rng.choice(prob.size, size=N, p=prob)
    pts = spec.grid_points()[idx] + rng.uniform(-0.5, 0.5, size=(N, spec.d)) * spec.h
    return ParticleConfig(pts)


def sample_iid_separated(
    mu: GridMeasure, N: int, rng: np.random.Generator, floor: float | None = None
) -> ParticleConfig:
    """iid draw conditioned on a micro-scale minimum gap.

    Close pairs at the N^-2 scale carry singular velocities no fixed-step
    integrator can resolve; conditioning on min-gap >= floor (default a
    fifth of the typical spacing) keeps the draw iid at macro scale.
    """
    floor = floor if floor is not None else 0.2 * mu.spec.length / (4 * N)
    pts = sample_iid(mu, N, rng).points
    for _ in range(200):
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(dist, np.inf)
        bad = np.unique(np.argwhere(dist < floor)[:, 0])
        if bad.size == 0:
            return ParticleConfig(pts)
        pts[bad] = sample_iid(mu, bad.size, rng).points
    raise RuntimeError("could not separate the sample")


def sample_antithetic(mu: GridMeasure, N: int, rng: np.random.Generator) -> ParticleConfig:
    """Symmetric iid draw (x paired with -x): the empirical dipole vanishes."""
    assert N % 2 == 0
    half = sample_iid(mu, N // 2, rng).points
    return ParticleConfig(np.concatenate([half, -half], axis=0))


def random_smooth_field(
    spec: GridSpec, rng: np.random.Generator, kmax: int = 6, vector: bool = True
) -> GridField:
    axes = np.meshgrid(*([spec.axis()] * spec.d), indexing="ij")
    comps = []
    for _ in range(spec.d if vector else 1):
        vals = np.zeros_like(axes[0])
        for a in range(spec.d):
            for k in range(1, kmax + 1):
                amp = rng.normal() / k**2
                phase = rng.uniform(0, 2 * np.pi)
                vals += amp * np.cos(2 * np.pi * k * axes[a] / spec.length + phase)
        comps.append(vals)
    if vector:
        return GridField(spec, np.stack(comps, axis=-1))
    return GridField(spec, comps[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
