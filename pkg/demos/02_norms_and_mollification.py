"""Norm zoo and mollification rates.

Shows the spectral Sobolev seminorms, the second-difference Holder-Zygmund
scale, dyadic BMO, and how the mollification error of a rough field decays
at its Zygmund-class rate while a smooth field beats it.
"""

import numpy as np

from rieszlab import (
    GridField,
    GridSpec,
    MollifierSpec,
    bmo_seminorm,
    holder_zygmund_seminorm,
    log_lipschitz_modulus_check,
    mollification_rates,
    mollify,
    sobolev_seminorm,
)

spec = GridSpec(d=1, n=1024, length=2.0)
x = spec.axis()

print("=== plane-wave multipliers are exact ===")
wave = GridField(spec, np.cos(2 * np.pi * 3.0 * x))
for order in (0.5, 1.0, 1.5):
    ratio = sobolev_seminorm(wave, order, 2.0) / sobolev_seminorm(wave, 0.0, 2.0)
    print(f"order {order}: ratio = {ratio:.6f} vs (2 pi 3)^order = {(2*np.pi*3)**order:.6f}")

print("\n=== Holder-Zygmund and BMO on model profiles ===")
kink = GridField(spec, np.abs(x))
step = GridField(spec, np.where(x >= 0, 1.0, 0.0))
print(f"|x| in C^1-Zygmund: seminorm = {holder_zygmund_seminorm(kink, 1.0):.6f} (the kink gives 2)")
print(f"step in BMO: seminorm = {bmo_seminorm(step):.6f} (half the jump)")

print("\n=== mollification rates: Zygmund-rough vs smooth ===")
rough_vals = sum(2.0 ** (-j) * np.cos(2 * np.pi * 2**j * x / spec.length) for j in range(9))
rough = GridField(spec, rough_vals)
smooth = GridField(spec, np.sin(2 * np.pi * x / spec.length))
eps = [MollifierSpec(e) for e in (0.02, 0.04, 0.08, 0.16)]
for name, fld in (("rough", rough), ("smooth", smooth)):
    rep = mollification_rates(fld, eps, a=1.0)
    print(
        f"{name}: sup errors {np.array2string(rep.sup_errors, precision=4)} "
        f"log-log order {rep.loglog_order:.2f}  (error/eps max/min {rep.maxmin(rep.sup_rate):.2f})"
    )

print("\n=== sup never increases under mollification ===")
out = mollify(rough, MollifierSpec(0.05))
print(f"sup before {np.max(np.abs(rough.values)):.4f}, after {np.max(np.abs(out.values)):.4f}")

print("\n=== the log-Lipschitz modulus of a near-critical profile ===")
prof = np.zeros_like(x)
m = np.abs(x) > 0
prof[m] = x[m] * np.log(1.0 / np.maximum(np.abs(x[m]), spec.h / 2))
rep = log_lipschitz_modulus_check(GridField(spec, prof), 2.0, 20000)
print(f"empirical modulus constant C_hat = {rep.c_hat:.4f} at pair distance {rep.worst_distance:.4f}")
