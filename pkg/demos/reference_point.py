"""Every entropy route at one parameter point.

Run:  python3 demos/reference_point.py

Two oscillators, omega = 1 and Omega^2 = 10, coupled by C = 0.3 with
E1 = 20 and E2 = 200.  We first look at the normal modes, then compute the
slow oscillator's entropy five ways: classical closed form, classical
quadrature, torus Monte Carlo, a long trajectory, and the exact quantum
reduced density matrix.
"""
import math

from oscillent import (
    ModelParams,
    StateSpec,
    classical_entropy_closed_form,
    classical_entropy_quadrature,
    classical_entropy_torus_mc,
    classical_entropy_trajectory,
    exact_entropy,
    normal_modes,
    validate_regime,
)
from oscillent.wkb import lambda_spectrum, wkb_kernel_entropy

params = ModelParams(omega=1.0, Omega=math.sqrt(10.0), C=0.3)
state = StateSpec(E1=20.0, E2=200.0)

nm = normal_modes(params)
print(f"normal modes: omega1={nm.omega1:.6f} omega2={nm.omega2:.6f} beta={nm.beta:.6f}")
print(f"quanta (n, m) = {state.quanta(params)},  Schmidt bandwidth dn_max = {lambda_spectrum(state, params).dn_max:.4f}")
regime = validate_regime(params, state)
print("regime ratios:", {k: round(v, 4) for k, v in regime.ratios.items() if v is not None})
print()

ref = classical_entropy_closed_form(state, params).value
rows = [
    ("closed form", classical_entropy_closed_form(state, params)),
    ("quadrature", classical_entropy_quadrature(state, params)),
    ("torus Monte Carlo (1e6)", classical_entropy_torus_mc(state, params)),
    ("trajectory (1e6 steps)", classical_entropy_trajectory(state, params)),
    ("exact quantum kernel", exact_entropy(state, params)),
    ("WKB kernel", wkb_kernel_entropy(state, params)),
]
for name, r in rows:
    unc = f" +/- {r.uncertainty:.1e}" if r.uncertainty else ""
    print(f"{name:26s} S = {r.value:.5f}{unc}   S - S_closed = {r.value - ref:+.4f}")

# The closed form keeps only the leading small-C terms.  The sampling routes
# see the full rotation, which widens the band: at this C they sit about
# 0.4 nats higher.  The exact quantum entropy lands within 0.1 nats.
