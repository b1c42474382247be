"""Reduced phase-space density of the slow oscillator and its Boltzmann entropy.

Four independent routes to the entropy

    S_B = - int dx dpx W(x, px) ln[W(x, px) Delta]

are provided: the closed form, a (theta, y) quadrature of the small-coupling
marginal, k-nearest-neighbour estimation on exact invariant-torus samples and
the same estimator on randomly thinned steps of a symplectic trajectory.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln

from .core import (
    DomainError,
    ModelParams,
    NormalModes,
    OscillentError,
    PhasePoint,
    StateSpec,
    conserved_quantities,
    from_normal_coords,
    normal_modes,
)
from .quadrature import arcsine_mean, periodic_angle_mean

__all__ = [
    "Method",
    "EntropyResult",
    "RegimeWarning",
    "DegenerateSampleError",
    "SupportBand",
    "MarginalDensity",
    "support_band",
    "marginal_density",
    "classical_entropy_closed_form",
    "classical_entropy_quadrature",
    "classical_entropy_torus_leading",
    "torus_point",
    "sample_torus",
    "entropy_knn",
    "TrajectoryResult",
    "integrate_trajectory",
    "classical_entropy_torus_mc",
    "classical_entropy_trajectory",
]


class RegimeWarning(UserWarning):
    """An approximation is being used outside its intended regime."""


class DegenerateSampleError(OscillentError, ValueError):
    """Samples with zero spread or exact duplicates."""


class Method(str, enum.Enum):
    closed_form = "closed_form"
    quadrature = "quadrature"
    torus_mc = "torus_mc"
    trajectory = "trajectory"
    torus_leading = "torus_leading"
    exact_kernel = "exact_kernel"
    wkb_closed_form = "wkb_closed_form"
    wkb_quadrature = "wkb_quadrature"
    wkb_kernel = "wkb_kernel"
    ground_state = "ground_state"
    low_excitation = "low_excitation"


@dataclass(frozen=True)
class EntropyResult:
    value: float
    method: Method
    uncertainty: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = Method(self.method).value
        return d


# -- support band and marginal density ---------------------------------------


@dataclass(frozen=True)
class SupportBand:
    theta: float | np.ndarray
    X1: float | np.ndarray
    X2: float | np.ndarray

    @property
    def half_width(self):
        return 0.5 * (self.X2 - self.X1)

    @property
    def midpoint(self):
        return 0.5 * (self.X1 + self.X2)


def _band_half_width(theta, state: StateSpec, params: ModelParams):
    return (2.0 * params.C / params.Omega**2) * np.abs(np.cos(theta)) * math.sqrt(state.E_plus**2 - state.E_minus**2)


def support_band(theta, state: StateSpec, params: ModelParams) -> SupportBand:
    """Allowed range X1 <= R^2 <= X2 of R^2 = px^2 + omega^2 x^2 at polar angle theta."""
    if abs(state.E_minus) > state.E_plus:
        raise DomainError("|E_minus| must not exceed E_plus")
    mid = state.E_plus - state.E_minus
    A = _band_half_width(theta, state, params)
    return SupportBand(theta=theta, X1=mid - A, X2=mid + A)


class MarginalDensity:
    """W(x, px): probability density of the slow oscillator.

    ``mode="small_c"`` is the annular arcsine form kept to first order in C;
    ``mode="exact"`` keeps the full expression with the solved fast momentum
    and its 1/|px| Jacobian.  Points exactly on a support edge evaluate to
    ``inf``; use :meth:`boundary_mask` to tell them apart.
    """

    modes = ("small_c", "exact")

    def __init__(self, state: StateSpec, params: ModelParams, mode: str = "small_c"):
        if mode not in self.modes:
            raise ValueError(f"mode must be one of {self.modes}, got {mode!r}")
        self.state = state
        self.params = params
        self.mode = mode
        self.norm = params.omega * params.Omega / (2.0 * math.pi**2)

    def polar(self, X, theta):
        """Small-C density at R^2 = (E+ - E-) + X and angle theta."""
        X, theta = np.broadcast_arrays(np.asarray(X, float), np.asarray(theta, float))
        A = _band_half_width(theta, self.state, self.params)
        prod = (X + A) * (A - X)
        out = np.zeros(X.shape)
        # within a few ulp of an edge counts as the edge
        edge = np.abs(np.abs(X) - A) <= 8.0 * np.finfo(float).eps * np.maximum(A, np.abs(X))
        inside = (prod > 0) & ~edge
        out[inside] = (2.0 * self.norm / self.params.Omega) / np.sqrt(prod[inside])
        out[edge] = np.inf
        return out

    def _polar_coords(self, x, px):
        w = self.params.omega
        R2 = px * px + (w * x) ** 2
        theta = np.arctan2(w * x, px)
        return R2, theta

    def __call__(self, x, px):
        x, px = np.broadcast_arrays(np.asarray(x, float), np.asarray(px, float))
        if self.mode == "small_c":
            R2, theta = self._polar_coords(x, px)
            return self.polar(R2 - (self.state.E_plus - self.state.E_minus), theta)
        return self._exact(x, px)

    def _exact(self, x, px):
        p = self.params
        Ep, Em = self.state.E_plus, self.state.E_minus
        W2, w2, C = p.Omega**2, p.omega**2, p.C
        out = np.zeros(x.shape)
        nz = px != 0
        pxn, xn = px[nz], x[nz]
        pybar = W2 / (2.0 * C * pxn) * (Em - Ep + pxn**2 + w2 * xn**2)
        disc = C**2 * xn**2 + W2 * (2.0 * Ep - (pxn**2 + pybar**2 + w2 * xn**2))
        val = np.zeros(xn.shape)
        pos = disc > 0
        val[pos] = self.norm * W2 / (2.0 * abs(C) * np.abs(pxn[pos])) * 2.0 / np.sqrt(disc[pos])
        val[disc == 0] = np.inf
        out[nz] = val
        return out

    def boundary_mask(self, x, px):
        x, px = np.broadcast_arrays(np.asarray(x, float), np.asarray(px, float))
        return np.isinf(self(x, px))

    def support(self, theta) -> SupportBand:
        return support_band(theta, self.state, self.params)


def marginal_density(x, px, state: StateSpec, params: ModelParams, mode: str = "small_c"):
    return MarginalDensity(state, params, mode)(x, px)


# -- entropy: closed form and quadrature -------------------------------------


def _closed_form_argument(state: StateSpec, params: ModelParams) -> float:
    return (
        math.pi**2
        * params.C
        * math.sqrt(state.E1 * state.E2)
        / (params.delta_cell * params.omega * params.Omega**2)
    )


def classical_entropy_closed_form(state: StateSpec, params: ModelParams) -> EntropyResult:
    """S = ln[pi^2 C sqrt(E1 E2) / (Delta omega Omega^2)]; ln[pi C sqrt(E1 E2)/(hbar omega Omega^2)] at Delta = h/2."""
    meta = {"delta_cell": params.delta_cell}
    if params.C <= 0 or state.E1 <= 0 or state.E2 <= 0:
        warnings.warn("closed form undefined for C <= 0 or a vanishing mode energy", RegimeWarning, stacklevel=2)
        return EntropyResult(-math.inf, Method.closed_form, 0.0, {**meta, "undefined": True})
    arg = _closed_form_argument(state, params)
    value = math.log(arg)
    if value < 0:
        warnings.warn(
            f"classical entropy {value:.3g} < 0: interaction energy too small for the classical picture",
            RegimeWarning,
            stacklevel=2,
        )
    return EntropyResult(value, Method.closed_form, 0.0, {**meta, "argument": arg})


def classical_entropy_quadrature(
    state: StateSpec,
    params: ModelParams,
    n_nodes: int = 512,
    tol: float = 1e-6,
) -> EntropyResult:
    """Integrate -W ln(W Delta) numerically in the (theta, y = X/A) variables.

    The radial integral runs over Chebyshev-Gauss nodes (one Richardson step),
    the angular one through adaptive QUADPACK with breakpoints at the zeros
    of cos(theta).  W is evaluated pointwise through :class:`MarginalDensity`;
    the Jacobian dx dpx = A dy dtheta / (2 omega) is applied explicitly.
    """
    if params.C <= 0 or state.E1 <= 0 or state.E2 <= 0:
        raise DomainError("quadrature needs C > 0 and positive mode energies")
    W = MarginalDensity(state, params, "small_c")
    omega, delta = params.omega, params.delta_cell
    # measure per unit of (1/pi) dy/sqrt(1-y^2) (1/2pi) dtheta
    scale = math.pi**2 / omega
    y_err = []

    def inner(theta, want_entropy):
        A = float(_band_half_width(theta, state, params))

        def f(y):
            dens = W.polar(A * y, theta)
            mass = dens * A * np.sqrt(1.0 - y * y) * scale
            if not want_entropy:
                return mass
            return -mass * np.log(dens * delta)

        val, err = arcsine_mean(f, n_nodes)
        y_err.append(err)
        return val

    S, theta_err = periodic_angle_mean(lambda t: inner(t, True), epsabs=tol * 1e-3, epsrel=tol * 1e-3)
    norm, _ = periodic_angle_mean(lambda t: inner(t, False), epsabs=tol * 1e-3, epsrel=tol * 1e-3)
    err = theta_err + max(y_err)
    converged = err <= tol
    if not converged:
        warnings.warn(f"entropy quadrature reached only {err:.2e} (target {tol:.1e})", RuntimeWarning, stacklevel=2)
    return EntropyResult(
        float(S),
        Method.quadrature,
        float(err),
        {"n_nodes": n_nodes, "normalization": float(norm), "converged": bool(converged), "delta_cell": delta},
    )


def classical_entropy_torus_leading(state: StateSpec, params: ModelParams) -> EntropyResult:
    """Torus entropy to first order in the exact rotation angle, any frequency ratio.

    Averaging the radial arcsine band over the polar angle with the fast
    mode's elliptical footprint (axes b sqrt(2 E2) along px and
    b (omega/omega2) sqrt(2 E2) along omega x) gives

        S = ln[pi^2 |b| sqrt(E1 E2) (1 + omega/omega2) / (omega Delta)],

    which tends to the closed form when b -> C/Omega^2 and omega/omega2 -> 0.
    """
    nm = normal_modes(params)
    r = params.omega / nm.omega2
    arg = math.pi**2 * abs(nm.beta) * math.sqrt(state.E1 * state.E2) * (1.0 + r) / (params.omega * params.delta_cell)
    return EntropyResult(math.log(arg), Method.torus_leading, 0.0, {"frequency_ratio": r, "beta": nm.beta})


# -- invariant-torus sampling -------------------------------------------------


def torus_point(state: StateSpec, params: ModelParams, phi1, phi2, nm: NormalModes | None = None) -> PhasePoint:
    """Phase point(s) on the (E1, E2) torus at normal-mode angles (phi1, phi2)."""
    if nm is None:
        nm = normal_modes(params)
    a1, a2 = math.sqrt(2.0 * state.E1), math.sqrt(2.0 * state.E2)
    x1 = a1 / nm.omega1 * np.sin(phi1)
    p1 = a1 * np.cos(phi1)
    x2 = a2 / nm.omega2 * np.sin(phi2)
    p2 = a2 * np.cos(phi2)
    return from_normal_coords(x1, p1, x2, p2, nm)


_CHUNK = 1 << 20


def sample_torus(
    state: StateSpec,
    params: ModelParams,
    n_samples: int,
    seed: int = 0,
    full: bool = False,
) -> np.ndarray:
    """I.i.d. samples of the microcanonical (E1, E2) distribution.

    Returns an ``(n, 2)`` array of ``(x, px)``, or ``(n, 4)`` of
    ``(x, y, px, py)`` when ``full``.  Angles are drawn chunk by chunk from
    Philox streams spawned off ``seed``, so output depends only on
    ``(seed, n_samples)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    nm = normal_modes(params)
    n_chunks = -(-n_samples // _CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty((n_samples, 4 if full else 2))
    for i, ss in enumerate(seqs):
        lo, hi = i * _CHUNK, min((i + 1) * _CHUNK, n_samples)
        rng = np.random.Generator(np.random.Philox(ss))
        phi = rng.uniform(0.0, 2.0 * np.pi, size=(2, hi - lo))
        p = torus_point(state, params, phi[0], phi[1], nm)
        if full:
            out[lo:hi] = np.column_stack([p.x, p.y, p.px, p.py])
        else:
            out[lo:hi, 0] = p.x
            out[lo:hi, 1] = p.px
    return out


# -- k-nearest-neighbour entropy ----------------------------------------------


def entropy_knn(
    samples,
    delta_cell: float,
    k: int = 4,
    min_samples: int = 10_000,
    n_blocks: int = 100,
    n_boot: int = 500,
    seed: int = 0,
    workers: int = -1,
) -> EntropyResult:
    """Kozachenko-Leonenko differential entropy minus ln(delta_cell).

    H = psi(N) - psi(k) + ln V_d + (d/N) sum_i ln r_{i,k}

    where r_{i,k} is the distance from sample i to its k-th neighbour and V_d
    the unit-ball volume.  The standard error is a bootstrap over the means
    of ``n_blocks`` contiguous blocks of the log-distance terms, which also
    absorbs serial correlation in trajectory samples.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    N, d = X.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if N < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {N}")
    if not np.all(np.isfinite(X)):
        raise ValueError("samples must be finite")
    if np.any(np.std(X, axis=0) == 0):
        raise DegenerateSampleError("samples have zero spread along some axis")

    tree = cKDTree(X)
    log_r = np.empty(N)
    step = 1 << 20
    for lo in range(0, N, step):
        dist, _ = tree.query(X[lo : lo + step], k=k + 1, workers=workers)
        if np.any(dist[:, 1] == 0):
            raise DegenerateSampleError("duplicate samples: zero nearest-neighbour distance")
        log_r[lo : lo + step] = np.log(dist[:, k])

    log_vd = 0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0)
    const = digamma(N) - digamma(k) + log_vd - math.log(delta_cell)
    terms = d * log_r
    value = const + terms.mean()

    n_blocks = max(2, min(n_blocks, N))
    block_means = np.array([b.mean() for b in np.array_split(terms, n_blocks)])
    rng = np.random.default_rng(seed)
    boot = block_means[rng.integers(0, n_blocks, size=(n_boot, n_blocks))].mean(axis=1)
    se = float(boot.std(ddof=1))
    return EntropyResult(float(value), Method.torus_mc, se, {"n_samples": N, "k": k, "dim": d})


# -- symplectic trajectory ----------------------------------------------------


@dataclass
class TrajectoryResult:
    samples: np.ndarray  # (n_out, 2) columns x, px
    times: np.ndarray
    e_plus_drift: float  # max |E+(t) - E+(0)| / E+(0)
    e_minus_drift: float  # max |E-(t) - E-(0)| / E+(0)
    dt: float
    n_steps: int
    method: str

    def report(self) -> dict:
        return {
            "e_plus_drift": self.e_plus_drift,
            "e_minus_drift": self.e_minus_drift,
            "dt": self.dt,
            "n_steps": self.n_steps,
            "n_samples": len(self.samples),
            "method": self.method,
        }


_YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_YOSHIDA_W0 = 1.0 - 2.0 * _YOSHIDA_W1


def _verlet(z, h, params: ModelParams):
    """One velocity-Verlet step on rows ``(x, y, px, py)``."""
    w2, W2, C = params.omega**2, params.Omega**2, params.C
    x, y, px, py = z.T
    px = px - 0.5 * h * (w2 * x + C * y)
    py = py - 0.5 * h * (W2 * y + C * x)
    x = x + h * px
    y = y + h * py
    px = px - 0.5 * h * (w2 * x + C * y)
    py = py - 0.5 * h * (W2 * y + C * x)
    return np.column_stack([x, y, px, py])


def _step(z, h, params, method):
    if method == "verlet":
        return _verlet(z, h, params)
    if method == "yoshida4":
        z = _verlet(z, _YOSHIDA_W1 * h, params)
        z = _verlet(z, _YOSHIDA_W0 * h, params)
        return _verlet(z, _YOSHIDA_W1 * h, params)
    raise ValueError(f"unknown integrator {method!r}")


def integrate_trajectory(
    p0: PhasePoint,
    params: ModelParams,
    dt: float,
    n_steps: int,
    stride: int = 1,
    method: str = "yoshida4",
    block: int = 4096,
) -> TrajectoryResult:
    """Integrate Hamilton's equations with a symplectic splitting scheme.

    ``method="verlet"`` is plain velocity Verlet; ``"yoshida4"`` composes
    three Verlet substeps into a fourth-order symplectic step.  The equations
    are linear, so the one-step map is a fixed 4x4 matrix obtained by
    stepping the unit vectors; iterates are produced blockwise from its
    powers.  ``(x, px)`` is recorded every ``stride`` steps, and E+ and E-
    are monitored at every step.
    """
    nm = normal_modes(params)
    if dt <= 0 or n_steps < 1 or stride < 1:
        raise ValueError("dt, n_steps and stride must be positive")
    if dt * max(nm.omega1, nm.omega2) > 0.1:
        raise DomainError(f"dt * omega_max = {dt * nm.omega2:.3g} exceeds 0.1")

    M = _step(np.eye(4), dt, params, method).T
    B = stride * max(1, -(-block // stride))
    powers = np.empty((B, 4, 4))
    powers[0] = np.eye(4)
    for i in range(1, B):
        powers[i] = M @ powers[i - 1]
    jump = M @ powers[B - 1]

    z = np.asarray(p0.as_array(), dtype=float).reshape(4)
    e_plus0, e_minus0 = conserved_quantities(PhasePoint.from_array(z), params, nm)
    dp = dm = 0.0
    out = []
    n_states = n_steps + 1
    for start in range(0, n_states, B):
        count = min(B, n_states - start)
        Z = powers[:count] @ z
        ep, em = conserved_quantities(PhasePoint.from_array(Z), params, nm)
        dp = max(dp, float(np.max(np.abs(ep - e_plus0))))
        dm = max(dm, float(np.max(np.abs(em - e_minus0))))
        out.append(Z[::stride][:, [0, 2]])
        z = jump @ z
    samples = np.concatenate(out)
    times = dt * stride * np.arange(len(samples))
    return TrajectoryResult(samples, times, dp / e_plus0, dm / e_plus0, dt, n_steps, method)


# -- sample-based entropy routes ----------------------------------------------


def classical_entropy_torus_mc(
    state: StateSpec,
    params: ModelParams,
    n_samples: int = 1_000_000,
    seed: int = 0,
    k: int = 4,
) -> EntropyResult:
    samples = sample_torus(state, params, n_samples, seed)
    res = entropy_knn(samples, params.delta_cell, k=k, seed=seed)
    return EntropyResult(res.value, Method.torus_mc, res.uncertainty, {**res.metadata, "seed": seed})


def classical_entropy_trajectory(
    state: StateSpec,
    params: ModelParams,
    n_steps: int = 1_000_000,
    dt: float | None = None,
    n_keep: int = 200_000,
    k: int = 4,
    angles=(0.3, 1.1),
    method: str = "yoshida4",
    seed: int = 0,
) -> EntropyResult:
    """Entropy of (x, px) visited along one trajectory on the torus.

    Every step is recorded, then ``n_keep`` step indices are drawn at random
    without replacement.  A fixed stride would sample a quasi-periodic
    lattice, which biases nearest-neighbour distances; random thinning keeps
    the time average while breaking the lattice.
    """
    nm = normal_modes(params)
    if dt is None:
        dt = 0.01 / nm.omega2
    p0 = torus_point(state, params, angles[0], angles[1], nm)
    traj = integrate_trajectory(p0, params, dt, n_steps, stride=1, method=method)
    rng = np.random.Generator(np.random.Philox(seed))
    n_keep = min(n_keep, len(traj.samples))
    idx = np.sort(rng.choice(len(traj.samples), size=n_keep, replace=False))
    res = entropy_knn(traj.samples[idx], params.delta_cell, k=k, seed=seed)
    meta = {**res.metadata, **traj.report(), "n_keep": n_keep, "seed": seed}
    return EntropyResult(res.value, Method.trajectory, res.uncertainty, meta)
