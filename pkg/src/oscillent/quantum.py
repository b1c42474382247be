"""Exact eigenstates, grid reduced density matrices and their entropies.

Eigenstates of the coupled Hamiltonian are products of Hermite functions in
the exactly rotated normal coordinates.  The reduced density matrix of the
slow oscillator is assembled on a uniform grid by trapezoidal integration
over y and diagonalised as a Nystrom-discretised integral operator.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .classical import EntropyResult, Method, RegimeWarning
from .core import DomainError, ModelParams, OscillentError, RegimeError, StateSpec, normal_modes

__all__ = [
    "GridError",
    "SpectrumError",
    "Grid",
    "ReducedDensityMatrix",
    "SchmidtSpectrum",
    "TwoStateEntropy",
    "LowExcitationResult",
    "MAX_N",
    "MAX_M",
    "hermite_function",
    "hermite_functions",
    "eigenstate_wavefunction",
    "grid_for_state",
    "reduced_density_kernel",
    "von_neumann_entropy",
    "schmidt_spectrum",
    "fock_offsets",
    "exact_entropy",
    "entropy_convergence",
    "binary_entropy",
    "ground_state_f",
    "ground_state_entropy_smallC",
    "low_excitation_entropy",
]

MAX_N = 200
MAX_M = 2000
MIN_POINTS = 64

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


class GridError(OscillentError):
    """The quadrature grid does not resolve or contain the state."""


class SpectrumError(OscillentError):
    """A density-matrix spectrum with clearly negative eigenvalues."""


# -- Hermite functions ---------------------------------------------------------


def hermite_function(n: int, xi):
    """Normalised oscillator eigenfunction h_n(xi), int h_n^2 dxi = 1.

    Uses h_{k+1} = sqrt(2/(k+1)) xi h_k - sqrt(k/(k+1)) h_{k-1} on the
    polynomial part, rescaling by a tracked exponent whenever values grow
    past 1e150, and applies exp(-xi^2/2) once at the end.  Safe well beyond
    n = 10^4.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    xi = np.asarray(xi, dtype=float)
    h_prev = np.full(xi.shape, np.pi**-0.25)
    log_scale = np.zeros(xi.shape)
    if n == 0:
        return h_prev * np.exp(-0.5 * xi * xi)
    h = math.sqrt(2.0) * xi * h_prev
    for k in range(1, n):
        h_prev, h = h, math.sqrt(2.0 / (k + 1)) * xi * h - math.sqrt(k / (k + 1)) * h_prev
        big = np.abs(h) > _RESCALE
        if big.any():
            h = np.where(big, h / _RESCALE, h)
            h_prev = np.where(big, h_prev / _RESCALE, h_prev)
            log_scale += big * _LOG_RESCALE
    return h * np.exp(log_scale - 0.5 * xi * xi)


def hermite_functions(n_max: int, xi):
    """All h_0 .. h_{n_max} at ``xi``, shape ``(n_max + 1,) + xi.shape``."""
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    h_prev = np.full(xi.shape, np.pi**-0.25)
    log_scale = np.zeros(xi.shape)
    gauss = -0.5 * xi * xi
    out[0] = h_prev * np.exp(gauss)
    if n_max == 0:
        return out
    h = math.sqrt(2.0) * xi * h_prev
    out[1] = h * np.exp(gauss)
    for k in range(1, n_max):
        h_prev, h = h, math.sqrt(2.0 / (k + 1)) * xi * h - math.sqrt(k / (k + 1)) * h_prev
        big = np.abs(h) > _RESCALE
        if big.any():
            h = np.where(big, h / _RESCALE, h)
            h_prev = np.where(big, h_prev / _RESCALE, h_prev)
            log_scale += big * _LOG_RESCALE
        out[k + 1] = h * np.exp(log_scale + gauss)
    return out


def _check_quanta(n: int, m: int):
    if n < 0 or m < 0:
        raise ValueError("occupation numbers must be nonnegative")
    if n > MAX_N or m > MAX_M:
        raise DomainError(f"exact engine supports n <= {MAX_N}, m <= {MAX_M}; got n={n}, m={m}")


def eigenstate_wavefunction(state: StateSpec, params: ModelParams):
    """psi_{n,m}(x, y) = h_n(sqrt(omega1/hbar) x1) h_m(sqrt(omega2/hbar) x2) (omega1 omega2 / hbar^2)^(1/4)."""
    n, m = state.quanta(params)
    _check_quanta(n, m)
    nm = normal_modes(params)
    s1 = math.sqrt(nm.omega1 / params.hbar)
    s2 = math.sqrt(nm.omega2 / params.hbar)
    norm = (nm.omega1 * nm.omega2 / params.hbar**2) ** 0.25

    def psi(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        x1 = nm.alpha * x - nm.beta * y
        x2 = nm.beta * x + nm.alpha * y
        return norm * hermite_function(n, s1 * x1) * hermite_function(m, s2 * x2)

    return psi


# -- grids -----------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    L: float

    @property
    def N(self) -> int:
        return len(self.nodes)

    @classmethod
    def uniform(cls, L: float, N: int) -> "Grid":
        """Trapezoid rule on [-L, L]."""
        if N < 2:
            raise ValueError("need at least two grid points")
        nodes = np.linspace(-L, L, N)
        h = nodes[1] - nodes[0]
        w = np.full(N, h)
        w[0] = w[-1] = 0.5 * h
        return cls(nodes, w, float(L))

    @classmethod
    def arcsine(cls, L: float, N: int) -> "Grid":
        """Nodes L sin(u) at midpoints of u in (-pi/2, pi/2); exact for f(x)/sqrt(L^2 - x^2)."""
        u = -0.5 * np.pi + (np.arange(N) + 0.5) * np.pi / N
        return cls(L * np.sin(u), L * np.cos(u) * np.pi / N, float(L))

    def spec(self) -> dict:
        return {"L": self.L, "N": self.N, "first": float(self.nodes[0]), "last": float(self.nodes[-1])}


def _extent(E: float, w: float, hbar: float, margin: float) -> float:
    return math.sqrt(2.0 * E) / w * (1.0 + margin) + 5.0 * math.sqrt(hbar / w)


def grid_for_state(
    state: StateSpec,
    params: ModelParams,
    points_per_wavelength: float = 8.0,
    margin: float = 0.25,
    n_points: int | None = None,
):
    """Uniform x and y grids covering both normal modes' turning points.

    Each normal coordinate needs |x_i| <= x_turn (1 + margin) + 5 oscillator
    lengths; the extents are mapped back through the rotation.  Spacing gives
    ``points_per_wavelength`` nodes per 2 pi hbar / p_max along each axis.
    ``n_points`` overrides the x node count.  Each axis gets at least
    ``MIN_POINTS`` nodes so that near-ground states, whose tails dominate, are
    still resolved.
    """
    n, m = state.quanta(params)
    nm = normal_modes(params)
    hbar = params.hbar
    a, b = nm.alpha, abs(nm.beta)
    E1 = hbar * nm.omega1 * (n + 0.5)
    E2 = hbar * nm.omega2 * (m + 0.5)
    L1 = _extent(E1, nm.omega1, hbar, margin)
    L2 = _extent(E2, nm.omega2, hbar, margin)
    Lx, Ly = a * L1 + b * L2, b * L1 + a * L2
    q1, q2 = math.sqrt(2.0 * E1), math.sqrt(2.0 * E2)
    px_max, py_max = a * q1 + b * q2, b * q1 + a * q2

    def count(L, pmax):
        spacing = 2.0 * math.pi * hbar / (pmax * points_per_wavelength)
        return max(int(math.ceil(2.0 * L / spacing)) + 1, MIN_POINTS)

    Nx = n_points if n_points is not None else count(Lx, px_max)
    return Grid.uniform(Lx, Nx), Grid.uniform(Ly, count(Ly, py_max))


# -- reduced density matrix ------------------------------------------------------


@dataclass(frozen=True)
class ReducedDensityMatrix:
    kernel: np.ndarray
    grid: Grid
    state: StateSpec
    params: ModelParams | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def trace(self) -> float:
        return float(np.dot(self.grid.weights, np.diag(self.kernel)))

    def symmetrized(self) -> np.ndarray:
        """W^(1/2) rho W^(1/2): same spectrum as the integral operator."""
        s = np.sqrt(self.grid.weights)
        return s[:, None] * self.kernel * s[None, :]

    def eigh(self):
        """Eigenvalues (descending) and eigenfunctions sampled on the grid."""
        vals, vecs = linalg.eigh(self.symmetrized())
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        funcs = vecs / np.sqrt(self.grid.weights)[:, None]
        return vals, funcs

    def spectrum(self) -> np.ndarray:
        return np.sort(linalg.eigvalsh(self.symmetrized()))[::-1]

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.kernel - self.kernel.T)))


def _assemble_psi(state, params, gx: Grid, gy: Grid, rows: int = 256):
    n, m = state.quanta(params)
    _check_quanta(n, m)
    nm = normal_modes(params)
    s1 = math.sqrt(nm.omega1 / params.hbar)
    s2 = math.sqrt(nm.omega2 / params.hbar)
    norm = (nm.omega1 * nm.omega2 / params.hbar**2) ** 0.25
    psi = np.empty((gx.N, gy.N))
    y = gy.nodes[None, :]
    for lo in range(0, gx.N, rows):
        x = gx.nodes[lo : lo + rows, None]
        psi[lo : lo + rows] = norm * hermite_function(n, s1 * (nm.alpha * x - nm.beta * y)) * hermite_function(
            m, s2 * (nm.beta * x + nm.alpha * y)
        )
    return psi


def reduced_density_kernel(
    state: StateSpec,
    params: ModelParams,
    grid: Grid | None = None,
    y_grid: Grid | None = None,
    points_per_wavelength: float = 8.0,
    margin: float = 0.25,
    trace_tol: float = 1e-4,
    cache=None,
) -> ReducedDensityMatrix:
    """rho(x, x') = int dy psi(x, y) psi(x', y) on a grid.

    Raises :class:`GridError` when the quadrature trace misses 1 by more than
    ``trace_tol``.  ``cache`` is an optional :class:`oscillent.storage.KernelCache`.
    """
    gx_default, gy_default = grid_for_state(state, params, points_per_wavelength, margin)
    gx = grid if grid is not None else gx_default
    gy = y_grid if y_grid is not None else gy_default

    key = None
    if cache is not None:
        key = cache.key(params=params.to_dict(), state=state.to_dict(), quanta=state.quanta(params),
                        x_grid=gx.spec(), y_grid=gy.spec())
        hit = cache.load(key)
        if hit is not None:
            kernel, meta = hit
            return ReducedDensityMatrix(kernel, gx, state, params, meta)

    psi = _assemble_psi(state, params, gx, gy)
    kernel = (psi * gy.weights[None, :]) @ psi.T
    kernel = 0.5 * (kernel + kernel.T)
    rdm = ReducedDensityMatrix(kernel, gx, state, params, {"y_grid": gy.spec()})
    tr = rdm.trace
    if abs(tr - 1.0) > trace_tol:
        raise GridError(
            f"grid trace {tr:.8f} deviates from 1 by more than {trace_tol:g}; "
            f"enlarge the margin (now {margin}) or the points per wavelength (now {points_per_wavelength})"
        )
    if cache is not None:
        cache.store(key, kernel, rdm.metadata)
    return rdm


@dataclass(frozen=True)
class SchmidtSpectrum:
    eigenvalues: np.ndarray
    effective_rank: float
    flatness: float  # p_max / p_min over the support
    flatness_median: float  # p_max / median over the support
    support_size: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eigenvalues"] = self.eigenvalues.tolist()
        return d


def _clean_spectrum(vals, neg_tol: float = 1e-8):
    vals = np.sort(np.asarray(vals, float))[::-1]
    if vals.size and vals[-1] < -neg_tol:
        raise SpectrumError(f"eigenvalue {vals[-1]:.3e} below -{neg_tol:g}")
    return np.clip(vals, 0.0, None)


def _entropy_of(p, cutoff: float = 1e-14) -> float:
    p = p[p > cutoff]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rdm, cutoff: float = 1e-14) -> float:
    """-sum p ln p over the kernel spectrum; accepts a ReducedDensityMatrix or eigenvalues."""
    vals = rdm.spectrum() if isinstance(rdm, ReducedDensityMatrix) else np.asarray(rdm, float)
    return _entropy_of(_clean_spectrum(vals), cutoff)


def schmidt_spectrum(rdm, support_threshold: float = 1e-3) -> SchmidtSpectrum:
    vals = rdm.spectrum() if isinstance(rdm, ReducedDensityMatrix) else np.asarray(rdm, float)
    p = _clean_spectrum(vals)
    S = _entropy_of(p)
    support = p[p >= support_threshold]
    return SchmidtSpectrum(
        eigenvalues=p,
        effective_rank=math.exp(S),
        flatness=float(support[0] / support[-1]) if support.size else math.inf,
        flatness_median=float(support[0] / np.median(support)) if support.size else math.inf,
        support_size=int(support.size),
    )


def fock_offsets(rdm: ReducedDensityMatrix, n_modes: int | None = None, extra_levels: int = 40, min_weight: float = 1e-6):
    """Occupation-number offsets of the Schmidt vectors.

    Each eigenfunction is expanded in eigenstates of the bare slow oscillator
    (frequency omega); returns ``(eigenvalues, rms_offsets, weights)`` where
    the offset is sqrt(<(k - n)^2>) over that expansion.
    """
    params = rdm.params
    n, _ = rdm.state.quanta(params)
    vals, funcs = rdm.eigh()
    keep = vals > min_weight
    if n_modes is not None:
        keep &= np.arange(len(vals)) < n_modes
    vals, funcs = vals[keep], funcs[:, keep]
    k_max = n + extra_levels
    s = math.sqrt(params.omega / params.hbar)
    basis = hermite_functions(k_max, s * rdm.grid.nodes) * math.sqrt(s)
    coeff = (basis * rdm.grid.weights[None, :]) @ funcs
    w = coeff**2
    k = np.arange(k_max + 1)[:, None]
    offsets = np.sqrt(np.sum(w * (k - n) ** 2, axis=0) / np.sum(w, axis=0))
    return vals, offsets, w


def exact_entropy(state: StateSpec, params: ModelParams, cache=None, **grid_kw) -> EntropyResult:
    rdm = reduced_density_kernel(state, params, cache=cache, **grid_kw)
    spec = schmidt_spectrum(rdm)
    S = _entropy_of(spec.eigenvalues)
    n, m = state.quanta(params)
    return EntropyResult(
        S,
        Method.exact_kernel,
        None,
        {"n": n, "m": m, "grid_points": rdm.grid.N, "trace": rdm.trace, "effective_rank": spec.effective_rank},
    )


def entropy_convergence(
    state: StateSpec,
    params: ModelParams,
    points_per_wavelength: float = 8.0,
    tol: float = 1e-3,
    max_doublings: int = 3,
    margin: float = 0.25,
):
    """Double the grid density until |S(N) - S(2N)| <= tol.

    Returns ``(entropy, accepted_points_per_wavelength, history)``; raises
    :class:`GridError` when ``max_doublings`` is exhausted.
    """
    history = []
    ppw = points_per_wavelength
    S_prev = von_neumann_entropy(reduced_density_kernel(state, params, points_per_wavelength=ppw, margin=margin))
    history.append((ppw, S_prev))
    for _ in range(max_doublings):
        ppw *= 2
        S = von_neumann_entropy(reduced_density_kernel(state, params, points_per_wavelength=ppw, margin=margin))
        history.append((ppw, S))
        if abs(S - S_prev) <= tol:
            return S_prev, ppw / 2, history
        S_prev = S
    raise GridError(f"entropy not converged to {tol:g} after {max_doublings} doublings: {history}")


# -- two-state closed forms ------------------------------------------------------


def binary_entropy(f):
    """-(1 - f) ln(1 - f) - f ln f, zero at f = 0."""
    f = np.asarray(f, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(1.0 - f) * np.log1p(-f) - np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TwoStateEntropy:
    entropy: float
    f: float
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return asdict(self)


def ground_state_f(params: ModelParams) -> float:
    return params.C**2 / (4.0 * params.omega * params.Omega**3)


def ground_state_entropy_smallC(params: ModelParams, f_max: float = 0.1) -> TwoStateEntropy:
    """Ground-state entanglement entropy from the two-level mixture with f = C^2 / (4 omega Omega^3)."""
    f = ground_state_f(params)
    notes = ()
    if f > f_max:
        msg = f"f = {f:.3g} > {f_max}: outside the small-coupling regime"
        warnings.warn(msg, RegimeWarning, stacklevel=2)
        notes = (msg,)
    return TwoStateEntropy(binary_entropy(f), f, notes)


@dataclass(frozen=True)
class LowExcitationResult:
    entropy: float
    A: float
    B: float
    zeta_sq: float
    F: float
    F_omega4: float  # C^2 E1 E2 / ((hbar omega)^2 Omega^4)
    F_omega2: float  # C^2 E1 E2 / (hbar^2 omega^2 Omega^2)

    def to_dict(self) -> dict:
        return asdict(self)


def low_excitation_entropy(state: StateSpec, params: ModelParams) -> LowExcitationResult:
    """Two-state reduction for excited states whose interaction energy is quantum-small.

    A and B are the order-C^2 damping and admixture coefficients, zeta^2 the
    normalisation of the odd admixed state; F = B / zeta^2 is its weight.
    """
    hbar, w, W, C = params.hbar, params.omega, params.Omega, params.C
    E1, E2 = state.E1, state.E2
    if E1 <= 0 or E2 <= 0:
        raise DomainError("low-excitation reduction needs positive mode energies")
    g = (C / (hbar * W**2)) ** 2 * E2 / math.sqrt(2.0)
    A = 0.5 * g
    B = g
    zeta_sq = w**2 / (math.sqrt(2.0) * E1)
    F = B / zeta_sq
    if F >= 0.5:
        raise RegimeError(f"F = {F:.3g} >= 0.5: admixture too large for the two-state reduction")
    return LowExcitationResult(
        entropy=binary_entropy(F),
        A=A,
        B=B,
        zeta_sq=zeta_sq,
        F=F,
        F_omega4=C**2 * E1 * E2 / ((hbar * w) ** 2 * W**4),
        F_omega2=C**2 * E1 * E2 / (hbar**2 * w**2 * W**2),
    )
