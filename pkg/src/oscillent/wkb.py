"""Semiclassical (WKB) wavefunctions, the arcsine Schmidt spectrum and its entropy."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .classical import EntropyResult, Method, RegimeWarning, classical_entropy_closed_form
from .core import DomainError, ModelParams, StateSpec
from .quadrature import arcsine_mean, chebyshev_gauss
from .quantum import (
    Grid,
    ReducedDensityMatrix,
    fock_offsets,
    reduced_density_kernel,
    schmidt_spectrum,
    von_neumann_entropy,
)

__all__ = [
    "WkbState",
    "LambdaSpectrum",
    "wkb_action",
    "wkb_wavefunction",
    "lambda_spectrum",
    "wkb_entropy",
    "schmidt_modes",
    "wkb_kernel_factor",
    "wkb_reduced_density",
    "wkb_kernel_entropy",
    "ShapeComparison",
    "schmidt_shape_comparison",
    "EPSILON",
    "INTERIOR",
]

EPSILON = 1e-3  # excluded relative neighbourhood of each turning point
INTERIOR = 0.9  # |x| <= INTERIOR * x_turn for WKB-vs-exact comparisons


@dataclass(frozen=True)
class WkbState:
    """Level ``n`` of a single oscillator.

    With ``zero_point=True`` the energy is (n + 1/2) hbar omega, which puts the
    turning point and the phase at the exact eigenstate's; ``False`` gives
    the bare n hbar omega.
    """

    n: float
    omega: float
    hbar: float = 1.0
    zero_point: bool = True

    def __post_init__(self):
        if self.omega <= 0 or self.hbar <= 0:
            raise DomainError("omega and hbar must be positive")
        if self.E <= 0:
            raise DomainError("WKB state needs E > 0")

    @property
    def E(self) -> float:
        return (self.n + (0.5 if self.zero_point else 0.0)) * self.hbar * self.omega

    @property
    def T(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def parity(self) -> str:
        return "odd" if int(round(self.n)) % 2 else "even"

    @property
    def x_turn(self) -> float:
        return math.sqrt(2.0 * self.E) / self.omega

    def momentum(self, x):
        return np.sqrt(np.maximum(2.0 * self.E - (self.omega * np.asarray(x, float)) ** 2, 0.0))

    def action(self, x, expanded: bool = False):
        return _action(self.E, x, self.omega, expanded)


def _action(E, x, omega, expanded=False, clip=False):
    x = np.asarray(x, dtype=float)
    E = np.asarray(E, dtype=float)
    if expanded:
        return x * np.sqrt(2.0 * E)
    s = x * omega / np.sqrt(2.0 * E)
    if clip:
        s = np.clip(s, -1.0, 1.0)
    elif np.any(np.abs(s) > 1.0):
        raise DomainError("x beyond the classical turning point")
    theta = np.arcsin(s)
    return (E / omega) * (theta + 0.5 * np.sin(2.0 * theta))


def wkb_action(n: float, x, omega: float, hbar: float = 1.0, expanded: bool = False, zero_point: bool = False):
    """S(x) = int_0^x p dz = (E/omega)(theta + sin(2 theta)/2), sin(theta) = omega x / sqrt(2E).

    ``expanded=True`` returns the small-x form x sqrt(2E).
    """
    E = (n + (0.5 if zero_point else 0.0)) * hbar * omega
    return _action(E, x, omega, expanded)


def wkb_wavefunction(ws: WkbState, eps: float = EPSILON):
    """sqrt(4 / (T p(x))) times sin(S/hbar) for odd n, cos(S/hbar) for even n."""
    trig = np.sin if ws.parity == "odd" else np.cos
    limit = ws.x_turn * (1.0 - eps)

    def psi(x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > limit):
            raise DomainError("WKB wavefunction evaluated within eps of a turning point")
        return np.sqrt(4.0 / (ws.T * ws.momentum(x))) * trig(ws.action(x) / ws.hbar)

    return psi


# -- Schmidt spectrum ---------------------------------------------------------


@dataclass(frozen=True)
class LambdaSpectrum:
    dn_max: float
    degeneracy: int = 2

    def density(self, dn):
        """lambda(dn) = 1 / (pi dn_max sqrt(1 - (dn/dn_max)^2)) on |dn| < dn_max."""
        u = np.asarray(dn, dtype=float) / self.dn_max
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = 1.0 / (math.pi * self.dn_max * np.sqrt(1.0 - u * u))
        return np.where(np.abs(u) < 1.0, lam, 0.0)

    def normalization(self, n_nodes: int = 64) -> float:
        """2 int_0^dn_max lambda; Chebyshev-Gauss is exact here."""
        y, w = chebyshev_gauss(n_nodes)
        return float(np.sum(w) / math.pi)

    def bin_masses(self, edges):
        """Probability of |dn| in each [edges[i], edges[i+1]), both branches included."""
        u = np.clip(np.asarray(edges, float) / self.dn_max, 0.0, 1.0)
        cdf = 2.0 / math.pi * np.arcsin(u)
        return np.diff(cdf)

    def to_csv(self, path, n_points: int = 200):
        dn = self.dn_max * np.sin(0.5 * np.pi * (np.arange(n_points) + 0.5) / n_points)
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["delta_n", "lambda"])
            for a, b in zip(dn, self.density(dn)):
                out.writerow([repr(float(a)), repr(float(b))])


def lambda_spectrum(state: StateSpec, params: ModelParams) -> LambdaSpectrum:
    dn_max = 2.0 * params.C * math.sqrt(state.E1 * state.E2) / (params.hbar * params.omega * params.Omega**2)
    if dn_max < 1.0:
        warnings.warn(
            f"dn_max = {dn_max:.3g} < 1: fewer than one Schmidt mode, semiclassical spectrum meaningless",
            RegimeWarning,
            stacklevel=2,
        )
    return LambdaSpectrum(dn_max)


def wkb_entropy(state: StateSpec, params: ModelParams, method: str = "closed_form", n_nodes: int = 2048) -> EntropyResult:
    """Entropy of the arcsine Schmidt spectrum.

    The closed form is the classical one evaluated at Delta = h/2.  The
    quadrature route integrates -2 int lambda ln lambda over the arcsine
    measure with Chebyshev-Gauss nodes.
    """
    spec = lambda_spectrum(state, params)
    if method == "closed_form":
        res = classical_entropy_closed_form(state, params.replace(delta_cell=math.pi * params.hbar))
        return EntropyResult(res.value, Method.wkb_closed_form, None, {"dn_max": spec.dn_max})
    if method == "quadrature":
        d = spec.dn_max
        val, err = arcsine_mean(lambda u: -np.log(spec.density(d * u)), n_nodes)
        return EntropyResult(float(val), Method.wkb_quadrature, float(err), {"dn_max": d, "n_nodes": n_nodes})
    raise ValueError(f"unknown method {method!r}")


# -- Schmidt modes and the assembled kernel ----------------------------------------


def _modes(x, n, dn, omega, hbar, zero_point, odd):
    """phi^1, phi^2 at offsets ``dn`` (shape K) on nodes ``x`` (shape N) -> (N, K) each."""
    base = WkbState(n, omega, hbar, zero_point)
    amp = 1.0 / np.sqrt(base.T * np.maximum(base.momentum(x), 1e-300))
    x = np.asarray(x, float)[:, None]
    dn = np.atleast_1d(np.asarray(dn, float))[None, :]
    shift = 0.5 if zero_point else 0.0
    S_up = _action((n + dn + shift) * hbar * omega, x, omega, clip=True) / hbar
    S_dn = _action((n - dn + shift) * hbar * omega, x, omega, clip=True) / hbar
    if odd:
        phi1 = np.sin(S_up) + np.sin(S_dn)
        phi2 = np.cos(S_up) - np.cos(S_dn)
    else:
        phi1 = np.cos(S_up) + np.cos(S_dn)
        phi2 = np.sin(S_up) - np.sin(S_dn)
    return amp[:, None] * phi1, amp[:, None] * phi2


def schmidt_modes(dn: float, branch: int, ws: WkbState):
    """phi^branch_dn(x): pair of WKB waves at n + dn and n - dn, parity set by n."""
    if not 0 < dn < ws.n:
        raise DomainError("need 0 < dn < n")
    if branch not in (1, 2):
        raise ValueError("branch is 1 or 2")

    def phi(x):
        x = np.asarray(x, dtype=float)
        out = _modes(x.ravel(), ws.n, dn, ws.omega, ws.hbar, ws.zero_point, ws.parity == "odd")[branch - 1]
        return out[:, 0].reshape(x.shape)

    return phi


def wkb_kernel_factor(state: StateSpec, params: ModelParams, x, n_dn: int = 256, zero_point: bool = True):
    """Matrix F with rho_WKB(x, x') = (F F^T)(x, x').

    dn is discretised with Chebyshev-Gauss nodes in dn/dn_max.  The y
    integral runs over both signs of p_y, so the spectral weight is
    lambda(dn) on the whole band (-dn_max, dn_max); folded onto dn > 0 each
    of the ``n_dn`` positive nodes carries 1/n_dn for both branches.
    """
    spec = lambda_spectrum(state, params)
    n, _ = state.quanta(params)
    y, _ = chebyshev_gauss(2 * n_dn)
    dn = spec.dn_max * y[y > 0]
    p1, p2 = _modes(x, n, dn, params.omega, params.hbar, zero_point, n % 2 == 1)
    return np.hstack([p1, p2]) / math.sqrt(len(dn))


def wkb_reduced_density(
    state: StateSpec,
    params: ModelParams,
    grid: Grid | None = None,
    n_points: int = 512,
    n_dn: int = 256,
    zero_point: bool = True,
    normalize: bool = True,
) -> ReducedDensityMatrix:
    """rho = int d(dn) lambda(dn) sum_i phi^i(x) phi^i(x') on a grid.

    The default grid puts arcsine nodes on the slow oscillator's classically
    allowed interval, so the 1/p(x) prefactor is integrated exactly.  Near
    the turning points the WKB envelope does not average to its classical
    value, so the raw quadrature trace exceeds 1 by O(n^-1/2); with
    ``normalize`` the kernel is divided by it.  The raw trace is kept in
    ``metadata["raw_trace"]``.
    """
    n, _ = state.quanta(params)
    ws = WkbState(n, params.omega, params.hbar, zero_point)
    if grid is None:
        grid = Grid.arcsine(ws.x_turn, n_points)
    F = wkb_kernel_factor(state, params, grid.nodes, n_dn, zero_point)
    kernel = F @ F.T
    raw = float(np.dot(grid.weights, np.diag(kernel)))
    if normalize:
        kernel = kernel / raw
    meta = {"n_dn": n_dn, "zero_point": zero_point, "raw_trace": raw, "normalized": normalize}
    return ReducedDensityMatrix(kernel, grid, state, params, meta)


def wkb_kernel_entropy(state: StateSpec, params: ModelParams, **kw) -> EntropyResult:
    rdm = wkb_reduced_density(state, params, **kw)
    spec = schmidt_spectrum(rdm)
    return EntropyResult(
        von_neumann_entropy(spec.eigenvalues),
        Method.wkb_kernel,
        None,
        {"trace": rdm.trace, "raw_trace": rdm.metadata["raw_trace"], "grid_points": rdm.grid.N, "effective_rank": spec.effective_rank},
    )



@dataclass(frozen=True)
class ShapeComparison:
    """Exact Schmidt weights binned by |dn| against the arcsine prediction."""

    dn_max: float
    edges: np.ndarray
    exact_mass: np.ndarray
    arcsine_mass: np.ndarray
    tv_distance: float
    effective_rank: float
    eigenvalues: np.ndarray
    offsets: np.ndarray

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


def schmidt_shape_comparison(state: StateSpec, params: ModelParams, rdm: ReducedDensityMatrix | None = None,
                             min_weight: float = 1e-6) -> ShapeComparison:
    """Bin exact eigenvalues by the occupation offset of their Schmidt vectors.

    Each Schmidt vector's offset is the rms |k - n| of its expansion in bare
    slow-oscillator levels; eigenvalues are summed into integer bins
    [0, 1/2), [1/2, 3/2), ... and the last bin absorbs everything beyond
    dn_max.  The arcsine masses use the same edges.  Returns the total
    variation distance 1/2 sum |P - Q| and exp(S) as the occupied-mode count.
    """
    if rdm is None:
        rdm = reduced_density_kernel(state, params)
    spec = lambda_spectrum(state, params)
    vals, offsets, _ = fock_offsets(rdm, min_weight=min_weight)
    top = int(math.floor(spec.dn_max + 0.5))
    edges = np.concatenate([[0.0], np.arange(top) + 0.5, [spec.dn_max]])
    if edges[-1] <= edges[-2]:
        edges = edges[:-1]
    nbins = len(edges) - 1
    idx = np.clip(np.searchsorted(edges, offsets, side="right") - 1, 0, nbins - 1)
    P = np.bincount(idx, weights=vals, minlength=nbins)
    P = P / P.sum()
    Q = spec.bin_masses(edges)
    Q = Q / Q.sum()
    full = schmidt_spectrum(rdm)
    return ShapeComparison(
        dn_max=spec.dn_max,
        edges=edges,
        exact_mass=P,
        arcsine_mass=Q,
        tv_distance=float(0.5 * np.abs(P - Q).sum()),
        effective_rank=full.effective_rank,
        eigenvalues=vals,
        offsets=offsets,
    )
