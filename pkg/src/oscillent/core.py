"""Model parameters, exact normal modes and conserved quantities.

Hamiltonian (unit masses)::

    H = 1/2 [px^2 + py^2 + omega^2 x^2 + Omega^2 y^2 + 2 C x y]

Everything here is exact; small-coupling expansions live in the tests only.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "OscillentError",
    "DomainError",
    "RegimeError",
    "ModelParams",
    "NormalModes",
    "StateSpec",
    "PhasePoint",
    "RegimeReport",
    "normal_modes",
    "to_normal_coords",
    "from_normal_coords",
    "hamiltonian",
    "conserved_quantities",
    "eom_rhs",
    "validate_regime",
    "read_config",
    "write_config",
]


class OscillentError(Exception):
    """Base class for errors raised by this package."""


class DomainError(OscillentError, ValueError):
    """Argument outside the region where an expression is defined."""


class RegimeError(OscillentError):
    """Parameters outside the regime an approximation requires."""


@dataclass(frozen=True)
class ModelParams:
    omega: float
    Omega: float
    C: float
    hbar: float = 1.0
    delta_cell: float | None = None

    def __post_init__(self):
        for name in ("omega", "Omega", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.delta_cell is None:
            # h/2
            object.__setattr__(self, "delta_cell", math.pi * self.hbar)
        if not self.delta_cell > 0:
            raise ValueError(f"delta_cell must be positive, got {self.delta_cell!r}")
        if self.C**2 >= (self.omega * self.Omega) ** 2:
            raise DomainError(
                f"C^2 = {self.C**2:g} >= omega^2 Omega^2 = {(self.omega * self.Omega) ** 2:g}: "
                "Hamiltonian is not positive definite"
            )

    def replace(self, **changes) -> "ModelParams":
        d = asdict(self)
        if "hbar" in changes and "delta_cell" not in changes:
            # keep the h/2 convention tied to hbar
            if math.isclose(self.delta_cell, math.pi * self.hbar):
                d["delta_cell"] = None
        d.update(changes)
        return ModelParams(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NormalModes:
    alpha: float
    beta: float
    omega1: float
    omega2: float
    # sqrt((Omega^2 - omega^2)^2 + 4 C^2); not the phase cell
    delta_freq: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StateSpec:
    """Energies of the slow (1) and fast (2) normal modes.

    ``n`` and ``m`` are the occupation numbers when the state came from
    quanta; energy-specified states leave them ``None``.
    """

    E1: float
    E2: float
    n: int | None = None
    m: int | None = None

    def __post_init__(self):
        if self.E1 < 0 or self.E2 < 0:
            raise ValueError("mode energies must be nonnegative")
        for q in (self.n, self.m):
            if q is not None and (int(q) != q or q < 0):
                raise ValueError(f"occupation numbers must be nonnegative integers, got {q!r}")

    @classmethod
    def from_quanta(cls, n: int, m: int, params: ModelParams, zero_point: bool = False) -> "StateSpec":
        nm = normal_modes(params)
        shift = 0.5 if zero_point else 0.0
        return cls(
            E1=(n + shift) * params.hbar * nm.omega1,
            E2=(m + shift) * params.hbar * nm.omega2,
            n=int(n),
            m=int(m),
        )

    @property
    def E_plus(self) -> float:
        return self.E1 + self.E2

    @property
    def E_minus(self) -> float:
        return self.E2 - self.E1

    def quanta(self, params: ModelParams) -> tuple[int, int]:
        """Occupation numbers, rounding E/(hbar omega_i) when not given."""
        if self.n is not None and self.m is not None:
            return self.n, self.m
        nm = normal_modes(params)
        n = self.n if self.n is not None else int(round(self.E1 / (params.hbar * nm.omega1)))
        m = self.m if self.m is not None else int(round(self.E2 / (params.hbar * nm.omega2)))
        return n, m

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PhasePoint:
    """A point (or an array of points) in the four-dimensional phase space."""

    x: float | np.ndarray
    y: float | np.ndarray
    px: float | np.ndarray
    py: float | np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.x, self.y, self.px, self.py), axis=-1).astype(float)

    @classmethod
    def from_array(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        return cls(z[..., 0], z[..., 1], z[..., 2], z[..., 3])


@dataclass(frozen=True)
class RegimeReport:
    weak_coupling_ok: bool
    classicality_ok: bool
    hierarchy_ok: bool
    entropy_positive: bool
    ratios: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return self.weak_coupling_ok and self.classicality_ok and self.hierarchy_ok and self.entropy_positive

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_ok"] = self.all_ok
        return d


def normal_modes(params: ModelParams) -> NormalModes:
    w2, W2, C = params.omega**2, params.Omega**2, params.C
    split = W2 - w2
    delta = math.hypot(split, 2.0 * C)
    if delta == 0.0:
        # omega == Omega and C == 0: any rotation diagonalises, pick the identity
        return NormalModes(1.0, 0.0, params.omega, params.Omega, 0.0)
    alpha_sq = 0.5 * (1.0 + split / delta)
    beta_sq = 0.5 * (1.0 - split / delta)
    alpha = math.sqrt(alpha_sq)
    # beta takes the sign of C; at C = 0 it is 0 or, when omega > Omega, +1 (modes swap)
    beta = math.copysign(math.sqrt(beta_sq), C) if C != 0 else math.sqrt(beta_sq)
    omega1_sq = 0.5 * (w2 + W2 - delta)
    omega2_sq = 0.5 * (w2 + W2 + delta)
    if omega1_sq <= 0:
        raise DomainError("imaginary normal-mode frequency")
    return NormalModes(alpha, beta, math.sqrt(omega1_sq), math.sqrt(omega2_sq), delta)


def to_normal_coords(p: PhasePoint, nm: NormalModes):
    """Return ``(x1, p1, x2, p2)`` with x1 = a x - b y, x2 = b x + a y."""
    a, b = nm.alpha, nm.beta
    x1 = a * p.x - b * p.y
    x2 = b * p.x + a * p.y
    p1 = a * p.px - b * p.py
    p2 = b * p.px + a * p.py
    return x1, p1, x2, p2


def from_normal_coords(x1, p1, x2, p2, nm: NormalModes) -> PhasePoint:
    a, b = nm.alpha, nm.beta
    return PhasePoint(
        x=a * x1 + b * x2,
        y=-b * x1 + a * x2,
        px=a * p1 + b * p2,
        py=-b * p1 + a * p2,
    )


def hamiltonian(p: PhasePoint, params: ModelParams):
    w2, W2, C = params.omega**2, params.Omega**2, params.C
    return 0.5 * (p.px**2 + p.py**2 + w2 * p.x**2 + W2 * p.y**2 + 2.0 * C * p.x * p.y)


def conserved_quantities(p: PhasePoint, params: ModelParams, nm: NormalModes | None = None):
    """Return ``(E_plus, E_minus)``; E_minus is the exact quadratic form for E2 - E1."""
    if nm is None:
        nm = normal_modes(params)
    a, b = nm.alpha, nm.beta
    w1s, w2s = nm.omega1**2, nm.omega2**2
    e_plus = hamiltonian(p, params)
    e_minus = (
        2.0 * a * b * p.px * p.py
        + 0.5 * ((b * b * w2s - a * a * w1s) * p.x**2 + (a * a * w2s - b * b * w1s) * p.y**2)
        + a * b * (w2s + w1s) * p.x * p.y
        + 0.5 * (a * a - b * b) * (p.py**2 - p.px**2)
    )
    return e_plus, e_minus


def eom_rhs(p: PhasePoint, params: ModelParams) -> PhasePoint:
    w2, W2, C = params.omega**2, params.Omega**2, params.C
    return PhasePoint(
        x=p.px,
        y=p.py,
        px=-w2 * p.x - C * p.y,
        py=-W2 * p.y - C * p.x,
    )


def validate_regime(
    params: ModelParams,
    state: StateSpec,
    much_less: float = 0.2,
    much_greater: float = 5.0,
) -> RegimeReport:
    """Report which approximations hold for ``params`` and ``state``.

    A ``<<`` condition holds when its ratio is at most ``much_less``; a ``>>``
    condition when its ratio is at least ``much_greater``.  Never raises.
    """
    hbar, w, W, C = params.hbar, params.omega, params.Omega, abs(params.C)
    E1, E2 = state.E1, state.E2
    hW = hbar * W
    interaction = C * math.sqrt(E1 * E2) / (w * W)
    argument = math.pi * C * math.sqrt(E1 * E2) / (hbar * w * W**2)

    ratios = {
        "C_over_omega2": C / w**2,
        "omega2_over_Omega2": w**2 / W**2,
        "E1_over_hbarOmega": E1 / hW,
        "E2_over_hbarOmega": E2 / hW,
        # C^2 <x^2 y^2> against (hbar Omega)^2
        "interaction_sq_over_hbarOmega_sq": interaction**2 / hW**2,
        "interaction_over_min_energy": interaction / min(E1, E2) if min(E1, E2) > 0 else math.inf,
        "E1_over_E2": E1 / E2 if E2 > 0 else math.inf,
        "entropy_argument": argument,
    }
    weak = ratios["C_over_omega2"] <= much_less and ratios["omega2_over_Omega2"] <= much_less
    classical = (
        ratios["E1_over_hbarOmega"] >= much_greater
        and ratios["E2_over_hbarOmega"] >= much_greater
        and ratios["interaction_sq_over_hbarOmega_sq"] >= much_greater
    )
    hierarchy = ratios["interaction_over_min_energy"] <= much_less
    return RegimeReport(
        weak_coupling_ok=bool(weak),
        classicality_ok=bool(classical),
        hierarchy_ok=bool(hierarchy),
        entropy_positive=bool(argument > 1.0),
        ratios=ratios,
    )


# -- flat key = value config files ------------------------------------------

_PARAM_KEYS = ("omega", "Omega", "C", "hbar", "delta_cell")
_STATE_KEYS = ("E1", "E2", "n", "m")


def _parse_value(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    return text.strip("\"'")


def read_config(path) -> dict:
    """Parse a ``key = value`` file into a dict; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = _parse_value(value)
    return out


def write_config(path, params: ModelParams, state: StateSpec | None = None, **extra) -> None:
    lines = [f"{k} = {getattr(params, k)!r}" for k in _PARAM_KEYS]
    if state is not None:
        lines += [f"{k} = {getattr(state, k)!r}" for k in _STATE_KEYS if getattr(state, k) is not None]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def params_from_mapping(d: dict) -> ModelParams:
    kw = {k: float(d[k]) for k in _PARAM_KEYS if d.get(k) is not None}
    return ModelParams(**kw)


def state_from_mapping(d: dict, params: ModelParams) -> StateSpec:
    n, m = d.get("n"), d.get("m")
    E1, E2 = d.get("E1"), d.get("E2")
    nm = normal_modes(params)
    if E1 is None:
        if n is None:
            raise ValueError("state needs E1 or n")
        E1 = n * params.hbar * nm.omega1
    if E2 is None:
        if m is None:
            raise ValueError("state needs E2 or m")
        E2 = m * params.hbar * nm.omega2
    return StateSpec(float(E1), float(E2), None if n is None else int(n), None if m is None else int(m))


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
