"""Command-line front end: ``oscillent <command> [flags]``.

Exit codes: 0 success, 1 error (bad flags, unreadable config, failed
computation), 2 regime violation under ``--strict``.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import classical, quantum, wkb
from .classical import EntropyResult, Method, RegimeWarning
from .core import (
    ModelParams,
    OscillentError,
    StateSpec,
    normal_modes,
    params_from_mapping,
    read_config,
    state_from_mapping,
    to_json,
    validate_regime,
)
from .storage import KernelCache, write_samples

__all__ = ["RunConfig", "ComparisonReport", "run", "main", "build_parser", "load_schema", "REFERENCE", "TOLERANCES"]

SCHEMA_ID = "oscillent.report/1"
COMMANDS = ("modes", "classical", "quantum", "wkb", "ground", "compare", "sweep", "trajectory")
REFERENCE = {"omega": 1.0, "Omega": math.sqrt(10.0), "C": 0.3, "hbar": 1.0, "E1": 20.0, "E2": 200.0}

# |S_method - S_closed_form| allowed by the acceptance tolerances
TOLERANCES = {
    "quadrature": 1e-3,
    "torus_mc": 0.05,
    "trajectory": 0.1,
    "exact_kernel": 0.15,
    "wkb_kernel": 0.1,
    "wkb_closed_form": 1e-12,
}

CLASSICAL_METHODS = ("closed_form", "quadrature", "torus_mc", "trajectory")
QUANTUM_METHODS = ("exact_kernel", "wkb_kernel", "low_excitation")
SWEEP_METHODS = ("closed_form", "quadrature", "wkb_closed_form", "exact_kernel", "torus_mc")
SWEEP_KEYS = ("omega", "Omega", "C", "hbar", "E1", "E2")

_CONFIG_KEYS = {
    "omega", "Omega", "C", "hbar", "delta_cell", "E1", "E2", "n", "m", "method", "samples", "steps",
    "seed", "grid_points", "jobs", "strict", "out", "figures", "vary", "from", "to", "points", "no_cache",
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ModelParams
    state: StateSpec | None
    methods: tuple = ()
    samples: int | None = None
    steps: int | None = None
    grid_points: int | None = None
    seed: int = 0
    jobs: int = 1
    strict: bool = False
    out: str | None = None
    figures: str | None = None
    cache: bool = True
    sweep: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d


@dataclass
class ComparisonReport:
    command: str
    config: RunConfig
    results: list = field(default_factory=list)
    regime: object = None
    extra: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    exit_code: int = 0

    def reference_value(self):
        for r in self.results:
            if Method(r.method) is Method.closed_form:
                return r.value
        return None

    def deltas(self) -> dict:
        ref = self.reference_value()
        if ref is None:
            return {}
        return {Method(r.method).value: _finite(r.value - ref) for r in self.results if Method(r.method) is not Method.closed_form}

    def verdicts(self) -> dict:
        out = {}
        for name, delta in self.deltas().items():
            if name in TOLERANCES:
                tol = TOLERANCES[name]
                out[name] = {"reference": "closed_form", "tolerance": tol, "delta": delta,
                             "pass": delta is not None and abs(delta) <= tol}
        return out

    def to_dict(self) -> dict:
        cfg = self.config
        d = {
            "schema": SCHEMA_ID,
            "command": self.command,
            "config": cfg.to_dict(),
            "params": cfg.params.to_dict(),
            "state": cfg.state.to_dict() if cfg.state is not None else None,
            "modes": normal_modes(cfg.params).to_dict(),
            "regime": self.regime.to_dict() if self.regime is not None else None,
            "results": [r.to_dict() for r in self.results],
            "deltas": self.deltas(),
            "verdicts": self.verdicts(),
            "extra": self.extra,
            "files": list(self.files),
            "warnings": list(self.warnings),
            "exit_code": self.exit_code,
        }
        return _sanitize(d)


def _finite(v):
    return float(v) if v is not None and math.isfinite(v) else None


def _sanitize(obj):
    """Plain JSON types only; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if hasattr(obj, "to_dict"):
        return _sanitize(obj.to_dict())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    return obj


def load_schema() -> dict:
    return json.loads(resources.files("oscillent").joinpath("schemas/report.schema.json").read_text())


# -- per-command work ----------------------------------------------------------------


def _classical(cfg: RunConfig, method: str) -> EntropyResult:
    p, s = cfg.params, cfg.state
    if method == "closed_form":
        return classical.classical_entropy_closed_form(s, p)
    if method == "quadrature":
        return classical.classical_entropy_quadrature(s, p)
    if method == "torus_mc":
        return classical.classical_entropy_torus_mc(s, p, n_samples=cfg.samples or 1_000_000, seed=cfg.seed)
    if method == "trajectory":
        return classical.classical_entropy_trajectory(s, p, n_steps=cfg.steps or 1_000_000, seed=cfg.seed)
    raise ValueError(f"unknown classical method {method!r}")


def _kernel(cfg: RunConfig, state=None):
    state = state or cfg.state
    grid = y_grid = None
    if cfg.grid_points is not None:
        grid, y_grid = quantum.grid_for_state(state, cfg.params, n_points=cfg.grid_points)
    cache = KernelCache() if cfg.cache else None
    return quantum.reduced_density_kernel(state, cfg.params, grid=grid, y_grid=y_grid, cache=cache)


def _quantum(cfg: RunConfig, method: str, report: ComparisonReport) -> EntropyResult:
    p, s = cfg.params, cfg.state
    if method == "exact_kernel":
        rdm = _kernel(cfg)
        spec = quantum.schmidt_spectrum(rdm)
        n, m = s.quanta(p)
        report.extra["schmidt"] = {
            "eigenvalues": spec.eigenvalues[spec.eigenvalues > 1e-12][:64],
            "effective_rank": spec.effective_rank,
            "flatness": spec.flatness,
            "flatness_median": spec.flatness_median,
        }
        report.extra["_rdm"] = rdm
        return EntropyResult(
            quantum.von_neumann_entropy(spec.eigenvalues),
            Method.exact_kernel,
            None,
            {"n": n, "m": m, "grid_points": rdm.grid.N, "trace": rdm.trace},
        )
    if method == "wkb_kernel":
        return wkb.wkb_kernel_entropy(s, p, **({"n_points": cfg.grid_points} if cfg.grid_points else {}))
    if method == "low_excitation":
        le = quantum.low_excitation_entropy(s, p)
        return EntropyResult(le.entropy, Method.low_excitation, None, le.to_dict())
    raise ValueError(f"unknown quantum method {method!r}")


def _figure_path(cfg: RunConfig, name: str):
    return Path(cfg.figures) / name


def _cmd_modes(cfg, report):
    report.extra["modes"] = normal_modes(cfg.params).to_dict()


def _cmd_classical(cfg, report):
    for m in cfg.methods or ("closed_form", "quadrature"):
        report.results.append(_classical(cfg, m))
    if cfg.figures:
        from .figures import marginal_heatmap

        path = marginal_heatmap(cfg.state, cfg.params, _figure_path(cfg, "marginal.svg"))
        if path:
            report.files.append(str(path))


def _spectrum_figure(cfg, report, rdm):
    from .figures import spectrum_overlay

    shape = wkb.schmidt_shape_comparison(cfg.state, cfg.params, rdm)
    report.extra["shape"] = {k: v for k, v in shape.to_dict().items() if k not in ("eigenvalues", "offsets")}
    if cfg.figures:
        path = spectrum_overlay(shape.eigenvalues, shape.offsets, shape.dn_max, _figure_path(cfg, "spectrum.svg"))
        if path:
            report.files.append(str(path))


def _cmd_quantum(cfg, report):
    for m in cfg.methods or ("exact_kernel",):
        report.results.append(_quantum(cfg, m, report))
    rdm = report.extra.pop("_rdm", None)
    if rdm is not None:
        _spectrum_figure(cfg, report, rdm)


def _cmd_wkb(cfg, report):
    spec = wkb.lambda_spectrum(cfg.state, cfg.params)
    report.extra["dn_max"] = spec.dn_max
    report.results.append(classical.classical_entropy_closed_form(cfg.state, cfg.params))
    report.results.append(wkb.wkb_entropy(cfg.state, cfg.params, "closed_form"))
    report.results.append(wkb.wkb_entropy(cfg.state, cfg.params, "quadrature"))
    if "wkb_kernel" in cfg.methods:
        report.results.append(_quantum(cfg, "wkb_kernel", report))
    if cfg.out:
        spec.to_csv(cfg.out)
        report.files.append(cfg.out)


def _cmd_ground(cfg, report):
    g = quantum.ground_state_entropy_smallC(cfg.params)
    report.results.append(EntropyResult(g.entropy, Method.ground_state, None, {"f": g.f}))
    s0 = StateSpec.from_quanta(0, 0, cfg.params, zero_point=True)
    rdm = _kernel(cfg, s0)
    vals = quantum.schmidt_spectrum(rdm).eigenvalues
    S = quantum.von_neumann_entropy(vals)
    report.results.append(EntropyResult(S, Method.exact_kernel, None, {"n": 0, "m": 0, "trace": rdm.trace}))
    report.extra["f"] = g.f
    report.extra["second_eigenvalue"] = float(vals[1]) if len(vals) > 1 else 0.0
    report.extra["relative_deviation"] = abs(S - g.entropy) / g.entropy if g.entropy > 0 else None


def _cmd_compare(cfg, report):
    for m in CLASSICAL_METHODS:
        report.results.append(_classical(cfg, m))
    for m in ("exact_kernel", "wkb_kernel"):
        report.results.append(_quantum(cfg, m, report))
    report.results.append(wkb.wkb_entropy(cfg.state, cfg.params, "closed_form"))
    rdm = report.extra.pop("_rdm")
    _spectrum_figure(cfg, report, rdm)
    if cfg.figures:
        from .figures import marginal_heatmap

        path = marginal_heatmap(cfg.state, cfg.params, _figure_path(cfg, "marginal.svg"))
        if path:
            report.files.append(str(path))


def _sweep_point(args):
    cfg, value = args
    key = cfg.sweep["vary"]
    row = {key: value}
    if key in ("E1", "E2"):
        cfg = replace(cfg, state=replace(cfg.state, **{key: value, "n": None, "m": None}))
    else:
        params = cfg.params.replace(**{key: value})
        state = cfg.state
        if state.n is not None or state.m is not None:
            state = replace(state, n=None, m=None)
        cfg = replace(cfg, params=params, state=state)
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for m in cfg.methods or ("closed_form", "quadrature"):
            try:
                if m in CLASSICAL_METHODS:
                    r = _classical(cfg, m)
                elif m == "wkb_closed_form":
                    r = wkb.wkb_entropy(cfg.state, cfg.params, "closed_form")
                elif m == "exact_kernel":
                    rdm = _kernel(replace(cfg, cache=False))
                    r = EntropyResult(quantum.von_neumann_entropy(rdm), Method.exact_kernel)
                else:
                    raise ValueError(f"method {m!r} not available in sweeps")
                row[f"S_{m}"] = _finite(r.value)
            except OscillentError as exc:
                row[f"S_{m}"] = None
                notes.append(f"{key}={value!r} {m}: {exc}")
    notes += [f"{key}={value!r}: {w.message}" for w in caught]
    return row, notes


def _cmd_sweep(cfg, report):
    sw = cfg.sweep
    if sw["vary"] not in SWEEP_KEYS:
        raise ValueError(f"--vary must be one of {', '.join(SWEEP_KEYS)}")
    values = [float(v) for v in np.linspace(sw["from"], sw["to"], int(sw["points"]))]
    tasks = [(cfg, v) for v in values]
    if cfg.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_sweep_point, tasks))
    else:
        outcomes = [_sweep_point(t) for t in tasks]
    rows = [o[0] for o in outcomes]
    for _, notes in outcomes:
        report.warnings.extend(n for n in notes if n not in report.warnings)
    report.extra["rows"] = rows
    if cfg.out:
        columns = list(rows[0])
        with open(cfg.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: ("" if r[k] is None else repr(r[k])) for k in columns})
        report.files.append(cfg.out)
    if cfg.figures and sw["vary"] == "C":
        from .figures import entropy_vs_lnC

        cols = tuple(f"S_{m}" for m in (cfg.methods or ("closed_form", "quadrature")))
        path = entropy_vs_lnC(rows, _figure_path(cfg, "entropy_vs_lnC.svg"), cols)
        if path:
            report.files.append(str(path))


def _cmd_trajectory(cfg, report):
    p, s = cfg.params, cfg.state
    nm = normal_modes(p)
    dt = 0.01 / nm.omega2
    p0 = classical.torus_point(s, p, 0.3, 1.1, nm)
    traj = classical.integrate_trajectory(p0, p, dt, cfg.steps or 1_000_000)
    report.extra["trajectory"] = traj.report()
    if "trajectory" in cfg.methods:
        report.results.append(classical.classical_entropy_closed_form(s, p))
        report.results.append(classical.classical_entropy_trajectory(s, p, n_steps=cfg.steps or 1_000_000, seed=cfg.seed))
    if cfg.out:
        write_samples(cfg.out, traj.samples, p)
        report.files.append(cfg.out)


_HANDLERS = {
    "modes": _cmd_modes,
    "classical": _cmd_classical,
    "quantum": _cmd_quantum,
    "wkb": _cmd_wkb,
    "ground": _cmd_ground,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "trajectory": _cmd_trajectory,
}


def run(cfg: RunConfig) -> ComparisonReport:
    """Execute one command.  Deterministic given ``cfg`` (including its seed)."""
    report = ComparisonReport(cfg.command, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if cfg.state is not None:
            report.regime = validate_regime(cfg.params, cfg.state)
        _HANDLERS[cfg.command](cfg, report)
    regime_warned = False
    for w in caught:
        msg = str(w.message)
        regime_warned |= issubclass(w.category, RegimeWarning)
        if msg not in report.warnings:
            report.warnings.append(msg)
    violated = regime_warned or (report.regime is not None and not report.regime.all_ok and cfg.command != "modes")
    if cfg.strict and violated:
        report.exit_code = 2
    return report


# -- argument handling -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("model")
    g.add_argument("--omega", type=float, help="slow frequency omega [1/time]")
    g.add_argument("--Omega", type=float, help="fast frequency Omega [1/time]")
    g.add_argument("--C", type=float, help="coupling C [1/time^2]")
    g.add_argument("--hbar", type=float, help="Planck constant (default 1)")
    g.add_argument("--delta-cell", type=float, dest="delta_cell", help="phase cell Delta (default pi*hbar = h/2)")
    g = p.add_argument_group("state")
    g.add_argument("--n", type=int, help="slow-mode quanta (sets E1 = n hbar omega1 unless --E1)")
    g.add_argument("--m", type=int, help="fast-mode quanta (sets E2 = m hbar omega2 unless --E2)")
    g.add_argument("--E1", type=float, help="slow normal-mode energy")
    g.add_argument("--E2", type=float, help="fast normal-mode energy")
    g = p.add_argument_group("run")
    g.add_argument("--method", help="comma-separated method list")
    g.add_argument("--samples", type=int, help="torus Monte Carlo sample count")
    g.add_argument("--steps", type=int, help="trajectory steps")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--grid-points", type=int, dest="grid_points", help="x grid size for kernels")
    g.add_argument("--jobs", type=int, help="concurrent sweep points")
    g.add_argument("--strict", action="store_true", default=None, help="exit 2 on regime violations")
    g.add_argument("--json", action="store_true", help="print the JSON report on stdout")
    g.add_argument("--out", help="output file (JSON report, CSV or binary samples)")
    g.add_argument("--figures", help="directory for SVG figures")
    g.add_argument("--no-cache", action="store_true", default=None, dest="no_cache", help="skip the kernel cache")
    g.add_argument("--config", help="flat 'key = value' file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oscillent", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "modes": "normal-mode rotation and frequencies",
        "classical": "classical entropy routes",
        "quantum": "exact reduced density matrix entropy",
        "wkb": "semiclassical Schmidt spectrum and entropy",
        "ground": "ground-state entropy, closed form and exact",
        "compare": "all routes side by side with verdicts",
        "sweep": "one parameter swept, entropies to CSV",
        "trajectory": "symplectic trajectory and conservation check",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], allow_abbrev=False)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--vary", help=f"parameter to vary: {', '.join(SWEEP_KEYS)}")
            p.add_argument("--from", type=float, dest="from_")
            p.add_argument("--to", type=float)
            p.add_argument("--points", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    merged = {}
    if args.config:
        try:
            merged.update(read_config(args.config))
        except OSError as exc:
            raise OscillentError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(merged) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config", "json")}
    if "from_" in flags:
        flags["from"] = flags.pop("from_")
    merged.update(flags)

    base = {k: merged.get(k, REFERENCE.get(k)) for k in ("omega", "Omega", "C", "hbar", "delta_cell")}
    params = params_from_mapping(base)
    st = {k: merged.get(k) for k in ("E1", "E2", "n", "m")}
    if st["E1"] is None and st["n"] is None:
        st["E1"] = REFERENCE["E1"]
    if st["E2"] is None and st["m"] is None:
        st["E2"] = REFERENCE["E2"]
    state = state_from_mapping(st, params)

    methods = merged.get("method") or ()
    if isinstance(methods, str):
        methods = tuple(m.strip() for m in methods.split(",") if m.strip())
    if methods == ("all",):
        methods = {"classical": CLASSICAL_METHODS, "quantum": QUANTUM_METHODS[:2]}.get(args.command, methods)
    valid = {
        "classical": CLASSICAL_METHODS,
        "quantum": QUANTUM_METHODS,
        "wkb": ("wkb_kernel",),
        "sweep": SWEEP_METHODS,
        "trajectory": ("trajectory",),
    }.get(args.command, ())
    bad = [m for m in methods if m not in valid]
    if bad:
        raise ValueError(f"method(s) {', '.join(bad)} not valid for {args.command}; choose from {', '.join(valid) or 'none'}")

    sweep = None
    if args.command == "sweep":
        sweep = {"vary": merged.get("vary", "C"), "from": float(merged.get("from", 0.05)),
                 "to": float(merged.get("to", 0.5)), "points": int(merged.get("points", 10))}
        if sweep["points"] < 1:
            raise ValueError("--points must be >= 1")

    def opt_int(key):
        return None if merged.get(key) is None else int(merged[key])

    return RunConfig(
        command=args.command,
        params=params,
        state=state,
        methods=tuple(methods),
        samples=opt_int("samples"),
        steps=opt_int("steps"),
        grid_points=opt_int("grid_points"),
        seed=int(merged.get("seed", 0)),
        jobs=max(1, int(merged.get("jobs", 1))),
        strict=bool(merged.get("strict", False)),
        out=None if merged.get("out") is None else str(merged["out"]),
        figures=None if merged.get("figures") is None else str(merged["figures"]),
        cache=not bool(merged.get("no_cache", False)),
        sweep=sweep,
    )


def _format_text(report: ComparisonReport) -> str:
    d = report.to_dict()
    lines = [f"oscillent {report.command}"]
    p = d["params"]
    lines.append("params  " + "  ".join(f"{k}={p[k]:.6g}" for k in ("omega", "Omega", "C", "hbar", "delta_cell")))
    if d["state"]:
        s = d["state"]
        lines.append(f"state   E1={s['E1']:.6g}  E2={s['E2']:.6g}  n={s['n']}  m={s['m']}")
    md = d["modes"]
    lines.append(f"modes   alpha={md['alpha']:.10g}  beta={md['beta']:.10g}  omega1={md['omega1']:.10g}  omega2={md['omega2']:.10g}")
    if d["regime"]:
        r = d["regime"]
        flags = ", ".join(f"{k}={r[k]}" for k in ("weak_coupling_ok", "classicality_ok", "hierarchy_ok", "entropy_positive"))
        lines.append(f"regime  {flags}")
    deltas = d["deltas"]
    for r in d["results"]:
        val = "nan" if r["value"] is None else f"{r['value']:.8f}"
        unc = f" +/- {r['uncertainty']:.2g}" if r.get("uncertainty") else ""
        delta = deltas.get(r["method"])
        dl = f"  delta={delta:+.4f}" if delta is not None else ""
        verdict = d["verdicts"].get(r["method"])
        vs = ("  PASS" if verdict["pass"] else "  FAIL") if verdict else ""
        lines.append(f"  {r['method']:<16s} S = {val}{unc}{dl}{vs}")
    extra = d["extra"]
    if "rows" in extra:
        cols = list(extra["rows"][0])
        lines.append("  " + "  ".join(f"{c:>18s}" for c in cols))
        for row in extra["rows"]:
            lines.append("  " + "  ".join(f"{'' if row[c] is None else format(row[c], '.8g'):>18s}" for c in cols))
    for key in ("dn_max", "f", "relative_deviation", "trajectory", "shape"):
        if key in extra:
            lines.append(f"  {key}: {json.dumps(extra[key], sort_keys=True)}")
    for f in d["files"]:
        lines.append(f"wrote {f}")
    for w in d["warnings"]:
        lines.append(f"warning: {w}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg)
    except (OscillentError, ValueError, OSError) as exc:
        print(f"oscillent: error: {exc}", file=sys.stderr)
        return 1
    text = to_json(report.to_dict())
    if cfg.out and cfg.command in ("modes", "classical", "quantum", "ground", "compare"):
        Path(cfg.out).write_text(text + "\n")
    print(text if args.json else _format_text(report))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
