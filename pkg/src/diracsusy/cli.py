"""Configuration-driven command line: spectra, oracle verification, stability
diagnostics, parameter sweeps and wavefunction export.

Config files are flat sectioned key = value text with '#' comments and an
exhaustive key whitelist; all floats are emitted with 12 significant digits so
identical configs give byte-identical CSV.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import catalog, oracle, susy
from .model import (
    ConfigError,
    Constants,
    Couplings,
    DiracSusyError,
    InverseLinearShape,
    LinearShape,
    NoSuchLevelError,
    TabulatedShape,
    UnstableRegimeError,
    UnsupportedBranchError,
)


class ConfigSyntaxError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


class ConfigDomainError(ConfigError):
    pass


# ---------------------------------------------------------------------------
# Schema and parsing
# ---------------------------------------------------------------------------

_FLOAT, _INT, _STR = "float", "int", "str"

SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "constants": {"m": (_FLOAT, 1.0), "c": (_FLOAT, 1.0), "hbar": (_FLOAT, 1.0)},
    "couplings": {
        "zeta1": (_FLOAT, 0.0), "zeta2": (_FLOAT, 0.0), "zeta3": (_FLOAT, 0.0),
        "eps": (_FLOAT, 0.0), "m_shift": (_FLOAT, 0.0), "e_shift": (_FLOAT, 0.0),
    },
    "shape": {"kind": (_STR, None), "a": (_FLOAT, None), "q": (_FLOAT, None),
              "file": (_STR, None)},
    "dimension": {
        "type": (_STR, "one_plus_one"), "k": (_FLOAT, 0.0), "s": (_INT, 1),
        "B": (_FLOAT, None), "Efield": (_FLOAT, 0.0), "C": (_FLOAT, 0.0),
    },
    "solve": {"n_max": (_INT, 5), "window": (_STR, "auto")},
    "grid": {"xmin": (_STR, "auto"), "xmax": (_STR, "auto"),
             "n_points": (_INT, 4001)},
}

_SHAPE_KINDS = ("linear", "inverse_linear", "tabulated")


@dataclass
class ProblemConfig:
    """Validated key/value content of a config file (defaults filled)."""

    values: dict[str, dict[str, object]]
    base_dir: Path

    def get(self, section: str, key: str):
        return self.values[section].get(key)

    def set_numeric(self, path: str, value: float) -> "ProblemConfig":
        section, _, key = path.partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise UnknownKeyError(f"unknown parameter path '{path}'")
        kind = SCHEMA[section][key][0]
        if kind == _STR and key in ("xmin", "xmax"):
            new_value: object = f"{value:.12g}"
        elif kind == _INT:
            new_value = int(value)
        elif kind == _FLOAT:
            new_value = float(value)
        else:
            raise UnknownKeyError(f"parameter '{path}' is not numeric")
        out = copy.deepcopy(self.values)
        out[section][key] = new_value
        return ProblemConfig(values=out, base_dir=self.base_dir)


def parse_config(text: str, base_dir: Optional[Path] = None) -> ProblemConfig:
    """Parse and validate config text; fill defaults.

    Raises ConfigSyntaxError (with line number), UnknownKeyError, or
    ConfigDomainError for structurally valid but physically impossible input.
    """
    values: dict[str, dict[str, object]] = {s: {} for s in SCHEMA}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise UnknownKeyError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in line:
            raise ConfigSyntaxError(f"expected 'key = value', got {line!r}",
                                    line=lineno)
        if section is None:
            raise ConfigSyntaxError("key before any [section] header", line=lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in SCHEMA[section]:
            raise UnknownKeyError(f"unknown key '{key}' in [{section}]", line=lineno)
        if key in values[section]:
            raise ConfigSyntaxError(f"duplicate key '{key}' in [{section}]",
                                    line=lineno)
        kind = SCHEMA[section][key][0]
        try:
            if kind == _FLOAT:
                parsed: object = float(val)
            elif kind == _INT:
                parsed = int(val)
            else:
                parsed = val
        except ValueError:
            raise ConfigSyntaxError(
                f"cannot parse {val!r} as {kind} for '{key}'", line=lineno
            ) from None
        values[section][key] = parsed
    for sec, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            if key not in values[sec] and default is not None:
                values[sec][key] = default
    cfg = ProblemConfig(values=values, base_dir=base_dir or Path.cwd())
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ProblemConfig) -> None:
    dim = cfg.get("dimension", "type")
    if dim not in ("one_plus_one", "two_plus_one"):
        raise ConfigDomainError(f"dimension.type must be one_plus_one or "
                                f"two_plus_one, got '{dim}'")
    if cfg.get("dimension", "s") not in (1, -1):
        raise ConfigDomainError("dimension.s must be 1 or -1")
    if cfg.get("solve", "n_max") < 0:
        raise ConfigDomainError("solve.n_max must be nonnegative")
    if cfg.get("grid", "n_points") < 16:
        raise ConfigDomainError("grid.n_points must be at least 16")
    window = cfg.get("solve", "window")
    if window != "auto":
        _parse_window(window)
    for key in ("xmin", "xmax"):
        v = cfg.get("grid", key)
        if v != "auto":
            try:
                float(v)
            except (TypeError, ValueError):
                raise ConfigDomainError(f"grid.{key} must be a number or 'auto'")
    if dim == "two_plus_one":
        if any(cfg.get("shape", k) is not None for k in SCHEMA["shape"]):
            raise ConfigDomainError(
                "the two_plus_one problem takes no [shape] section; its "
                "fields live in [dimension]"
            )
        if cfg.get("dimension", "B") in (None, 0.0):
            raise ConfigDomainError("two_plus_one needs a nonzero dimension.B")
        return
    kind = cfg.get("shape", "kind")
    if kind is None:
        raise ConfigDomainError("one_plus_one needs shape.kind")
    if kind not in _SHAPE_KINDS:
        raise ConfigDomainError(f"shape.kind must be one of {_SHAPE_KINDS}")
    if kind == "linear" and cfg.get("shape", "a") in (None, 0.0):
        raise ConfigDomainError("linear shape needs a nonzero shape.a")
    if kind == "inverse_linear":
        q = cfg.get("shape", "q")
        if q is None or q <= 0.0:
            raise ConfigDomainError("inverse_linear shape needs shape.q > 0")
        xmin = cfg.get("grid", "xmin")
        if xmin != "auto" and float(xmin) < 0.0:
            raise ConfigDomainError(
                "inverse_linear lives on x > 0: grid.xmin must be >= 0"
            )
    if kind == "tabulated" and cfg.get("shape", "file") is None:
        raise ConfigDomainError("tabulated shape needs shape.file")


def _parse_window(text: str) -> tuple[float, float]:
    try:
        lo_s, hi_s = text.split(",")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise ConfigDomainError(f"window must be 'lo,hi', got '{text}'") from None
    if not hi > lo:
        raise ConfigDomainError(f"window must have hi > lo, got '{text}'")
    return lo, hi


def serialize_config(cfg: ProblemConfig) -> str:
    lines = []
    for sec in SCHEMA:
        keys = [k for k in SCHEMA[sec] if cfg.values[sec].get(k) is not None]
        if not keys:
            continue
        lines.append(f"[{sec}]")
        for k in keys:
            v = cfg.values[sec][k]
            if isinstance(v, float):
                lines.append(f"{k} = {v:.12g}")
            else:
                lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Config -> domain objects
# ---------------------------------------------------------------------------

def _constants(cfg: ProblemConfig) -> Constants:
    return Constants(m=cfg.get("constants", "m"), c=cfg.get("constants", "c"),
                     hbar=cfg.get("constants", "hbar"))


def _couplings(cfg: ProblemConfig) -> Couplings:
    g = lambda k: cfg.get("couplings", k)  # noqa: E731
    return Couplings(zeta1=g("zeta1"), zeta2=g("zeta2"), zeta3=g("zeta3"),
                     eps=g("eps"), m_shift=g("m_shift"), e_shift=g("e_shift"))


def _shape(cfg: ProblemConfig):
    kind = cfg.get("shape", "kind")
    if kind == "linear":
        return LinearShape(a=cfg.get("shape", "a"))
    if kind == "inverse_linear":
        return InverseLinearShape(q=cfg.get("shape", "q"))
    path = Path(cfg.get("shape", "file"))
    if not path.is_absolute():
        path = cfg.base_dir / path
    try:
        table = np.loadtxt(path, delimiter=",")
    except OSError as exc:
        raise ConfigDomainError(f"cannot read shape table: {exc}") from exc
    if table.ndim != 2 or table.shape[1] != 3:
        raise ConfigDomainError("shape table must have columns x, f, df")
    return TabulatedShape(table[:, 0], table[:, 1], table[:, 2])


def build_problem(cfg: ProblemConfig):
    constants = _constants(cfg)
    if cfg.get("dimension", "type") == "two_plus_one":
        mode = {"B": cfg.get("dimension", "B"),
                "Efield": cfg.get("dimension", "Efield"),
                "C": cfg.get("dimension", "C"),
                "k": cfg.get("dimension", "k"),
                "s": cfg.get("dimension", "s")}
        return catalog.build_problem(Couplings(), LinearShape(1.0), constants,
                                     mode=mode)
    return catalog.build_problem(_couplings(cfg), _shape(cfg), constants,
                                 n_max=cfg.get("solve", "n_max"))


def _grid_for(cfg: ProblemConfig, problem, n_max: int) -> oracle.Grid:
    xmin, xmax = cfg.get("grid", "xmin"), cfg.get("grid", "xmax")
    n_points = cfg.get("grid", "n_points")
    if xmin == "auto" or xmax == "auto":
        g = problem.default_grid(n_max)
        return oracle.Grid(xmin=g.xmin, xmax=g.xmax, n_points=n_points)
    return oracle.Grid(xmin=float(xmin), xmax=float(xmax), n_points=n_points)


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------

CSV_HEADER = ("n,branch,E_closed_form,E_engine,E_oracle,"
              "rel_err_engine_oracle,stability,method")


def _fmt(v: Optional[float]) -> str:
    if v is None:
        return ""
    return f"{v + 0.0:.12g}"


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1.0)


def _problem_method(problem) -> str:
    return {
        catalog.LinearProblem: "linear_closed_form",
        catalog.InverseLinearProblem: "inverse_linear_closed_form",
        catalog.CrossedFieldProblem: "crossed_field_closed_form",
        catalog.PseudoscalarProblem: "pseudoscalar_branch",
        catalog.TabulatedProblem: "tabulated_si_scan",
    }[type(problem)]


def _stability_text(problem) -> str:
    if isinstance(problem, catalog.CrossedFieldProblem):
        return catalog.stability(problem.mode).verdict.value
    return catalog.stability(problem.couplings).verdict.value


def _numeric_engine_levels(problem, n: int):
    """Re-solve level n through the generic scanning path (no closed form)."""
    eng = problem.engine()
    eng_numeric = dataclasses.replace(eng, g_coeffs=None)
    try:
        return {lv.branch: lv.E for lv in susy.solve_level(eng_numeric, n)}
    except DiracSusyError:
        return {}


def spectrum_rows(problem, n_max: int) -> list[str]:
    method = _problem_method(problem)
    stab = _stability_text(problem)
    rows = []
    for n in range(n_max + 1):
        numeric = _numeric_engine_levels(problem, n)
        for lv in problem.levels(n):
            rows.append(",".join([
                str(n), lv.branch, _fmt(lv.E), _fmt(numeric.get(lv.branch)),
                "", "", stab, method,
            ]))
        if n == 0:
            shadow = problem.n0_discarded_value()
            if shadow is not None:
                rows.append(",".join([
                    "0", "(discarded)", _fmt(shadow), "", "", "", stab,
                    "printed_closed_form_n0",
                ]))
    return rows


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _emit(lines: list[str], out: Optional[str]) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_spectrum(cfg: ProblemConfig, n_max: Optional[int],
                 out: Optional[str]) -> int:
    problem = build_problem(cfg)
    n_max = n_max if n_max is not None else cfg.get("solve", "n_max")
    lines = [CSV_HEADER] + spectrum_rows(problem, n_max)
    _emit(lines, out)
    return 0


def _oracle_values(problem, cfg: ProblemConfig, n_max: int,
                   window: Optional[tuple[float, float]]) -> tuple[list[float], str]:
    """Oracle levels and the path used ('matrix' or 'shooting')."""
    levels = problem.levels_up_to(n_max)
    es = [lv.E for lv in levels]
    if window is None:
        pad = 0.25 * (max(es) - min(es)) + 0.5
        window = (min(es) - pad, max(es) + pad)
    grid = _grid_for(cfg, problem, n_max)
    system = problem.system()
    constants = problem.constants
    if system.domain[0] == 0.0:
        vals = oracle.find_levels_shooting(system, constants, window, grid)
        return vals, "shooting"
    ham = oracle.build_hamiltonian(system, constants, grid)
    vals = list(oracle.eigenvalues(ham, window))
    return vals, "matrix"


def cmd_verify(cfg: ProblemConfig, n_max: Optional[int], out: Optional[str],
               window: Optional[tuple[float, float]]) -> int:
    problem = build_problem(cfg)
    n_max = n_max if n_max is not None else cfg.get("solve", "n_max")
    oracle_vals, path = _oracle_values(problem, cfg, n_max, window)
    tol = 1e-3 if path == "matrix" else 1e-2
    method = _problem_method(problem) + "+" + path
    stab = _stability_text(problem)
    rows = [CSV_HEADER]
    worst = 0.0
    missing = False
    for n in range(n_max + 1):
        for lv in problem.levels(n):
            if oracle_vals:
                nearest = min(oracle_vals, key=lambda v: abs(v - lv.E))
                err = rel_err(lv.E, nearest)
            else:
                nearest, err = None, None
                missing = True
            worst = max(worst, err if err is not None else np.inf)
            rows.append(",".join([
                str(n), lv.branch, _fmt(lv.E), _fmt(lv.E), _fmt(nearest),
                _fmt(err), stab, method,
            ]))
    _emit(rows, out)
    ok = (not missing) and worst <= tol
    if not ok and not missing:
        # distinguish a genuine mismatch from oracle non-convergence
        grid = _grid_for(cfg, problem, n_max)
        report = oracle.convergence_probe(problem.system(), problem.constants,
                                          grid)
        if report.verdict == "NotConverged":
            print(f"FAIL oracle not converged (box drift {report.drift_box:.3g}, "
                  f"grid drift {report.drift_grid:.3g})", file=sys.stderr)
    print(f"{'PASS' if ok else 'FAIL'} max_rel_err={_fmt(worst)} tol={_fmt(tol)} "
          f"path={path}")
    return 0 if ok else 3


def cmd_stability(cfg: ProblemConfig) -> int:
    if cfg.get("dimension", "type") == "two_plus_one":
        from .model import Mode2p1

        mode = Mode2p1(k=cfg.get("dimension", "k"), s=cfg.get("dimension", "s"),
                       lambda1=-cfg.get("dimension", "B"),
                       lambda2=cfg.get("dimension", "C"),
                       lambda3=-cfg.get("dimension", "Efield"))
        verdict = catalog.stability(mode)
    else:
        verdict = catalog.stability(_couplings(cfg))
    line = f"verdict={verdict.verdict.value} delta={_fmt(verdict.delta)}"
    if verdict.detail:
        line += f" caveat={verdict.detail}"
    print(line)
    return 0


def cmd_sweep(cfg: ProblemConfig, param: str, lo: float, hi: float, steps: int,
              n_max: Optional[int], out: Optional[str]) -> int:
    if steps < 1:
        raise ConfigDomainError("sweep needs at least one step")
    n_max_val = n_max if n_max is not None else cfg.get("solve", "n_max")
    if lo == hi or steps == 1:
        values = [lo]
    else:
        values = list(np.linspace(lo, hi, steps))
    rows = ["param,n,branch,E,error"]
    for v in values:
        pv = _fmt(float(v))
        try:
            mutated = cfg.set_numeric(param, float(v))
            problem = build_problem(mutated)
            for lv in problem.levels_up_to(n_max_val):
                rows.append(f"{pv},{lv.n},{lv.branch},{_fmt(lv.E)},")
        except DiracSusyError as exc:
            rows.append(f"{pv},,,,\"{type(exc).__name__}: {exc}\"")
    _emit(rows, out)
    return 0


def cmd_wavefunction(cfg: ProblemConfig, n: int, branch: Optional[str],
                     out: Optional[str]) -> int:
    problem = build_problem(cfg)
    if branch is None:
        branch = "single" if n == 0 else "+"
    eig = problem.eigenfunction(n, branch)
    lines = [f"# E = {_fmt(eig.E)}", f"# norm = {_fmt(eig.norm)}", "x,psi1,psi2"]
    for x, p1, p2 in zip(eig.x1, eig.psi1, eig.psi2):
        lines.append(f"{_fmt(float(x))},{_fmt(float(p1))},{_fmt(float(p2))}")
    _emit(lines, out)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _load_config(path: str) -> ProblemConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, base_dir=p.parent)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="diracsusy",
        description="Dirac spectra via energy-dependent SUSY factorization, "
                    "verified against an independent numerical oracle.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)

    p_spec = sub.add_parser("spectrum", help="closed-form/engine levels as CSV")
    add_common(p_spec)
    p_spec.add_argument("--n-max", type=int, default=None)

    p_ver = sub.add_parser("verify", help="cross-check levels against the oracle")
    add_common(p_ver)
    p_ver.add_argument("--n-max", type=int, default=None)
    p_ver.add_argument("--window", default=None)

    p_stab = sub.add_parser("stability", help="Dirac-sea stability verdict")
    p_stab.add_argument("--config", required=True)

    p_sweep = sub.add_parser("sweep", help="re-solve the spectrum along a parameter")
    add_common(p_sweep)
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--range", required=True, dest="range_",
                         metavar="LO,HI")
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--n-max", type=int, default=None)

    p_wf = sub.add_parser("wavefunction", help="export one normalized eigenfunction")
    add_common(p_wf)
    p_wf.add_argument("--n", type=int, required=True)
    p_wf.add_argument("--branch", choices=["+", "-", "single"], default=None)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.n_max, args.out)
        if args.command == "verify":
            window = _parse_window(args.window) if args.window else None
            return cmd_verify(cfg, args.n_max, args.out, window)
        if args.command == "stability":
            return cmd_stability(cfg)
        if args.command == "sweep":
            if "," in args.range_:
                lo_s, hi_s = args.range_.split(",")
                lo, hi = float(lo_s), float(hi_s)
            else:
                lo = hi = float(args.range_)
            return cmd_sweep(cfg, args.param, lo, hi, args.steps, args.n_max,
                             args.out)
        if args.command == "wavefunction":
            return cmd_wavefunction(cfg, args.n, args.branch, args.out)
        raise DiracSusyError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except UnstableRegimeError as exc:
        print(f"unstable regime: {exc}", file=sys.stderr)
        return 2
    except UnsupportedBranchError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return 1
    except NoSuchLevelError as exc:
        print(f"no such level: {exc}", file=sys.stderr)
        return 1
    except DiracSusyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
