"""Command-line entry point.

    fracnls groundstate  --sigma 0.75 --omega 1 --out q.json
    fracnls soliton      --sigma 0.75 --omega 1 --n 2048 --box 125.6
    fracnls rescale      --in q1.json --k 2 --out q2.json
    fracnls evolve       --sigma 0.75 --k 1 --dt 1e-3 --t-final 1 --out traj.csv
    fracnls check        --sigma 0.75
    fracnls symbol-table --sigma 0.75 --k 1

Exit codes: 0 success, 1 solver failure, 2 validation failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import diagnostics
from .evolution import (
    EvolutionConfig,
    EvolutionError,
    ResolutionError,
    evolve,
    make_traveling_initial,
    soliton_phase_rate,
    soliton_velocity,
)
from .functionals import DEFAULT_THETA, FunctionalError
from .grid import Field, Grid, GridError
from .solvers import (
    SolitonProfile,
    SolverError,
    SolverOptions,
    gradient_flow_minimize,
    minimizer_grid,
    natural_length,
    rescale_to_k,
    solve_static_ground_state,
    solve_traveling_profile,
)
from .symbols import SymbolParams, error_symbol, eval_symbol, symmetrized_g

log = logging.getLogger("fracnls")

EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3
DEFAULT_POINTS = 2048
MAX_AUTO_POINTS = 2**15
COMMANDS = ("groundstate", "soliton", "rescale", "evolve", "check", "symbol-table")
CHECK_SIGMAS = (0.6, 0.75, 0.9)
PROFILE_FORMAT = "fracnls-profile/1"


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    sigma: Optional[float] = None
    omega: float = 1.0
    k: float = 1.0
    theta: float = DEFAULT_THETA
    box: Optional[float] = None
    n: Optional[int] = None
    dt: float = 1e-3
    t_final: float = 1.0
    tol: float = 1e-11
    max_iter: int = 5000
    method: str = "petviashvili"
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    format: Optional[str] = None
    seed: int = 0
    trials: int = 100
    observe_every: int = 10
    no_dealias: bool = False

    @property
    def solver_options(self) -> SolverOptions:
        return SolverOptions(max_iterations=self.max_iter, residual_tol=self.tol)

    @property
    def points(self) -> int:
        return self.n if self.n is not None else DEFAULT_POINTS

    @property
    def output_format(self) -> str:
        if self.format:
            return self.format
        suffix = Path(self.output_path).suffix.lower() if self.output_path else ""
        if suffix in (".csv", ".json"):
            return suffix[1:]
        return "csv" if self.command in ("evolve", "symbol-table") else "json"


_CONFIG_KEYS = {f.name for f in fields(RunConfig)} - {"command"}
_ALIASES = {"out": "output_path", "in": "input_path", "max_iterations": "max_iter",
            "t-final": "t_final", "max-iter": "max_iter"}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracnls", description="Fractional NLS solitary waves")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        # every default is None so the config file can fill gaps
        p.add_argument("--config", dest="config", default=None, help="JSON file with run settings")
        p.add_argument("--sigma", type=float)
        p.add_argument("--omega", type=float)
        p.add_argument("--k", type=float)
        p.add_argument("--theta", type=float)
        p.add_argument("--box", type=float, help="half-length L of the periodic box [-L, L)")
        p.add_argument("--n", type=int, help="number of grid points (power of two)")
        p.add_argument("--dt", type=float)
        p.add_argument("--t-final", dest="t_final", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--method", choices=("petviashvili", "gradient_flow"))
        p.add_argument("--in", dest="input_path")
        p.add_argument("--out", dest="output_path")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--observe-every", dest="observe_every", type=int)
        p.add_argument("--no-dealias", dest="no_dealias", action="store_const", const=True)
    return ap


def _load_config(path: str) -> dict:
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValidationError("config file must hold a JSON object")
    out = {}
    for key, val in raw.items():
        key = _ALIASES.get(key, key.replace("-", "_"))
        if key == "grid" and isinstance(val, (list, tuple)) and len(val) == 2:
            out["box"], out["n"] = val
            continue
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"unknown config key {key!r}")
        out[key] = val
    return out


def _in_range(sigma, lo, hi) -> bool:
    return lo < sigma <= hi


def validate(cfg: RunConfig) -> RunConfig:
    c = cfg.command
    if c not in COMMANDS:
        raise ValidationError(f"unknown command {c!r}")
    needs_sigma = c not in ("rescale", "check") or (c == "rescale" and not cfg.input_path)
    if cfg.sigma is None and needs_sigma:
        raise ValidationError("--sigma is required")
    if cfg.sigma is not None:
        if c == "groundstate":
            if not _in_range(cfg.sigma, 0.25, 1.0):
                raise ValidationError("sigma must lie in (0.25, 1]")
        elif not _in_range(cfg.sigma, 0.5, 1.0):
            raise ValidationError("sigma must lie in (0.5, 1]")
        if c == "check" and cfg.sigma == 1.0:
            raise ValidationError("check needs sigma in (0.5, 1)")
    if not (cfg.omega > 0):
        raise ValidationError("omega must be positive")
    if not (0.0 < cfg.theta < 1.0):
        raise ValidationError("theta must lie in (0, 1)")
    if c == "rescale" and cfg.k == 0:
        raise ValidationError("k must be nonzero")
    if cfg.box is not None and not cfg.box > 0:
        raise ValidationError("box must be positive")
    if cfg.n is not None and (cfg.n < 16 or cfg.n & (cfg.n - 1)):
        raise ValidationError("n must be a power of two >= 16")
    if not cfg.tol > 0:
        raise ValidationError("tol must be positive")
    if cfg.max_iter < 1:
        raise ValidationError("max-iter must be >= 1")
    if not (cfg.dt > 0 and cfg.t_final > 0):
        raise ValidationError("dt and t-final must be positive")
    if c == "evolve":
        steps = round(cfg.t_final / cfg.dt)
        if abs(steps * cfg.dt - cfg.t_final) > 1e-9 * cfg.t_final:
            raise ValidationError("t-final must be a whole number of steps dt")
    if cfg.trials < 1 or cfg.observe_every < 1:
        raise ValidationError("trials and observe-every must be >= 1")
    return cfg


def parse_args(argv=None) -> RunConfig:
    """Parse flags, merge an optional JSON config (command-line values win) and validate."""
    ns = _build_parser().parse_args(argv)
    merged = {}
    if ns.config:
        merged.update(_load_config(ns.config))
    for key, val in vars(ns).items():
        if key in _CONFIG_KEYS and val is not None:
            merged[key] = val
    cfg = RunConfig(command=ns.command, **merged)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return validate(cfg)


# -- persistence -------------------------------------------------------------

def _profile_meta(p: SolitonProfile) -> dict:
    return {
        "format": PROFILE_FORMAT,
        "half_length": p.grid.L,
        "n_points": p.grid.N,
        "sigma": p.sigma,
        "omega": p.omega,
        "k": p.k,
        "theta": p.meta.get("theta"),
        "residual": p.residual,
        "iterations": p.iterations,
        "method": p.method,
        "imag_fraction": p.meta.get("imag_fraction"),
    }


def _open_out(path: Optional[str]):
    if path in (None, "-"):
        return _Stdout()
    return open(path, "w", newline="")


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()
        return False


def write_profile(p: SolitonProfile, path: Optional[str], fmt: str = "json") -> None:
    """JSON keeps doubles bit-exact; CSV writes (x, Re, Im) with 17 significant digits."""
    meta = _profile_meta(p)
    v = p.values
    with _open_out(path) as fh:
        if fmt == "json":
            meta["real"] = v.real.tolist()
            meta["imag"] = v.imag.tolist()
            json.dump(meta, fh)
            fh.write("\n")
        elif fmt == "csv":
            fh.write("# " + json.dumps(meta) + "\n")
            fh.write("x,re,im\n")
            for x, re, im in zip(p.grid.x, v.real, v.imag):
                fh.write(f"{x:.17g},{re:.17g},{im:.17g}\n")
        else:
            raise ValidationError(f"unknown format {fmt!r}")


def read_profile(path: str) -> SolitonProfile:
    with open(path) as fh:
        text = fh.read()
    if text.startswith("#"):
        head, _, body = text.partition("\n")
        meta = json.loads(head[1:])
        rows = list(csv.reader(io.StringIO(body)))[1:]
        vals = np.array([float(r[1]) + 1j * float(r[2]) for r in rows if r])
    else:
        meta = json.loads(text)
        vals = np.array(meta["real"]) + 1j * np.array(meta["imag"])
    if meta.get("format") != PROFILE_FORMAT:
        raise ValidationError(f"{path} is not a profile file")
    grid = Grid(meta["half_length"], meta["n_points"])
    extra = {"imag_fraction": meta.get("imag_fraction")}
    if meta.get("theta") is not None:
        extra["theta"] = meta["theta"]
    return SolitonProfile(Field(grid, vals), meta["sigma"], meta["omega"], meta["k"],
                          meta["residual"], meta["iterations"], meta["method"], extra)


TRAJECTORY_COLUMNS = ("t", "mass", "energy", "momentum", "center", "shape_error")


def write_trajectory(rep, path: Optional[str], fmt: str, summary: dict) -> None:
    with _open_out(path) as fh:
        if fmt == "json":
            d = {c: getattr(rep, n).tolist() for c, n in zip(
                TRAJECTORY_COLUMNS, ("times", "mass", "energy", "momentum", "center", "shape_error"))}
            d["summary"] = summary
            json.dump(d, fh)
            fh.write("\n")
            return
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for row in rep.rows():
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        fh.write("# " + " ".join(f"{k}={v + 0.0:.17g}" for k, v in summary.items()) + "\n")


# -- commands ----------------------------------------------------------------

def _grid(cfg: RunConfig, length: float) -> Grid:
    # default half-length is a whole multiple of pi so that integer k are grid wavenumbers
    L = cfg.box if cfg.box is not None else np.pi * np.ceil(40 * max(1.0, length))
    return Grid(L, cfg.points)


def _traveling(cfg: RunConfig) -> SolitonProfile:
    if cfg.method == "gradient_flow":
        grid = Grid(cfg.box, cfg.points) if cfg.box is not None else minimizer_grid(cfg.sigma, cfg.theta, cfg.points)
        return gradient_flow_minimize(cfg.sigma, cfg.theta, grid, cfg.solver_options, cross_check=True)
    grid = _grid(cfg, natural_length(cfg.sigma, cfg.omega, 1.0))
    return solve_traveling_profile(cfg.sigma, cfg.omega, grid, cfg.solver_options)


def cmd_groundstate(cfg: RunConfig) -> int:
    grid = _grid(cfg, 1.0 / cfg.omega)
    p = solve_static_ground_state(cfg.sigma, cfg.omega, grid, cfg.solver_options)
    write_profile(p, cfg.output_path, cfg.output_format)
    return EXIT_OK


def cmd_soliton(cfg: RunConfig) -> int:
    p = _traveling(cfg)
    if p.method == "gradient_flow" and p.meta["agreement"] > 1e-5:
        log.error("gradient flow and Petviashvili disagree by %.3e", p.meta["agreement"])
        write_profile(p, cfg.output_path, cfg.output_format)
        return EXIT_VALIDATION
    write_profile(p, cfg.output_path, cfg.output_format)
    return EXIT_OK


def cmd_rescale(cfg: RunConfig) -> int:
    q1 = read_profile(cfg.input_path) if cfg.input_path else _traveling(cfg)
    qk = rescale_to_k(q1, cfg.k)
    write_profile(qk, cfg.output_path, cfg.output_format)
    if qk.residual > max(1e-7, 10 * q1.residual):
        log.error("rescaled residual %.3e is too large", qk.residual)
        return EXIT_VALIDATION
    return EXIT_OK


def _resolved_initial(cfg: RunConfig, prof: SolitonProfile):
    # no --n given: refine the grid until the modulated data is resolved
    n = cfg.points
    while True:
        try:
            return prof, make_traveling_initial(prof)
        except ResolutionError:
            if n >= MAX_AUTO_POINTS:
                raise
        n *= 2
        log.info("refining to n=%d", n)
        prof = _evolve_profile(RunConfig(**{**cfg.__dict__, "n": n}))


def _evolve_profile(cfg: RunConfig) -> SolitonProfile:
    if cfg.k == 0:
        grid = _grid(cfg, 1.0 / cfg.omega)
        return solve_static_ground_state(cfg.sigma, cfg.omega, grid, cfg.solver_options)
    # solve at k = 1 with omega/|k|, then rescale; the box shrinks by |k|
    scaled = RunConfig(**{**cfg.__dict__, "omega": cfg.omega / abs(cfg.k),
                          "box": None if cfg.box is None else cfg.box * abs(cfg.k)})
    return rescale_to_k(_traveling(scaled), cfg.k)


def cmd_evolve(cfg: RunConfig) -> int:
    if cfg.input_path:
        prof = read_profile(cfg.input_path)
        sigma = prof.sigma
    else:
        sigma = cfg.sigma
        prof = _evolve_profile(cfg)
    if cfg.input_path or cfg.n is not None:
        u0 = make_traveling_initial(prof)
    else:
        prof, u0 = _resolved_initial(cfg, prof)
    ecfg = EvolutionConfig(cfg.dt, cfg.t_final, not cfg.no_dealias, cfg.observe_every)
    rep = evolve(u0, sigma, ecfg, reference=prof)
    summary = {
        "center_velocity": rep.velocity,
        "predicted_velocity": soliton_velocity(sigma, prof.k),
        "phase_rate": rep.phase_rate,
        "predicted_phase_rate": soliton_phase_rate(sigma, prof.omega, prof.k),
        "max_shape_error": rep.max_shape_error,
        "mass_drift": rep.mass_drift,
        "energy_drift": rep.energy_drift,
    }
    write_trajectory(rep, cfg.output_path, cfg.output_format, summary)
    print(f"center velocity {rep.velocity:.12g} (predicted {summary['predicted_velocity']:.12g})",
          file=sys.stderr)
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    sigmas = (cfg.sigma,) if cfg.sigma is not None else CHECK_SIGMAS
    static = Grid(cfg.box, cfg.points) if cfg.box is not None else None
    reports = [
        diagnostics.run_diagnostics(s, cfg.theta, static=static, opts=cfg.solver_options,
                                    trials=cfg.trials, seed=cfg.seed, with_sech=(i == 0))
        for i, s in enumerate(sigmas)
    ]
    out = {"reports": [r.to_dict() for r in reports], "ok": all(r.ok for r in reports)}
    with _open_out(cfg.output_path) as fh:
        json.dump(out, fh, indent=1)
        fh.write("\n")
    for r in reports:
        for v in r.violations:
            log.error("sigma=%g: %s", r.sigma, v)
    return EXIT_OK if out["ok"] else EXIT_VALIDATION


def cmd_symbol_table(cfg: RunConfig) -> int:
    grid = _grid(cfg, 1.0)
    params = SymbolParams(cfg.sigma, cfg.k)
    xi = np.fft.fftshift(grid.xi)
    p0 = eval_symbol(params, xi)
    d1 = eval_symbol(params, xi, 1)
    d2 = np.full_like(xi, np.inf)
    reg = (xi != -cfg.k) | (cfg.sigma == 1.0)
    d2[reg] = eval_symbol(params, xi[reg], 2)
    g = symmetrized_g(cfg.sigma, xi)
    # defect symbol of the boost by k
    e = error_symbol(cfg.sigma, -cfg.k, xi)
    cols = ("xi", "p_k", "dp_k", "d2p_k", "g", "E")
    data = np.column_stack([xi, p0, d1, d2, g, e])
    with _open_out(cfg.output_path) as fh:
        if cfg.output_format == "json":
            json.dump({c: [float(v) if np.isfinite(v) else str(v) for v in data[:, j]]
                       for j, c in enumerate(cols)}, fh)
            fh.write("\n")
        else:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return EXIT_OK


_DISPATCH = {
    "groundstate": cmd_groundstate,
    "soliton": cmd_soliton,
    "rescale": cmd_rescale,
    "evolve": cmd_evolve,
    "check": cmd_check,
    "symbol-table": cmd_symbol_table,
}


def dispatch(cfg: RunConfig) -> int:
    try:
        return _DISPATCH[cfg.command](cfg)
    except (SolverError, EvolutionError, FunctionalError) as exc:
        print(f"fracnls: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValidationError, ResolutionError, GridError, ValueError) as exc:
        print(f"fracnls: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"fracnls: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
    except ValidationError as exc:
        print(f"fracnls: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"fracnls: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"fracnls: bad config file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
