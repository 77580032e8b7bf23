"""Command-line front end.

Every command writes one output file (stdout by default) in CSV or JSON.
CSV files open with ``#`` comment lines holding the tool version and the
full resolved config; JSON files hold one object with the keys ``config``,
``results`` and ``diagnostics``.

Exit status: 0 success, 1 config error, 2 computation error, 3 a check
ran but failed. Config and computation errors print a single JSON line on
stderr.

Options come from, in increasing precedence: built-in defaults, a
``--config`` file of ``key = value`` lines, the ``RABILAB_SEED``
environment variable (seed only), and command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .feynman_kac import fk_ground_energy, positivity_probe
from .jc import jc_crossing_bisect, jc_crossing_closed_form, jc_energy, jc_envelope
from .params import FockTruncation, ModelParams, ParameterError
from .spectra import (
    DEFAULT_TOL,
    SpectrumTable,
    SweepError,
    check_c1,
    converge_truncation,
    detect_crossings,
    make_grid,
    rabi_spectrum,
    sweep,
)

SEED_ENV = "RABILAB_SEED"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_COMPUTE = 2
EXIT_CHECK_FAILED = 3


class ConfigError(Exception):
    pass


class ComputationError(Exception):
    def __init__(self, message: str, g: float | None = None):
        super().__init__(message)
        self.g = g


# -- option table ----------------------------------------------------------------


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _n_max(text: str):
    if str(text).strip().lower() == "auto":
        return "auto"
    return int(text)


def _pair(text: str) -> list[int]:
    parts = [int(p) for p in str(text).replace(" ", "").split(",")]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated level indices")
    return parts


@dataclass(frozen=True)
class Option:
    type: Callable[[str], Any]
    default: Any
    help: str
    flag: bool = False  # store_true switch on the command line


OPTIONS: dict[str, Option] = {
    "delta": Option(float, None, "atom transition frequency"),
    "omega": Option(float, 1.0, "cavity frequency"),
    "g": Option(float, None, "coupling constant"),
    "g_min": Option(float, 0.0, "lower end of the coupling grid"),
    "g_max": Option(float, 3.0, "upper end of the coupling grid"),
    "g_step": Option(float, 0.02, "coupling grid spacing"),
    "nu_min": Option(int, -6, "lowest JC index"),
    "nu_max": Option(int, 0, "highest JC index"),
    "n_crossings": Option(int, 6, "number of JC crossings g_1, g_2, ..."),
    "k_levels": Option(int, 8, "number of lowest levels"),
    "n_max": Option(_n_max, "auto", "Fock cutoff, or 'auto' for convergence doubling"),
    "tol": Option(float, DEFAULT_TOL, "truncation convergence tolerance"),
    "gap_floor": Option(float, None, "C1 gap floor (default 1e-6 * omega)"),
    "levels": Option(_pair, [2, 3], "adjacent global level pair, e.g. 2,3"),
    "expect": Option(int, None, "expected crossing count; mismatch exits with status 3"),
    "t": Option(float, None, "imaginary time horizon"),
    "dt_ratio": Option(float, None, "extra horizon for the energy ratio (default 1/omega)"),
    "n_samples": Option(int, 10**6, "Monte Carlo paths"),
    "seed": Option(int, 0, f"master seed (env {SEED_ENV})"),
    "n_bins": Option(int, 4, "position bins of the positivity probe"),
    "workers": Option(int, None, "worker threads (results do not depend on it)"),
    "reference": Option(_bool, False, "also report the diagonalization ground energy", flag=True),
    "zero_point": Option(_bool, False, "add omega/2 to every energy", flag=True),
    "quick": Option(_bool, False, "tenfold smaller Monte Carlo sizes", flag=True),
}

_GRID = ["g_min", "g_max", "g_step"]
COMMANDS: dict[str, tuple[str, list[str]]] = {
    "jc-spectrum": ("JC energies E_nu(g) with the ground envelope marked", ["delta", "omega", *_GRID, "nu_min", "nu_max"]),
    "jc-crossings": ("JC crossing couplings g_1, g_2, ...", ["delta", "omega", "n_crossings"]),
    "rabi-sweep": (
        "lowest Rabi levels with parity over a coupling grid",
        ["delta", "omega", *_GRID, "k_levels", "n_max", "tol", "workers", "zero_point"],
    ),
    "check-c1": ("ground-state gap and ground parity over a coupling grid", ["delta", "omega", *_GRID, "gap_floor", "tol", "workers"]),
    "count-crossings": (
        "true crossings between two adjacent global levels",
        ["delta", "omega", *_GRID, "levels", "k_levels", "n_max", "tol", "workers", "expect"],
    ),
    "fk-energy": (
        "Feynman-Kac ground energy estimate",
        ["delta", "omega", "g", "t", "dt_ratio", "n_samples", "seed", "workers", "reference", "zero_point"],
    ),
    "fk-positivity": ("cell-to-cell matrix elements of exp(-tH)", ["delta", "omega", "g", "t", "n_bins", "n_samples", "seed", "workers"]),
    "validate": ("oracle and sampler gating suite", ["quick"]),
}

REQUIRED: dict[str, list[str]] = {
    "jc-spectrum": ["delta"],
    "jc-crossings": ["delta"],
    "rabi-sweep": ["delta"],
    "check-c1": ["delta"],
    "count-crossings": ["delta"],
    "fk-energy": ["delta", "g"],
    "fk-positivity": ["delta", "g", "t"],
    "validate": [],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rabilab", description="Rabi / Jaynes-Cummings spectra and Feynman-Kac estimates.")
    parser.add_argument("--version", action="version", version=f"rabilab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (help_text, keys) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        for key in keys:
            opt = OPTIONS[key]
            flag = "--" + key.replace("_", "-")
            extra = f" (default {opt.default})" if opt.default is not None and not opt.flag else ""
            if opt.flag:
                p.add_argument(flag, dest=key, action="store_true", default=argparse.SUPPRESS, help=opt.help)
            else:
                p.add_argument(flag, dest=key, type=opt.type, default=argparse.SUPPRESS, help=opt.help + extra)
        p.add_argument("--config", dest="config_file", default=None, help="key = value file; flags take precedence")
        p.add_argument("-o", "--output", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None, help="output format (default csv)")
    return parser


def read_config_file(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_config(argv: list[str] | None, environ=None) -> dict[str, Any]:
    """Merge defaults, config file, environment and flags into one dict."""
    environ = os.environ if environ is None else environ
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    keys = COMMANDS[command][1]
    cfg: dict[str, Any] = {k: OPTIONS[k].default for k in keys}
    file_path = ns.pop("config_file")
    output = ns.pop("output")
    fmt = ns.pop("format")
    if file_path is not None:
        for key, text in read_config_file(file_path).items():
            if key == "output":
                output = output if output is not None else text
                continue
            if key == "format":
                fmt = fmt if fmt is not None else text
                continue
            if key not in keys:
                raise ConfigError(f"config key {key!r} does not apply to {command}")
            try:
                cfg[key] = OPTIONS[key].type(text)
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    if "seed" in keys and SEED_ENV in environ:
        try:
            cfg["seed"] = int(environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    cfg.update(ns)
    fmt = fmt or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    cfg["command"] = command
    cfg["format"] = fmt
    cfg["output"] = output
    _validate(cfg)
    return cfg


# -- validation --------------------------------------------------------------------


def _params(cfg: dict[str, Any]) -> ModelParams:
    return ModelParams(cfg["delta"], cfg["omega"], cfg.get("g") or 0.0)


def _positive(cfg, *keys):
    for key in keys:
        value = cfg.get(key)
        if value is not None and not value > 0:
            raise ConfigError(f"{key} must be > 0, got {value!r}")


def _validate(cfg: dict[str, Any]) -> None:
    """Command-specific checks that run before any computation."""
    command = cfg["command"]
    missing = [k for k in REQUIRED[command] if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"{command} requires " + ", ".join("--" + k.replace("_", "-") for k in missing))
    try:
        if command == "validate":
            return
        params = _params(cfg)
        if "g_step" in cfg:
            make_grid(cfg["g_min"], cfg["g_max"], cfg["g_step"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    _positive(cfg, "tol", "t", "dt_ratio", "n_samples", "n_bins", "n_crossings", "gap_floor", "workers")
    if cfg.get("seed") is not None and cfg["seed"] < 0:
        raise ConfigError("seed must be >= 0")
    if command == "jc-spectrum" and cfg["nu_min"] > cfg["nu_max"]:
        raise ConfigError("nu_min must not exceed nu_max")
    if command == "jc-crossings" and params.detuning < 0:
        raise ConfigError("JC crossings need 2*delta >= omega")
    if command == "check-c1" and params.delta <= 0:
        raise ConfigError("check-c1 needs delta > 0")
    if command == "count-crossings":
        i, j = cfg["levels"]
        if i < 0 or j != i + 1:
            raise ConfigError("levels must be two adjacent indices i,i+1")
        cfg["k_levels"] = max(cfg["k_levels"], j + 2)
    if "k_levels" in cfg:
        k = cfg["k_levels"]
        if k < 2:
            raise ConfigError("k_levels must be >= 2")
        n_max = cfg.get("n_max", "auto")
        if n_max != "auto" and (n_max < 1 or k > n_max / 2):
            raise ConfigError(f"k_levels={k} needs n_max >= {2 * k}")


# -- output --------------------------------------------------------------------------


@dataclass
class RunOutput:
    """Everything a command emits; equal after a JSON round trip."""

    config: dict[str, Any]
    results: dict[str, Any]
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return int(self.diagnostics.get("exit_code", EXIT_OK))

    def to_json(self) -> str:
        return json.dumps(
            {"config": self.config, "results": self.results, "diagnostics": self.diagnostics},
            indent=2,
            sort_keys=True,
            allow_nan=False,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunOutput:
        obj = json.loads(text)
        return cls(obj["config"], obj["results"], obj["diagnostics"])

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        buf.write(f"# rabilab {__version__}\n")
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        summary = {k: v for k, v in self.results.items() if k not in ("columns", "rows", "envelope")}
        if summary:
            buf.write("# summary: " + json.dumps(summary, sort_keys=True) + "\n")
        if self.diagnostics:
            buf.write("# diagnostics: " + json.dumps(self.diagnostics, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.results["columns"])
        for row in self.results["rows"]:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _plain(value):
    """Convert numpy scalars and containers to JSON-native Python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return None
        return v
    return value


# -- commands ------------------------------------------------------------------------


def _grid(cfg) -> np.ndarray:
    return make_grid(cfg["g_min"], cfg["g_max"], cfg["g_step"])


def _table(cfg, params: ModelParams, k: int) -> SpectrumTable:
    grid = _grid(cfg)
    if cfg["n_max"] == "auto":
        return sweep(params, grid, k, cfg["tol"], cfg.get("workers"))
    rows = []
    for g in grid:
        try:
            rows.append(rabi_spectrum(params.with_g(g), FockTruncation(cfg["n_max"]), k, cfg["tol"]))
        except Exception as exc:
            raise SweepError(float(g), exc) from exc
    return SpectrumTable(grid, tuple(rows), params, cfg["tol"])


def cmd_jc_spectrum(cfg, params):
    rows, envelope = [], []
    for g in _grid(cfg):
        p = params.with_g(g)
        e_g, nu_g = jc_envelope(p)
        envelope.append([g, nu_g, e_g])
        for nu in range(cfg["nu_max"], cfg["nu_min"] - 1, -1):
            rows.append([g, nu, jc_energy(p, nu), nu == nu_g])
    return {"columns": ["g", "nu", "energy", "is_envelope"], "rows": rows, "envelope": envelope}, {}


def cmd_jc_crossings(cfg, params):
    rows = []
    worst = 0.0
    for n in range(cfg["n_crossings"]):
        closed = jc_crossing_closed_form(params, n)
        bisected = jc_crossing_bisect(params, n)
        rel = abs(closed - bisected) / closed
        worst = max(worst, rel)
        rows.append([n + 1, -n, -(n + 1), closed, bisected, rel])
    cols = ["crossing", "nu_a", "nu_b", "g_closed_form", "g_bisection", "rel_diff"]
    return {"columns": cols, "rows": rows}, {"max_rel_diff": worst}


def cmd_rabi_sweep(cfg, params):
    table = _table(cfg, params, cfg["k_levels"])
    shift = params.zero_point_energy if cfg["zero_point"] else 0.0
    rows = [
        [float(g), s, lv.energy + shift, int(lv.sector)]
        for g, row in zip(table.g_grid, table.rows)
        for s, lv in enumerate(row.levels)
    ]
    diag = {
        "n_max_used": sorted({r.n_max_used for r in table.rows}),
        "max_truncation_error": max(r.truncation_error_estimate for r in table.rows),
    }
    return {"columns": ["g", "level_index", "energy", "parity"], "rows": rows}, diag


def cmd_check_c1(cfg, params):
    step = cfg["g_step"]
    rep = check_c1(params, (cfg["g_min"], cfg["g_max"]), step, cfg["gap_floor"], cfg["tol"])
    rows = [[float(g), float(gap), int(s)] for g, gap, s in zip(rep.g_grid, rep.gaps, rep.ground_sectors)]
    floor = cfg["gap_floor"] if cfg["gap_floor"] is not None else 1e-6 * params.omega
    res = {
        "columns": ["g", "gap", "ground_parity"],
        "rows": rows,
        "min_gap": rep.min_gap,
        "argmin_g": rep.argmin_g,
        "gap_floor": floor,
        "gap_above_floor": rep.passed,
        "ground_sector_constant": rep.ground_sector_constant,
        "passed": rep.passed and rep.ground_sector_constant,
    }
    return res, {}


def cmd_count_crossings(cfg, params):
    i, j = cfg["levels"]
    table = _table(cfg, params, cfg["k_levels"])
    recs = detect_crossings(table, (i, j))
    rows = [[r.g_star, i, j, int(r.sectors[0]), int(r.sectors[1]), r.gap_at_star] for r in recs]
    res = {
        "columns": ["g_star", "level_a", "level_b", "parity_a", "parity_b", "gap_at_star"],
        "rows": rows,
        "count": len(recs),
    }
    if cfg["expect"] is not None:
        res["passed"] = len(recs) == cfg["expect"]
    return res, {}


def cmd_fk_energy(cfg, params):
    est = fk_ground_energy(params, cfg["t"], cfg["dt_ratio"], cfg["n_samples"], cfg["seed"], cfg.get("workers"))
    shift = params.zero_point_energy if cfg["zero_point"] else 0.0
    cols = ["energy", "stderr", "n_samples", "seed", "t", "dt_ratio", "log_ratio"]
    row = [est.energy + shift, est.stderr, est.n_samples, est.seed, est.t, est.dt_ratio, est.log_ratio]
    diag = {}
    if cfg["reference"]:
        ref = converge_truncation(params, 2).ground.energy + shift
        diag = {"reference_energy": ref, "z": (est.energy + shift - ref) / est.stderr if est.stderr > 0 else None}
    return {"columns": cols, "rows": [row]}, diag


def cmd_fk_positivity(cfg, params):
    probe = positivity_probe(params, cfg["t"], cfg["n_bins"], cfg["n_samples"], cfg["seed"], workers=cfg.get("workers"))
    rows = []
    for a, (ba, sa) in enumerate(probe.cells):
        for b, (bb, sb) in enumerate(probe.cells):
            rows.append([ba, sa, bb, sb, probe.mean[a, b], probe.stderr[a, b], probe.hits[a, b]])
    res = {
        "columns": ["a_bin", "a_spin", "b_bin", "b_spin", "mean", "stderr", "hits"],
        "rows": rows,
        "edges": probe.edges,
        "undersampled": [list(c) for c in probe.undersampled],
        "passed": probe.passed,
    }
    return res, {}


def cmd_validate(cfg, params):
    from .validation import gating_suite

    checks = gating_suite(quick=cfg["quick"])
    for chk in checks:
        print(chk.line(), flush=True)
    rows = [[c.name, c.passed, c.detail] for c in checks]
    return {"columns": ["check", "passed", "detail"], "rows": rows, "passed": all(c.passed for c in checks)}, {}


HANDLERS = {
    "jc-spectrum": cmd_jc_spectrum,
    "jc-crossings": cmd_jc_crossings,
    "rabi-sweep": cmd_rabi_sweep,
    "check-c1": cmd_check_c1,
    "count-crossings": cmd_count_crossings,
    "fk-energy": cmd_fk_energy,
    "fk-positivity": cmd_fk_positivity,
    "validate": cmd_validate,
}


def run(cfg: dict[str, Any]) -> RunOutput:
    """Execute a resolved config; raises :class:`ComputationError` on failure."""
    command = cfg["command"]
    params = None if command == "validate" else _params(cfg)
    try:
        results, diag = HANDLERS[command](cfg, params)
    except SweepError as exc:
        raise ComputationError(str(exc.cause), exc.g) from exc
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        raise ComputationError(str(exc), params.g if params and "g" in cfg else None) from exc
    diag = dict(diag)
    diag["exit_code"] = EXIT_CHECK_FAILED if results.get("passed") is False else EXIT_OK
    config = {k: v for k, v in cfg.items() if k != "output"}
    config["version"] = __version__
    return RunOutput(_plain(config), _plain(results), _plain(diag))


def _emit_error(kind: str, message: str, **extra) -> None:
    payload = {"error": kind, "message": message, **{k: v for k, v in extra.items() if v is not None}}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = resolve_config(argv)
    except ConfigError as exc:
        _emit_error("config", str(exc))
        return EXIT_CONFIG
    try:
        out = run(cfg)
    except ComputationError as exc:
        _emit_error("computation", str(exc), command=cfg["command"], g=exc.g)
        return EXIT_COMPUTE
    text = out.to_json() if cfg["format"] == "json" else out.to_csv()
    path = cfg["output"]
    if path is None:
        if cfg["command"] != "validate":
            sys.stdout.write(text)
    else:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            _emit_error("io", f"cannot write {path!r}: {exc.strerror}", command=cfg["command"])
            return EXIT_COMPUTE
    return out.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
