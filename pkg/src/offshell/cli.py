"""Command-line mesh sweeps.

Subcommands ``field-map``, ``roots-map``, ``zero-mode``, ``self-force`` and
``maxwell-map`` read an INI file with sections [source], [mesh], [numerics]
and [output] and write UTF-8 CSV files (a ``#`` block echoing the effective
configuration, a header row, ``%.17g`` numbers) plus ``run_manifest.json``,
which is written last and only when every CSV is complete.

Maxwell-side columns use the charge e = q / (4 pi) in the Gaussian-style
H_phi formula, which is the Heaviside-Lorentz field of a charge q.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 I/O error.
Verbosity comes from the OFFSHELL_LOG environment variable (a logging level name).
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import math
import os
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .core import FiveVector, Hyperbolic, Signature, Static, Uniform, Worldline
from .errors import OffshellError
from .maxwell import hphi_hyperbolic
from .quad import Tolerance
from .regfp import RegParams
from .roots import MeshSpec, find_roots
from .solver import SolverParams, field_tensor, potential, self_force, zero_mode

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("field-map", "roots-map", "zero-mode", "self-force", "maxwell-map")
MANIFEST = "run_manifest.json"

log = logging.getLogger("offshell")

DEFAULTS = {
    "source": {"kind": "hyperbolic", "g": "1.0", "z0": "0.0", "t0": "0.0", "v": "0.0",
               "x0": "0, 0, 0, 0", "q": "1.0", "sig": "41"},
    "mesh": {"x_range": "-3, 3, 50", "t_range": "-3, 3, 50", "rho_values": "1.0",
             "tau_values": "-0.5"},
    "numerics": {"h": "0.1", "tol_rel": "1e-9", "tol_abs": "1e-12", "shock_guard": "1e-6",
                 "tau_window": "auto", "zero_mode_tol_rel": "1e-5", "zero_mode_step": "1e-2",
                 "delta": "0.05", "endpoint_term": "true"},
    "output": {"prefix": ""},
}

COLUMNS = {
    "field-map": ["x", "t", "a_t", "a_x", "a_tau", "f_xt", "f_xrho", "f_xtau", "f_ttau", "f_trho",
                  "f_rhotau", "n_roots", "flags"],
    "roots-map": ["x", "t", "n_roots", "tau_root_max"],
    "zero-mode": ["x", "t", "rho", "F_xrho_zeromode", "H_phi_maxwell", "rel_diff", "truncated_flag"],
    "self-force": ["tau", "Gamma_t", "Gamma_x", "delta_used", "flags"],
    "maxwell-map": ["x", "t", "rho", "H_phi", "region"],
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def _floats(text: str, key: str) -> list:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _float(text: str, key: str) -> float:
    vals = _floats(text, key)
    if len(vals) != 1:
        raise ConfigError(f"{key}: expected one number, got {text!r}")
    return vals[0]


def _range(text: str, key: str) -> tuple:
    vals = _floats(text, key)
    if len(vals) != 3 or vals[2] != int(vals[2]):
        raise ConfigError(f"{key}: expected 'lo, hi, n', got {text!r}")
    return (vals[0], vals[1], int(vals[2]))


@dataclass(frozen=True)
class RunConfig:
    command: str
    worldline: Worldline
    sig: Signature
    mesh: MeshSpec
    params: SolverParams
    tau_window: Optional[tuple]
    zero_mode_tol: Tolerance
    zero_mode_step: float
    delta: float
    prefix: str
    echo: tuple  # ((section, key, value), ...) of the effective configuration


def load_config(command: str, path: Optional[str], sig_override: Optional[str] = None) -> RunConfig:
    """Parse an INI file (or none, for all defaults) into a RunConfig; raises ConfigError."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_dict(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
                user.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        for sec in user.sections():
            if sec not in DEFAULTS:
                raise ConfigError(f"unknown section [{sec}]")
            for key, val in user[sec].items():
                if key not in DEFAULTS[sec]:
                    raise ConfigError(f"unknown key {sec}.{key}")
                cp[sec][key] = val
    if sig_override is not None:
        cp["source"]["sig"] = str(sig_override)

    src, mesh_s, num, out = cp["source"], cp["mesh"], cp["numerics"], cp["output"]
    try:
        sig = Signature.from_code(src["sig"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    kind = src["kind"].strip().lower()
    x0 = _floats(src["x0"], "source.x0")
    if len(x0) != 4:
        raise ConfigError("source.x0 needs four numbers")
    try:
        if kind == "hyperbolic":
            w = Hyperbolic(_float(src["g"], "source.g"), _float(src["z0"], "source.z0"),
                           _float(src["t0"], "source.t0"))
        elif kind == "uniform":
            v = _float(src["v"], "source.v")
            if not abs(v) < 1:
                raise ConfigError("source.v must satisfy |v| < 1")
            w = Uniform.boosted(v, tuple(x0))
        elif kind == "static":
            w = Static(tuple(x0))
        else:
            raise ConfigError(f"source.kind must be hyperbolic, uniform or static, not {kind!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if command in ("zero-mode", "maxwell-map") and not isinstance(w, Hyperbolic):
        raise ConfigError(f"{command} compares against the accelerated-charge field; use kind = hyperbolic")

    try:
        mesh = MeshSpec(_range(mesh_s["x_range"], "mesh.x_range"), _range(mesh_s["t_range"], "mesh.t_range"),
                        tuple(_floats(mesh_s["rho_values"], "mesh.rho_values")),
                        tuple(_floats(mesh_s["tau_values"], "mesh.tau_values")))
        reg = RegParams(h=_float(num["h"], "numerics.h"),
                        shock_guard=_float(num["shock_guard"], "numerics.shock_guard"),
                        tol=Tolerance(_float(num["tol_rel"], "numerics.tol_rel"),
                                      _float(num["tol_abs"], "numerics.tol_abs")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    endpoint = num["endpoint_term"].strip().lower()
    if endpoint not in ("true", "false"):
        raise ConfigError("numerics.endpoint_term must be true or false")
    params = SolverParams(q=_float(src["q"], "source.q"), reg=reg, endpoint_term=endpoint == "true")

    tw = num["tau_window"].strip().lower()
    if tw == "auto":
        tau_window = None
    else:
        vals = _floats(tw, "numerics.tau_window")
        if len(vals) != 2 or not vals[1] > vals[0]:
            raise ConfigError("numerics.tau_window must be 'auto' or 'lo, hi' with hi > lo")
        tau_window = tuple(vals)

    step = _float(num["zero_mode_step"], "numerics.zero_mode_step")
    delta = _float(num["delta"], "numerics.delta")
    if not (step > 0 and delta > 0):
        raise ConfigError("numerics.zero_mode_step and numerics.delta must be > 0")
    echo = tuple((s, k, cp[s][k]) for s in DEFAULTS for k in DEFAULTS[s])
    return RunConfig(command, w, sig, mesh, params, tau_window,
                     Tolerance(_float(num["zero_mode_tol_rel"], "numerics.zero_mode_tol_rel"), 1e-12, 200),
                     step, delta, out["prefix"].strip() or command.replace("-", "_"), echo)


# ---------------------------------------------------------------------------
# per-point evaluation (runs in worker processes)


def _flag_names(flags) -> list:
    return sorted(f.value for f in flags)


def _eval_field(cfg: RunConfig, pt):
    x, t, rho, tau = pt
    obs = FiveVector.axisymmetric(t, x, rho, tau)
    pv, rp = potential(obs, cfg.worldline, cfg.sig, cfg.params)
    ft, rf = field_tensor(obs, cfg.worldline, cfg.sig, cfg.params)
    flags = _flag_names(rp.flags | rf.flags)
    return [x, t, pv.a_t, pv.a_x, pv.a_tau, *ft.as_array(), rf.n_roots, ";".join(flags)], flags


def _eval_roots(cfg: RunConfig, pt):
    x, t, rho, tau = pt
    roots = find_roots(FiveVector.axisymmetric(t, x, rho, tau), cfg.worldline, cfg.sig, cfg.params.roots)
    top = max((r.tau_root for r in roots), default=math.nan)
    return [x, t, len(roots), top], []


def _maxwell_e(cfg: RunConfig) -> float:
    return cfg.params.q / (4 * math.pi)


def _eval_zero_mode(cfg: RunConfig, pt):
    x, t, rho = pt
    w = cfg.worldline
    r = zero_mode((t, x, rho, 0.0), w, cfg.sig, cfg.tau_window, cfg.params, cfg.zero_mode_step,
                  cfg.zero_mode_tol)
    H = hphi_hyperbolic(t, x, rho, _maxwell_e(cfg), w.g).H_phi
    F = r.F.f_xrho
    rel = abs(F - H) / abs(H) if H != 0 else math.nan
    flags = _flag_names(r.report.flags)
    return [x, t, rho, F, H, rel, int("Truncated" in flags)], flags


def _eval_self_force(cfg: RunConfig, pt):
    (tau,) = pt
    r = self_force(cfg.worldline, tau, cfg.sig, cfg.params.q, cfg.delta)
    flags = _flag_names(r.flags)
    return [tau, r.value[0], r.value[1], r.delta, ";".join(flags)], flags


def _eval_maxwell(cfg: RunConfig, pt):
    x, t, rho = pt
    m = hphi_hyperbolic(t, x, rho, _maxwell_e(cfg), cfg.worldline.g)
    return [x, t, rho, m.H_phi, m.region.value], []


_EVALUATORS = {"field-map": _eval_field, "roots-map": _eval_roots, "zero-mode": _eval_zero_mode,
               "self-force": _eval_self_force, "maxwell-map": _eval_maxwell}


def _evaluate(cfg: RunConfig, pt):
    """Stateless worker entry: ('ok', row, flags) or ('error', message)."""
    try:
        row, flags = _EVALUATORS[cfg.command](cfg, pt)
        return ("ok", row, flags)
    except (OffshellError, ArithmeticError) as exc:
        return ("error", f"{type(exc).__name__}: {exc}")


# ---------------------------------------------------------------------------
# work plan and output


def plan_files(cfg: RunConfig) -> list:
    """[(file name, [points])] in output order."""
    m = cfg.mesh
    grid = [(float(x), float(t)) for t in m.ts for x in m.xs]
    if cfg.command in ("field-map", "roots-map"):
        return [(f"{cfg.prefix}_rho{rho:g}_tau{tau:g}.csv", [(x, t, rho, tau) for x, t in grid])
                for rho in m.rho_values for tau in m.tau_values]
    if cfg.command == "maxwell-map":
        return [(f"{cfg.prefix}_rho{rho:g}.csv", [(x, t, rho) for x, t in grid]) for rho in m.rho_values]
    if cfg.command == "zero-mode":
        return [(f"{cfg.prefix}.csv", [(x, t, rho) for rho in m.rho_values for x, t in grid])]
    return [(f"{cfg.prefix}.csv", [(tau,) for tau in m.tau_values])]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % (v + 0.0)  # folds -0.0 into 0


def render_csv(cfg: RunConfig, rows: list) -> str:
    lines = [f"# offshell {__version__} {cfg.command}"]
    lines += [f"# {s}.{k} = {v}" for s, k, v in cfg.echo]
    lines.append(",".join(COLUMNS[cfg.command]))
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _map(cfg: RunConfig, points: list, workers: int):
    fn = partial(_evaluate, cfg)
    if workers <= 1 or len(points) <= 1:
        return map(fn, points)
    pool = ProcessPoolExecutor(max_workers=workers)
    try:
        return list(pool.map(fn, points, chunksize=1))
    finally:
        pool.shutdown()


def run(cfg: RunConfig, out_dir: Path, workers: int = 1) -> int:
    t_start = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / MANIFEST).unlink(missing_ok=True)
    except OSError as exc:
        log.error("cannot prepare output directory %s: %s", out_dir, exc)
        return EXIT_IO

    flag_counts: Counter = Counter()
    digests = {}
    n_points = 0
    for name, points in plan_files(cfg):
        rows = []
        for pt, res in zip(points, _map(cfg, points, workers)):
            if res[0] == "error":
                log.error("numerical failure at point %s: %s", pt, res[1])
                return EXIT_NUMERIC
            rows.append(res[1])
            flag_counts.update(res[2])
        n_points += len(points)
        data = render_csv(cfg, rows).encode("utf-8")
        try:
            (out_dir / name).write_bytes(data)
        except OSError as exc:
            log.error("cannot write %s: %s", out_dir / name, exc)
            return EXIT_IO
        digests[name] = hashlib.sha256(data).hexdigest()
        log.info("wrote %s (%d rows)", name, len(rows))

    manifest = {
        "tool": "offshell",
        "version": __version__,
        "command": cfg.command,
        "config": {s: {k: v for s2, k, v in cfg.echo if s2 == s} for s in DEFAULTS},
        "points": n_points,
        "flag_counts": dict(sorted(flag_counts.items())),
        "wall_time_s": time.perf_counter() - t_start,
        "outputs": {"sha256": digests},
    }
    tmp = out_dir / (MANIFEST + ".tmp")
    try:
        tmp.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, out_dir / MANIFEST)
    except OSError as exc:
        log.error("cannot write manifest: %s", exc)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offshell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", metavar="PATH", help="INI configuration file")
        s.add_argument("--out", metavar="DIR", default=".", help="output directory")
        s.add_argument("--workers", type=int, default=1, metavar="N", help="worker processes (0 = auto)")
        s.add_argument("--sig", choices=("41", "32"), help="metric signature, overrides [source] sig")
    return p


def main(argv: Optional[list] = None) -> int:
    level = os.environ.get("OFFSHELL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.workers < 0:
        log.error("--workers must be >= 0")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.command, args.config, args.sig)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    workers = args.workers or (os.cpu_count() or 1)
    return run(cfg, Path(args.out), workers)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
