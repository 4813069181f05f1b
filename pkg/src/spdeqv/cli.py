"""Command-line interface.

Subcommands: ``simulate``, ``qv``, ``estimate``, ``mc``, ``constants``, ``rates``.
Settings come from flags, then from the ``--config`` file (JSON or YAML, keys
either at top level or under a section named after the subcommand), then
from built-in defaults. Exit status is 0 on success, 2 on invalid input and
1 on runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import estimators as est
from . import fisher, mc
from .fieldio import read_field, sha256_file, write_field, write_manifest
from .model import GridSpec, ParameterError, Params, validate_params
from .series import B_constant_bounds, C_of_h_detail, psi
from .simulate import SimConfig, simulate
from .stats import QV_KINDS, realized_qv

logger = logging.getLogger("spdeqv")


class UsageError(Exception):
    """Invalid user input; maps to exit status 2."""


DEFAULTS = {
    "simulate": {"N": 625, "M": 25, "T": 1.0, "b": 0.0, "sigma2": 0.1, "theta2": 0.5, "theta1": -0.4,
                 "theta0": 0.3, "K": None, "seed": 0, "scheme": "spectral", "max_points": 4096,
                 "output": "field.bin"},
    "qv": {"kappa": 0.0, "sigma2": None, "theta2": None, "output": None},
    "estimate": {"known": "", "box": None, "ridge": None, "v": None, "w": None, "starts": 5,
                 "output": None},
    "mc": {"N": [625], "M": [10, 25], "T": 1.0, "b": 0.1, "sigma2": 0.1, "theta2": 0.5, "theta1": -0.4,
           "theta0": 0.3, "K": 5000, "reps": 200, "seed": 0, "scheme": "spectral",
           "methods": ["sigma2-t", "sigma2-double", "theta2-r"], "ridge": None,
           "output": "records.csv", "summary": None},
    "constants": {"B": False, "h": None, "psi_r": None, "psi_theta2": 0.5, "n_terms": 100000},
    "rates": {"M": [8, 16, 32], "N": [64, 256, 1024], "sigma2": 0.1, "rho2": 0.2, "format": "md"},
}


# ----------------------------------------------------------------------------- parsing helpers


def _float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    return v


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {s!r}") from None


def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {s!r}") from None


def parse_known(s: str) -> dict:
    """``"sigma2=0.1,theta2=0.5,kappa=-0.8"`` -> dict of floats."""
    out = {}
    for part in (s or "").split(","):
        if not part.strip():
            continue
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in ("sigma2", "theta2", "kappa"):
            raise UsageError(f"bad --known entry {part!r} (expected sigma2=, theta2= or kappa=)")
        try:
            out[key] = float(val)
        except ValueError:
            raise UsageError(f"bad number in --known entry {part!r}") from None
    return out


def parse_box(s) -> est.BoxH:
    """``"lo..hi,lo..hi,lo..hi"`` for ``(sigma2, theta2, kappa)``."""
    if isinstance(s, (list, tuple)):
        parts = [f"{a}..{b}" for a, b in s]
    else:
        parts = str(s).split(",")
    if len(parts) != 3:
        raise UsageError("--box needs three lo..hi ranges (sigma2, theta2, kappa)")
    lo, hi = [], []
    for p in parts:
        a, sep, b = p.partition("..")
        try:
            lo.append(float(a))
            hi.append(float(b))
        except ValueError:
            raise UsageError(f"bad --box range {p!r}") from None
        if not sep:
            raise UsageError(f"bad --box range {p!r}")
    try:
        return est.BoxH(tuple(lo), tuple(hi))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping")
    return data


def resolve(cmd: str, ns: argparse.Namespace, config: dict) -> dict:
    """Merge defaults < config (top level, then section) < flags."""
    out = dict(DEFAULTS[cmd])
    section = config.get(cmd, {}) if isinstance(config.get(cmd, {}), dict) else {}
    for src in ({k: v for k, v in config.items() if k in out}, section):
        for k, v in src.items():
            if k not in out:
                raise UsageError(f"unknown config key {k!r} for {cmd}")
            out[k] = v
    for k, v in vars(ns).items():
        if k in out:
            out[k] = v
    return out


def _params(s: dict) -> Params:
    p = Params(float(s["sigma2"]), float(s["theta2"]), float(s["theta1"]), float(s["theta0"]))
    validate_params(p)
    return p


def _emit(obj, output: str | None) -> None:
    text = json.dumps(obj, indent=2, default=_json_default)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


# ----------------------------------------------------------------------------- subcommands


def cmd_simulate(s: dict, threads: int | None) -> int:
    p = _params(s)
    g = GridSpec(int(s["N"]), int(s["M"]), float(s["T"]), float(s["b"]))
    c = SimConfig(K=None if s["K"] is None else int(s["K"]), seed=int(s["seed"]), scheme=s["scheme"],
                  max_points=int(s["max_points"]))
    f = simulate(p, g, c)
    out = write_field(f, s["output"])
    write_manifest(out, {"command": "simulate", **s, "K": f.provenance.get("K", s["K"])}, seed=int(s["seed"]))
    print(str(out))
    return 0


def cmd_qv(s: dict, path: str) -> int:
    f = read_field(path)
    kappa = float(s["kappa"])
    res = {"input": path, "sha256": sha256_file(path), "N": f.grid.N, "M": f.grid.M, "kappa": kappa}
    for kind in QV_KINDS:
        if kind == "Vdouble":
            if s["theta2"] is None:
                res[kind] = None
                continue
            theta2 = float(s["theta2"])
            p = Params(1.0, theta2, kappa * theta2, 0.0)
            res[kind] = realized_qv(f, kind, kappa, p).value
        else:
            res[kind] = realized_qv(f, kind, kappa).value
    _emit(res, s["output"])
    return 0


def cmd_estimate(s: dict, path: str, method: str) -> int:
    f = read_field(path)
    known = parse_known(s["known"]) if isinstance(s["known"], str) else dict(s["known"] or {})
    kind, _, sub = method.partition("-")
    if kind == "sigma2":
        _need(known, ("theta2", "kappa"), method)
        r = est.estimate_sigma2(f, sub, known["theta2"], known["kappa"])
    elif kind == "theta2":
        _need(known, ("sigma2", "kappa"), method)
        r = est.estimate_theta2(f, sub, known["sigma2"], known["kappa"])
    elif method == "rho-kappa":
        r = est.estimate_rho_kappa(f)
    else:
        box = parse_box(s["box"]) if s["box"] is not None else est.BoxH()
        ridge = None if s["ridge"] is None else float(s["ridge"])
        if ridge is not None and ridge < 0:
            raise UsageError("--ridge must be >= 0")
        if method == "eta-ls":
            r = est.estimate_eta_ls(f, box, ridge, starts=int(s["starts"]))
        else:
            r = est.estimate_eta_avg(f, box, ridge, v=s["v"], w=s["w"], starts=int(s["starts"]))
    out = r.to_dict()
    out["input"] = {"path": path, "sha256": sha256_file(path)}
    if method in ("eta-ls", "eta-avg"):
        out["theta1"] = est.theta1_from_eta(r)
    _emit(out, s["output"])
    if s["output"]:
        write_manifest(s["output"], {"command": "estimate", "method": method, **s}, inputs=[path])
    return 0


def _need(known, keys, method):
    miss = [k for k in keys if k not in known]
    if miss:
        raise UsageError(f"{method} needs --known {','.join(k + '=...' for k in miss)}")


def cmd_mc(s: dict, threads: int | None) -> int:
    p = _params(s)
    Ns, Ms = list(s["N"]), list(s["M"])
    if len(Ns) == 1:
        Ns = Ns * len(Ms)
    if len(Ms) == 1:
        Ms = Ms * len(Ns)
    if len(Ns) != len(Ms):
        raise UsageError("--N and --M must have equal lengths (or one of them a single value)")
    grids = tuple(GridSpec(int(n), int(m), float(s["T"]), float(s["b"])) for n, m in zip(Ns, Ms))
    methods = []
    for m in s["methods"]:
        if isinstance(m, dict):
            methods.append(mc.MethodSpec(m["name"], dict(m.get("known", {})), dict(m.get("options", {}))))
        else:
            opts = {"ridge": float(s["ridge"])} if s["ridge"] is not None and m.startswith("eta") else {}
            methods.append(mc.MethodSpec(m, {}, opts))
    c = mc.StudyConfig(p, grids, int(s["reps"]), tuple(methods), K=None if s["K"] is None else int(s["K"]),
                       master_seed=int(s["seed"]), scheme=s["scheme"], threads=threads, output=s["output"])
    records = mc.run_study(c)
    summary = mc.summarize(records, p)
    if s["summary"]:
        mc.write_summary(summary, s["summary"])
    write_manifest(s["output"], {"command": "mc", **s}, seed=int(s["seed"]),
                   outputs=[s["summary"]] if s["summary"] else [])
    for row in summary:
        print(f"grid {row['grid_id']} N={row['N']} M={row['M']} {row['method']}: n={row['n']} "
              f"nmse={_short(row.get('nmse'))} norm_mse={_short(row.get('norm_mse'))}")
    return 0


def _short(v):
    if v is None:
        return "nan"
    return "[" + ", ".join(f"{x:.4g}" for x in v) + "]"


def cmd_constants(s: dict) -> int:
    printed = False
    if s["B"]:
        val, half = B_constant_bounds(int(s["n_terms"]))
        print("name,value,error_bound")
        print(f"B,{val!r},{half!r}")
        printed = True
    if s["h"] is not None:
        print("h,C,lattice_cut,tail_estimate,converged")
        for h in s["h"]:
            d = C_of_h_detail(float(h))
            print(f"{h!r},{d.value!r},{d.lattice_cut},{d.tail_estimate!r},{int(d.converged)}")
        printed = True
    if s["psi_r"] is not None:
        t2 = float(s["psi_theta2"])
        print("r,theta2,psi")
        for r in s["psi_r"]:
            print(f"{r!r},{t2!r},{float(psi(float(r), t2))!r}")
        printed = True
    if not printed:
        raise UsageError("constants: pass --B, --h and/or --psi-r")
    return 0


def cmd_rates(s: dict) -> int:
    rows = []
    for M in s["M"]:
        for N in s["N"]:
            j1, j2 = fisher.spectral_fisher_diag(int(N), int(M), float(s["sigma2"]), float(s["rho2"]))
            rows.append((M, N, fisher.minimax_rate(int(M), int(N)), (M * N) ** -0.5, j1, j2))
    head = ["M", "N", "minimax_rate", "parametric_rate", "J_sigma2", "J_rho2"]
    if s["format"] == "csv":
        print(",".join(head))
        for r in rows:
            print(",".join([str(r[0]), str(r[1])] + [repr(float(x)) for x in r[2:]]))
    else:
        print("| " + " | ".join(head) + " |")
        print("|" + "---|" * len(head))
        for r in rows:
            print(f"| {r[0]} | {r[1]} | " + " | ".join(f"{x:.6g}" for x in r[2:]) + " |")
    return 0


# ----------------------------------------------------------------------------- parser


def _add_params(sp):
    sp.add_argument("--sigma2", type=_float, help="noise level sigma^2 (> 0)")
    sp.add_argument("--theta2", type=_float, help="diffusivity theta_2 (> 0)")
    sp.add_argument("--theta1", type=_float, help="advection theta_1")
    sp.add_argument("--theta0", type=_float, help="reaction theta_0")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    ap = argparse.ArgumentParser(prog="spdeqv", description=__doc__.splitlines()[0],
                                 argument_default=S)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", default=None, help="JSON or YAML settings file (flags take precedence)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")
    ap.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="sample a field on a grid", argument_default=S)
    sp.add_argument("--N", type=int, help="number of time steps (grid has N+1 times)")
    sp.add_argument("--M", type=int, help="number of space steps (grid has M+1 locations)")
    sp.add_argument("--T", type=_float, help="time horizon (time units, default 1)")
    sp.add_argument("--b", type=_float, help="spatial margin in [0, 1/2); locations span [b, 1-b]")
    _add_params(sp)
    sp.add_argument("--K", type=int, help="spectral cutoff (modes; default max(4M, 1000))")
    sp.add_argument("--seed", type=int, help="64-bit master seed")
    sp.add_argument("--scheme", choices=["spectral", "exact"], help="sampler")
    sp.add_argument("--max-points", dest="max_points", type=int, help="size cap (points) for the exact sampler")
    sp.add_argument("-o", "--output", help="output file (.csv for CSV, otherwise binary)")

    sp = sub.add_parser("qv", help="rescaled realized quadratic variations of a field (JSON)",
                        argument_default=S)
    sp.add_argument("-i", "--input", required=True, help="field file")
    sp.add_argument("--kappa", type=_float, help="curvature kappa = theta1/theta2 for the weights")
    sp.add_argument("--theta2", type=_float, help="diffusivity, needed for the Vdouble normalization")
    sp.add_argument("-o", "--output", help="JSON output file (default stdout)")

    sp = sub.add_parser("estimate", help="estimate parameters from a field (JSON)", argument_default=S)
    sp.add_argument("-i", "--input", required=True, help="field file")
    sp.add_argument("--method", required=True, choices=list(mc.METHODS), help="estimator")
    sp.add_argument("--known", help="known parameters, e.g. sigma2=0.1,theta2=0.5,kappa=-0.8")
    sp.add_argument("--box", help="search box lo..hi,lo..hi,lo..hi for (sigma2, theta2, kappa)")
    sp.add_argument("--ridge", type=_float, help="ridge penalty (>= 0) for the least-squares contrast")
    sp.add_argument("--v", type=int, help="time coarsening factor (steps) for eta-avg")
    sp.add_argument("--w", type=int, help="space coarsening factor (steps) for eta-avg")
    sp.add_argument("--starts", type=int, help="optimizer starts (default 5)")
    sp.add_argument("-o", "--output", help="JSON output file (default stdout)")

    sp = sub.add_parser("mc", help="Monte Carlo study (CSV records, JSON summary)", argument_default=S)
    sp.add_argument("--N", type=_int_list, help="time steps per grid, comma-separated")
    sp.add_argument("--M", type=_int_list, help="space steps per grid, comma-separated")
    sp.add_argument("--T", type=_float, help="time horizon (time units)")
    sp.add_argument("--b", type=_float, help="spatial margin in [0, 1/2)")
    _add_params(sp)
    sp.add_argument("--K", type=int, help="spectral cutoff (modes)")
    sp.add_argument("--reps", type=int, help="replications per grid (>= 2)")
    sp.add_argument("--seed", type=int, help="64-bit master seed")
    sp.add_argument("--scheme", choices=["spectral", "exact"], help="sampler")
    sp.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m],
                    help="estimators, comma-separated: " + ",".join(mc.METHODS))
    sp.add_argument("--ridge", type=_float, help="ridge penalty for eta methods")
    sp.add_argument("-o", "--output", help="record CSV path")
    sp.add_argument("--summary", help="JSON summary path")

    sp = sub.add_parser("constants", help="print B, C(h) and psi tables as CSV", argument_default=S)
    sp.add_argument("--B", action="store_true", help="B with its certified error bound")
    sp.add_argument("--h", type=_float_list, help="C(h) at these h (dimensionless), comma-separated")
    sp.add_argument("--psi-r", dest="psi_r", type=_float_list, help="psi at these ratios r, comma-separated")
    sp.add_argument("--psi-theta2", dest="psi_theta2", type=_float, help="theta2 for the psi table")
    sp.add_argument("--n-terms", dest="n_terms", type=int, help="partial-sum length for B")

    sp = sub.add_parser("rates", help="minimax rates and Fisher diagonals over an (M, N) grid",
                        argument_default=S)
    sp.add_argument("--M", type=_int_list, help="space step counts, comma-separated")
    sp.add_argument("--N", type=_int_list, help="time step counts, comma-separated")
    sp.add_argument("--sigma2", type=_float, help="sigma^2 (> 0)")
    sp.add_argument("--rho2", type=_float, help="rho^2 = sigma^2/theta2 (> 0)")
    sp.add_argument("--format", choices=["md", "csv"], help="table format")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(ns.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    cmd = ns.command
    try:
        config = load_config(ns.config)
        local = argparse.Namespace(**{k: v for k, v in vars(ns).items()
                                      if k not in ("config", "threads", "log_level", "command", "input",
                                                   "method")})
        s = resolve(cmd, local, config)
        threads = ns.threads or config.get("threads") or os.cpu_count()
        if cmd == "simulate":
            return cmd_simulate(s, threads)
        if cmd == "qv":
            return cmd_qv(s, ns.input)
        if cmd == "estimate":
            return cmd_estimate(s, ns.input, ns.method)
        if cmd == "mc":
            return cmd_mc(s, threads)
        if cmd == "constants":
            return cmd_constants(s)
        return cmd_rates(s)
    except (UsageError, ParameterError, ValueError, TypeError, KeyError) as exc:
        print(f"spdeqv {cmd}: error: {_one_line(exc)}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"spdeqv {cmd}: runtime error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


if __name__ == "__main__":
    sys.exit(main())
