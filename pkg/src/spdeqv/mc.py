"""Monte Carlo harness: replicated simulation, estimation and normalized-error summaries."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimators as est
from .model import GridSpec, Params, validate_params
from .simulate import ExactSampler, Field, SimConfig, simulate_spectral

logger = logging.getLogger(__name__)

SCHEMA = 1
METHODS = ("sigma2-sp", "sigma2-t", "sigma2-double", "theta2-sp", "theta2-t", "theta2-r",
           "rho-kappa", "eta-ls", "eta-avg")
MAX_DIM = 3


@dataclass(frozen=True)
class MethodSpec:
    """An estimator with its known-parameter assignment.

    ``known`` overrides the true values for the nuisance parameters
    (``sigma2``, ``theta2``, ``kappa``); ``options`` is passed to the
    estimator (``ridge``, ``v``, ``w``, ``box``).
    """

    name: str
    known: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in METHODS:
            raise ValueError(f"unknown method {self.name!r}")


@dataclass(frozen=True)
class StudyConfig:
    params: Params
    grids: tuple[GridSpec, ...]
    reps: int
    methods: tuple[MethodSpec, ...]
    K: int | None = 5000
    master_seed: int = 0
    scheme: str = "spectral"
    threads: int | None = None
    output: str | None = None

    def __post_init__(self):
        validate_params(self.params)
        if self.reps < 2:
            raise ValueError("reps must be >= 2")
        if not self.grids:
            raise ValueError("at least one grid is required")
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.scheme not in ("spectral", "exact"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class StudyRecord:
    grid_id: int
    N: int
    M: int
    K: int | None
    method: str
    rep: int
    seed: int
    estimate: list[float]
    norm_err: list[float]
    wall_ms: float
    converged: bool = True
    error: str = ""


def grid_key(g: GridSpec) -> tuple[int, int, int, int]:
    """Integer identity of a grid: ``(N, M)`` and the IEEE bit patterns of ``T`` and ``b``."""
    bits = np.array([g.T, g.b], dtype="<f8").view("<u8")
    return int(g.N), int(g.M), int(bits[0]), int(bits[1])


def child_seed(master: int, key: tuple[int, ...], rep: int) -> int:
    """64-bit seed derived from ``(master, key, rep)`` only.

    ``key`` is :func:`grid_key` of the grid, so removing or reordering other
    grids of a study leaves a grid's fields unchanged.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=(*map(int, key), int(rep)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def truth(p: Params, method: str) -> np.ndarray:
    if method.startswith("sigma2"):
        return np.array([p.sigma2])
    if method.startswith("theta2"):
        return np.array([p.theta2])
    if method == "rho-kappa":
        return np.array([p.rho2, p.kappa])
    return np.array([p.sigma2, p.theta2, p.kappa])


def true_se(p: Params, g: GridSpec, spec: MethodSpec) -> np.ndarray:
    """Standard deviation of the estimator predicted by its asymptotic law at the true parameters."""
    mn = g.M * g.N
    name = spec.name
    if name == "rho-kappa":
        se = est._rho_kappa_se(p.rho2, p.kappa, g.locations[: g.M], g.N)
        return np.asarray(se, float)
    if name in ("eta-ls", "eta-avg"):
        if name == "eta-ls":
            v = w = 1
        else:
            av, aw = est.auto_vw(g.N, g.M)
            v, w = spec.options.get("v") or av, spec.options.get("w") or aw
        r = w * g.dx / math.sqrt(v * g.dt)
        omega = est.asymptotic_variance("eta-ls", p, r=r, b=g.b)
        return np.sqrt(np.diag(omega) / ((g.M / w) * (g.N / v)))
    return np.array([math.sqrt(est.asymptotic_variance(name, p, r=g.ratio) / mn)])


def apply_method(f: Field, p: Params, spec: MethodSpec) -> est.EstimateResult:
    known = {"sigma2": p.sigma2, "theta2": p.theta2, "kappa": p.kappa, **spec.known}
    kind, _, sub = spec.name.partition("-")
    opts = dict(spec.options)
    if kind == "sigma2":
        return est.estimate_sigma2(f, sub, known["theta2"], known["kappa"])
    if kind == "theta2":
        return est.estimate_theta2(f, sub, known["sigma2"], known["kappa"])
    if spec.name == "rho-kappa":
        return est.estimate_rho_kappa(f)
    box = opts.pop("box", None)
    if box is not None and not isinstance(box, est.BoxH):
        box = est.BoxH(tuple(box[0]), tuple(box[1]))
    box = box or est.BoxH()
    if spec.name == "eta-ls":
        return est.estimate_eta_ls(f, box, ridge=opts.get("ridge"))
    return est.estimate_eta_avg(f, box, ridge=opts.get("ridge"), v=opts.get("v"), w=opts.get("w"))


def run_study(c: StudyConfig) -> list[StudyRecord]:
    """Simulate each ``(grid, rep)`` once and apply every configured estimator to that field.

    Output is sorted by ``(grid_id, rep, method order)`` and does not depend on
    the thread schedule.
    """
    p = c.params
    ses = {(gi, m.name): true_se(p, g, m) for gi, g in enumerate(c.grids) for m in c.methods}
    samplers = {}
    if c.scheme == "exact":
        samplers = {gi: ExactSampler(p, g, max_points=max(4096, g.n_points)) for gi, g in enumerate(c.grids)}

    def one(task):
        gi, rep = task
        g = c.grids[gi]
        seed = child_seed(c.master_seed, grid_key(g), rep)
        if c.scheme == "exact":
            f = samplers[gi].draw(seed)
            K = None
        else:
            f = simulate_spectral(p, g, SimConfig(K=c.K, seed=seed))
            K = f.provenance["K"]
        out = []
        for m in c.methods:
            t0 = time.perf_counter()
            tv = truth(p, m.name)
            try:
                r = apply_method(f, p, m)
                e = np.atleast_1d(np.asarray(r.estimate, float))
                ne = (e - tv) / ses[(gi, m.name)]
                rec = StudyRecord(gi, g.N, g.M, K, m.name, rep, seed, e.tolist(), ne.tolist(), 0.0,
                                  converged=bool(r.converged))
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                nanv = [math.nan] * tv.size
                rec = StudyRecord(gi, g.N, g.M, K, m.name, rep, seed, nanv, nanv, 0.0,
                                  converged=False, error=f"{type(exc).__name__}: {exc}")
            rec.wall_ms = 1e3 * (time.perf_counter() - t0)
            out.append(rec)
        return out

    tasks = [(gi, rep) for gi in range(len(c.grids)) for rep in range(c.reps)]
    threads = c.threads or os.cpu_count() or 1
    if threads == 1:
        chunks = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(one, tasks))
    order = {m.name: i for i, m in enumerate(c.methods)}
    records = [r for ch in chunks for r in ch]
    records.sort(key=lambda r: (r.grid_id, r.rep, order[r.method]))
    if c.output:
        write_records(records, c.output)
    return records


def summarize(records: list[StudyRecord], params: Params | None = None) -> list[dict]:
    """Per ``(grid_id, method)`` moments of estimates and normalized errors.

    With ``params`` the bias and ``nmse = M N * MSE`` are reported against the
    true values; ``norm_mse`` is the mean squared normalized error, which
    compares the observed MSE to the asymptotic prediction. ``z_mean`` and
    ``z_var`` test the normalized errors against mean 0 and variance 1.
    """
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple[int, str], list[StudyRecord]] = {}
    for r in records:
        groups.setdefault((r.grid_id, r.method), []).append(r)
    out = []
    for (gi, method), recs in sorted(groups.items()):
        recs = sorted(recs, key=lambda r: r.rep)
        ok = [r for r in recs if not r.error]
        row = {"schema": SCHEMA, "grid_id": gi, "N": recs[0].N, "M": recs[0].M, "method": method,
               "n": len(ok), "n_failed": len(recs) - len(ok),
               "n_unconverged": sum(1 for r in ok if not r.converged)}
        if ok:
            E = np.array([r.estimate for r in ok], float)
            Z = np.array([r.norm_err for r in ok], float)
            n = E.shape[0]
            row["mean"] = E.mean(axis=0).tolist()
            row["variance"] = (E.var(axis=0, ddof=1) if n > 1 else np.zeros(E.shape[1])).tolist()
            zvar = Z.var(axis=0, ddof=1) if n > 1 else np.full(Z.shape[1], math.nan)
            row["norm_err_mean"] = Z.mean(axis=0).tolist()
            row["norm_err_var"] = zvar.tolist()
            row["norm_mse"] = np.mean(Z * Z, axis=0).tolist()
            row["z_mean"] = (Z.mean(axis=0) * math.sqrt(n)).tolist()
            row["z_var"] = ((zvar - 1.0) / math.sqrt(2.0 / max(n - 1, 1))).tolist()
            if params is not None:
                tv = truth(params, method)
                err = E - tv
                mse = np.mean(err * err, axis=0)
                row["bias"] = err.mean(axis=0).tolist()
                row["mse"] = mse.tolist()
                row["nmse"] = (recs[0].M * recs[0].N * mse).tolist()
        out.append(row)
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def write_records(records: list[StudyRecord], path: str | Path) -> Path:
    """Record CSV preceded by a ``# schema=1`` line."""
    path = Path(path)
    cols = (["grid_id", "N", "M", "K", "method", "rep", "seed"]
            + [f"estimate_{j + 1}" for j in range(MAX_DIM)]
            + [f"norm_err_{j + 1}" for j in range(MAX_DIM)]
            + ["wall_ms", "converged", "error"])
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(cols)
        for r in records:
            pad = [""] * (MAX_DIM - len(r.estimate))
            w.writerow([r.grid_id, r.N, r.M, "" if r.K is None else r.K, r.method, r.rep, r.seed,
                        *[_fmt(v) for v in r.estimate], *pad, *[_fmt(v) for v in r.norm_err], *pad,
                        f"{r.wall_ms:.3f}", int(r.converged), r.error])
    return path


def read_records(path: str | Path) -> list[StudyRecord]:
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.strip() != f"# schema={SCHEMA}":
            raise ValueError(f"{path}: unsupported record schema line {first.strip()!r}")
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        est_v = [float(row[f"estimate_{j + 1}"]) for j in range(MAX_DIM) if row[f"estimate_{j + 1}"] != ""]
        ne = [float(row[f"norm_err_{j + 1}"]) for j in range(MAX_DIM) if row[f"norm_err_{j + 1}"] != ""]
        out.append(StudyRecord(int(row["grid_id"]), int(row["N"]), int(row["M"]),
                               int(row["K"]) if row["K"] else None, row["method"], int(row["rep"]),
                               int(row["seed"]), est_v, ne, float(row["wall_ms"]),
                               bool(int(row["converged"])), row["error"]))
    return out


def write_summary(summary: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps({"schema": SCHEMA, "groups": summary}, indent=2))
    return path
