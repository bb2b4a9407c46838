"""Seeded Monte-Carlo studies: CLT scatter, convergence-rate sweep, and the
analytic error-ratio curves.

Every trial derives its own counter-based RNG substream from
(master_seed, trial identity), so results are byte-identical no matter how
many workers run them or in which order they finish. Studies never abort on
a failed trial; failures are recorded and reported in the summary, and the
summary itself is a pure fold over the trial records (recomputable from the
persisted records alone).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .align import latent_eigenpairs, procrustes
from .embedding import ase, embed_matrix
from .errors import ConfigError, OosAseError
from .model import (
    LatentDistribution,
    LatentMatrix,
    sample_adjacency,
    sample_latents,
    sample_oos_edges,
)
from .oos import lls_oos, ml_oos
from .theory import ClassifySpec, chi2_quantile, error_ratio_curve, sigma_clt

STUDIES = ("clt_ls", "clt_ml", "rate_sweep", "error_ratio")


@dataclass
class ExperimentConfig:
    study: str
    dist: LatentDistribution | None = None
    spec: ClassifySpec | None = None
    n_grid: tuple[int, ...] = ()
    trials: int = 1
    d: int | None = None
    epsilon: float = 0.05
    master_seed: int = 0
    workers: int = 1
    wbar: np.ndarray | None = None  # None: draw w-bar from F each trial
    m_grid: tuple[int, ...] = ()
    noiseless: bool = False

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study {self.study!r}")
        self.n_grid = tuple(int(n) for n in self.n_grid)
        if any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid entries must be >= 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.study == "error_ratio":
            if self.spec is None:
                raise ConfigError("error_ratio study needs a ClassifySpec")
            if not self.n_grid:
                raise ConfigError("error_ratio study needs n_grid")
            self.m_grid = tuple(int(m) for m in self.m_grid) or tuple(
                range(1, 101)
            ) + tuple(int(v) for v in np.unique(np.logspace(2.1, 4, 40).astype(int)))
        else:
            if self.dist is None:
                raise ConfigError(f"{self.study} study needs a LatentDistribution")
            if self.d is None:
                self.d = self.dist.dimension
            if self.study in ("clt_ls", "clt_ml") and len(self.n_grid) != 1:
                raise ConfigError("CLT studies use a single n")
            if self.study == "rate_sweep" and len(self.n_grid) < 4:
                raise ConfigError("rate sweep needs at least 4 grid points")
            if self.wbar is not None:
                self.wbar = np.asarray(self.wbar, dtype=float).ravel()


@dataclass
class TrialRecord:
    trial: int
    n: int
    method: str
    status: str  # "ok" or the error class name
    wbar: np.ndarray | None = None
    w: np.ndarray | None = None  # raw estimate, embedding frame
    rotation: np.ndarray | None = None  # d x d, estimate frame -> truth frame
    aligned_error: float | None = None
    message: str = ""
    wall_time: float = field(default=0.0, compare=False)  # in-memory only


@dataclass
class StudyResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    summary: dict
    plotdata: dict[str, tuple[list[str], list[list]]]  # name -> (header, rows)


def _substream(master_seed, *key):
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def _map_trials(fn, keys, workers):
    if workers <= 1:
        return [fn(k) for k in keys]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, keys))  # order preserved -> deterministic merge


def _simulate_vertex(cfg, n, rng, wbar):
    """One graph plus one out-of-sample vertex; returns (X, emb, a, wbar).

    wbar=None draws the out-of-sample vertex's position from F along with
    the in-sample ones (the n+1 draws of the mixture-of-normals picture).
    """
    if wbar is not None:
        wbar = np.asarray(wbar, dtype=float)
        lat = sample_latents(cfg.dist, n, rng)
    else:
        lat_all = sample_latents(cfg.dist, n + 1, rng)
        lat = LatentMatrix(rows=lat_all.rows[:n], seed=lat_all.seed)
        wbar = lat_all.rows[n]
    if cfg.noiseless:
        emb = embed_matrix(lat.rows @ lat.rows.T, cfg.d)
        avec = lat.rows @ wbar
    else:
        adj = sample_adjacency(lat, rng)
        emb = ase(adj, cfg.d)
        avec = sample_oos_edges(lat, wbar, rng)
    return lat, emb, avec, wbar


def _solve(cfg, emb, avec, method):
    if method == "LS":
        return lls_oos(emb, avec)
    return ml_oos(emb, avec, eps=cfg.epsilon)


def _clt_trial(cfg, index):
    n = cfg.n_grid[0]
    method = "LS" if cfg.study == "clt_ls" else "ML"
    t0 = time.perf_counter()
    rng = _substream(cfg.master_seed, index)
    try:
        lat, emb, avec, wbar = _simulate_vertex(cfg, n, rng, cfg.wbar)
        est = _solve(cfg, emb, avec, method)
        rot = procrustes(emb.positions, lat.rows)
        err = float(np.linalg.norm(rot.rotation.T @ est.w - wbar))
        return TrialRecord(
            trial=index, n=n, method=method, status="ok", wbar=wbar, w=est.w,
            rotation=rot.rotation, aligned_error=err,
            wall_time=time.perf_counter() - t0,
        )
    except OosAseError as exc:
        return TrialRecord(
            trial=index, n=n, method=method, status=type(exc).__name__,
            message=str(exc), wall_time=time.perf_counter() - t0,
        )


def summarize_clt(cfg, records):
    """Per-atom empirical moments and ellipse-coverage fractions.

    Pure fold over the records: everything here is recomputable from the
    persisted trial rows plus the study configuration.
    """
    n = cfg.n_grid[0]
    d = cfg.d
    q68 = chi2_quantile(0.68, d)
    q95 = chi2_quantile(0.95, d)
    ok = [r for r in records if r.status == "ok"]
    by_atom = {}
    for r in ok:
        idx = cfg.dist.atom_index(r.wbar)
        by_atom.setdefault(idx, []).append(r)
    atoms = []
    inside68 = inside95 = 0
    for idx in sorted(by_atom):
        atom = cfg.dist.points[idx]
        cov_theory = sigma_clt(cfg.dist, atom) / n
        aligned = np.array([r.rotation.T @ r.w for r in by_atom[idx]])
        dev = aligned - atom
        maha = np.einsum("ij,ij->i", dev @ np.linalg.inv(cov_theory), dev)
        in68 = int(np.count_nonzero(maha <= q68))
        in95 = int(np.count_nonzero(maha <= q95))
        inside68 += in68
        inside95 += in95
        entry = {
            "atom": [float(v) for v in atom],
            "count": len(by_atom[idx]),
            "mean": [float(v) for v in aligned.mean(axis=0)],
            "coverage68": in68 / len(by_atom[idx]),
            "coverage95": in95 / len(by_atom[idx]),
        }
        if len(by_atom[idx]) > 1:
            emp = np.cov(aligned, rowvar=False, ddof=1)
            entry["cov"] = [[float(v) for v in row] for row in np.atleast_2d(emp)]
        atoms.append(entry)
    failures = len(records) - len(ok)
    return {
        "study": cfg.study,
        "n": n,
        "trials": len(records),
        "failures": failures,
        "failure_rate": failures / len(records) if records else 0.0,
        "coverage68": inside68 / len(ok) if ok else None,
        "coverage95": inside95 / len(ok) if ok else None,
        "atoms": atoms,
    }


def run_clt_study(cfg):
    """CLT scatter study: one graph + one OOS vertex per trial, aligned by
    that trial's Procrustes rotation against the true latent positions."""
    if cfg.study not in ("clt_ls", "clt_ml"):
        raise ConfigError("run_clt_study needs study clt_ls or clt_ml")
    records = _map_trials(
        lambda i: _clt_trial(cfg, i), range(cfg.trials), cfg.workers
    )
    summary = summarize_clt(cfg, records)
    rows = [
        [cfg.dist.atom_index(r.wbar)] + [v for v in (r.rotation.T @ r.w)]
        for r in records
        if r.status == "ok"
    ]
    header = ["atom"] + [f"w_{j}" for j in range(cfg.d)]
    return StudyResult(cfg, records, summary, {"clt_scatter": (header, rows)})


def _rate_trial(cfg, key):
    ni, index = key
    n = cfg.n_grid[ni]
    rng = _substream(cfg.master_seed, ni, index)
    t0 = time.perf_counter()
    # rate sweeps fix w-bar to one atom to keep trial variance down
    wbar_fixed = cfg.wbar if cfg.wbar is not None else cfg.dist.points[0]
    try:
        lat, emb, avec, wbar = _simulate_vertex(cfg, n, rng, wbar_fixed)
        rot = procrustes(emb.positions, lat.rows)
        out = []
        for method in ("LS", "ML"):
            try:
                est = _solve(cfg, emb, avec, method)
                err = float(np.linalg.norm(rot.rotation.T @ est.w - wbar))
                out.append(TrialRecord(
                    trial=index, n=n, method=method, status="ok", wbar=wbar,
                    w=est.w, rotation=rot.rotation, aligned_error=err,
                    wall_time=time.perf_counter() - t0,
                ))
            except OosAseError as exc:
                out.append(TrialRecord(
                    trial=index, n=n, method=method, status=type(exc).__name__,
                    message=str(exc), wall_time=time.perf_counter() - t0,
                ))
        return out
    except OosAseError as exc:
        return [
            TrialRecord(
                trial=index, n=n, method=method, status=type(exc).__name__,
                message=str(exc), wall_time=time.perf_counter() - t0,
            )
            for method in ("LS", "ML")
        ]


def summarize_rate(cfg, records):
    """Median aligned error per (n, method) and the log-log slope per method."""
    per_n = []
    slopes = {}
    for method in ("LS", "ML"):
        ns, medians = [], []
        for n in cfg.n_grid:
            errs = [
                r.aligned_error
                for r in records
                if r.status == "ok" and r.method == method and r.n == n
            ]
            if errs:
                ns.append(n)
                medians.append(float(np.median(errs)))
        for n, med in zip(ns, medians):
            per_n.append({"n": n, "method": method, "median_error": med})
        if len(ns) >= 2 and all(m > 0 for m in medians):
            slope = float(np.polyfit(np.log(ns), np.log(medians), 1)[0])
        else:
            slope = None
        slopes[method] = slope
    failures = sum(1 for r in records if r.status != "ok")
    return {
        "study": cfg.study,
        "n_grid": list(cfg.n_grid),
        "trials": cfg.trials,
        "failures": failures,
        "failure_rate": failures / len(records) if records else 0.0,
        "per_n": per_n,
        "slope_ls": slopes["LS"],
        "slope_ml": slopes["ML"],
    }


def run_rate_sweep(cfg):
    """Convergence-rate sweep: both estimators on the same graph per trial,
    median aligned error per n, and the fitted log-log slope."""
    if cfg.study != "rate_sweep":
        raise ConfigError("run_rate_sweep needs study rate_sweep")
    keys = [(ni, t) for ni in range(len(cfg.n_grid)) for t in range(cfg.trials)]
    nested = _map_trials(lambda k: _rate_trial(cfg, k), keys, cfg.workers)
    records = [r for group in nested for r in group]
    summary = summarize_rate(cfg, records)
    rows = [
        [e["n"], e["method"], e["median_error"]] for e in summary["per_n"]
    ]
    return StudyResult(
        cfg, records, summary,
        {"rate_medians": (["n", "method", "median_error"], rows)},
    )


def run_error_ratio(cfg):
    """Analytic error-ratio curves (no simulation): one curve per n."""
    if cfg.study != "error_ratio":
        raise ConfigError("run_error_ratio needs study error_ratio")
    plotdata = {}
    curves = {}
    for n in cfg.n_grid:
        curve = error_ratio_curve(cfg.spec, n, cfg.m_grid)
        curves[str(n)] = [[m, r] for m, r in curve]
        plotdata[f"ratio_n{n}"] = (["m", "ratio"], [[m, r] for m, r in curve])
    summary = {
        "study": cfg.study,
        "spec": {"lam": cfg.spec.lam, "p": cfg.spec.p, "q": cfg.spec.q},
        "n_grid": list(cfg.n_grid),
        "m_grid": list(cfg.m_grid),
        "curves": curves,
    }
    return StudyResult(cfg, [], summary, plotdata)


def run_study(cfg):
    if cfg.study in ("clt_ls", "clt_ml"):
        return run_clt_study(cfg)
    if cfg.study == "rate_sweep":
        return run_rate_sweep(cfg)
    return run_error_ratio(cfg)
