"""Synthetic low-tubal-rank problems and phase-transition / certificate sweeps."""

import dataclasses
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .completion import SolverConfig, complete_entrywise, complete_tubal, rse
from .diagnostics import certificate_report, default_t0, golfing_certificate, mu0, union_mask
from .sampling import ENTRYWISE, TUBAL, TangentSpace, bernoulli_mask, p_omega, tubal_mask
from .tensor_io import csv_export
from .tsvd import t_svd_reduced

logger = logging.getLogger(__name__)

GRID_COLUMNS = ["rank", "rate", "trial", "rse", "success", "iterations", "seed", "error"]
SWEEP_COLUMNS = ["rate", "trial", "seed", "mu0", "cond1", "cond2a", "cond2b", "t0", "passed", "error"]


def generate_low_tubal_rank(n1, n2, n3, r, seed=0):
    """Gaussian tensor truncated to its first ``r`` singular tubes."""
    if not 1 <= r <= min(n1, n2):
        raise ValueError(f"r must lie in [1, {min(n1, n2)}], got {r}")
    G = np.random.default_rng(seed).standard_normal((n1, n2, n3))
    return t_svd_reduced(G, r).reconstruct()


def generate_low_tubal_rank_factors(n1, n2, n3, r, seed=0):
    G = np.random.default_rng(seed).standard_normal((n1, n2, n3))
    return t_svd_reduced(G, r)


def cell_seed(base_seed, *index):
    """Seed for one grid cell, independent of execution order."""
    ss = np.random.SeedSequence(base_seed, spawn_key=tuple(int(i) for i in index))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _parse_list(text, cast):
    text = text.strip()
    if ":" in text and "," not in text:
        parts = [cast(x) for x in text.split(":")]
        if cast is int:
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(lo, hi + 1, step))
        raise ValueError(f"range syntax only supported for integers: {text!r}")
    return [cast(x) for x in text.split(",") if x.strip()]


def read_config(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _bool(text):
    return str(text).lower() in ("1", "true", "yes", "on")


@dataclass
class PhaseGridConfig:
    n1: int = 30
    n2: int = 30
    n3: int = 20
    ranks: list = field(default_factory=lambda: list(range(1, 9)))
    rates: list = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(1, 10)])
    trials: int = 20
    threshold: float = 1e-3
    base_seed: int = 0
    mode: str = ENTRYWISE
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(not 0 < p <= 1 for p in self.rates):
            raise ValueError("rates must lie in (0, 1]")
        if any(not 1 <= r <= min(self.n1, self.n2) for r in self.ranks):
            raise ValueError("ranks must lie in [1, min(n1, n2)]")
        if self.mode not in (ENTRYWISE, TUBAL):
            raise ValueError(f"unknown mode {self.mode!r}")

    _SOLVER_KEYS = {"rho": float, "max_iters": int, "tol_primal": float, "tol_dual": float}

    @classmethod
    def from_dict(cls, d):
        kw, solver = {}, {}
        for key, val in d.items():
            if key in cls._SOLVER_KEYS:
                solver[key] = cls._SOLVER_KEYS[key](val)
            elif key in ("n1", "n2", "n3", "trials", "base_seed"):
                kw[key] = int(val)
            elif key == "threshold":
                kw[key] = float(val)
            elif key == "ranks":
                kw[key] = _parse_list(val, int) if isinstance(val, str) else list(val)
            elif key == "rates":
                kw[key] = _parse_list(val, float) if isinstance(val, str) else list(val)
            elif key == "mode":
                kw[key] = str(val)
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cls(**kw, solver=SolverConfig(**solver))

    @classmethod
    def from_file(cls, path, **overrides):
        d = read_config(path)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


@dataclass
class PhaseGrid:
    """Recovery rate and mean RSE per ``(rank, rate)`` cell; rows follow ``ranks``."""

    ranks: list
    rates: list
    recovery: np.ndarray
    mean_rse: np.ndarray
    rows: list = field(default_factory=list, repr=False)

    def as_rows(self):
        return self.rows

    def recovery_rate(self, rank, rate):
        return float(self.recovery[self.ranks.index(rank), self.rates.index(rate)])

    @classmethod
    def from_rows(cls, rows, threshold=None):
        """Rebuild a grid from CSV rows (strings or numbers)."""
        ranks = sorted({int(r["rank"]) for r in rows})
        rates = sorted({float(r["rate"]) for r in rows})
        succ = np.zeros((len(ranks), len(rates)))
        tot = np.zeros_like(succ)
        err = np.zeros_like(succ)
        for r in rows:
            i, j = ranks.index(int(r["rank"])), rates.index(float(r["rate"]))
            tot[i, j] += 1
            val = float(r["rse"])
            err[i, j] += val
            ok = int(r["success"]) if threshold is None else val <= threshold
            succ[i, j] += ok
        return cls(ranks, rates, succ / tot, err / tot, list(rows))


def _solve_cell(task):
    cfg, ri, pi, trial = task
    rank, rate = cfg.ranks[ri], cfg.rates[pi]
    seed = cell_seed(cfg.base_seed, ri, pi, trial)
    row = {"rank": rank, "rate": rate, "trial": trial, "rse": float("nan"),
           "success": False, "iterations": 0, "seed": seed, "error": ""}
    try:
        with threadpool_limits(limits=1):
            M = generate_low_tubal_rank(cfg.n1, cfg.n2, cfg.n3, rank, seed)
            sampler = bernoulli_mask if cfg.mode == ENTRYWISE else tubal_mask
            mask = sampler(cfg.n1, cfg.n2, cfg.n3, rate, seed + 1)
            solve = complete_entrywise if cfg.mode == ENTRYWISE else complete_tubal
            X, report = solve(p_omega(M, mask), mask, cfg.solver)
        err = rse(X, M)
        row.update(rse=err, success=bool(err <= cfg.threshold), iterations=report.iterations)
    except Exception as exc:  # recorded per row, the grid keeps going
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def _map(fn, tasks, threads):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def run_phase_grid(cfg, out_dir=None, threads=1, scale=16):
    """Run every ``(rank, rate, trial)`` cell and aggregate.

    With ``out_dir`` set, writes ``phase_grid.csv``, ``recovery.pgm`` and
    ``rse.pgm`` there.
    """
    tasks = [(cfg, ri, pi, t)
             for ri in range(len(cfg.ranks))
             for pi in range(len(cfg.rates))
             for t in range(cfg.trials)]
    rows = _map(_solve_cell, tasks, threads)
    succ = np.zeros((len(cfg.ranks), len(cfg.rates)))
    err = np.zeros_like(succ)
    for task, row in zip(tasks, rows):
        _, ri, pi, _ = task
        succ[ri, pi] += row["success"]
        err[ri, pi] += row["rse"]
    grid = PhaseGrid(list(cfg.ranks), list(cfg.rates), succ / cfg.trials, err / cfg.trials, rows)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        csv_export(rows, os.path.join(out_dir, "phase_grid.csv"), GRID_COLUMNS)
        write_pgm(os.path.join(out_dir, "recovery.pgm"), recovery_pixels(grid.recovery), scale)
        write_pgm(os.path.join(out_dir, "rse.pgm"), rse_pixels(grid.mean_rse), scale)
    return grid


def recovery_pixels(recovery):
    """White (255) where every trial succeeded, black (0) where all failed."""
    return np.rint(255 * np.clip(recovery, 0, 1)).astype(np.uint8)


def rse_pixels(mean_rse):
    """White for RSE 0, black for RSE 1 or worse."""
    vals = np.nan_to_num(np.asarray(mean_rse, dtype=float), nan=1.0)
    return np.rint(255 * (1 - np.clip(vals, 0, 1))).astype(np.uint8)


def write_pgm(path, pixels, scale=1):
    """Binary 8-bit portable graymap; each cell becomes a ``scale x scale`` block."""
    img = np.kron(np.asarray(pixels, dtype=np.uint8), np.ones((scale, scale), dtype=np.uint8))
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    magic, w, h, maxval, rest = data.split(maxsplit=4)
    if magic != b"P5" or int(maxval) != 255:
        raise ValueError("not an 8-bit binary PGM")
    return np.frombuffer(rest, dtype=np.uint8).reshape(int(h), int(w))


@dataclass
class DiagnosticsConfig:
    n1: int = 30
    n2: int = 30
    n3: int = 20
    rank: int = 2
    rates: list = field(default_factory=lambda: [0.5])
    trials: int = 20
    base_seed: int = 0
    t0: int = None

    @classmethod
    def from_dict(cls, d):
        kw = {}
        for key, val in d.items():
            if key in ("n1", "n2", "n3", "rank", "trials", "base_seed", "t0"):
                kw[key] = int(val)
            elif key == "rates":
                kw[key] = _parse_list(val, float) if isinstance(val, str) else list(val)
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cls(**kw)

    @classmethod
    def from_file(cls, path, **overrides):
        d = read_config(path)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


def _diagnose_cell(task):
    cfg, pi, trial = task
    rate = cfg.rates[pi]
    seed = cell_seed(cfg.base_seed, pi, trial)
    row = {"rate": rate, "trial": trial, "seed": seed}
    try:
        with threadpool_limits(limits=1):
            factors = generate_low_tubal_rank_factors(cfg.n1, cfg.n2, cfg.n3, cfg.rank, seed)
            T = TangentSpace.from_factors(factors)
            Y, batches = golfing_certificate(T, rate, seed=seed + 1, t0=cfg.t0)
            mask = union_mask(batches, p=rate)
            report = certificate_report(Y, T, mask, rate, t0=len(batches), seed=seed)
            row.update(mu0=mu0(factors).mu0, cond1=report.cond1, cond2a=report.cond2a,
                       cond2b=report.cond2b, t0=report.t0, passed=report.passed, error="")
    except Exception as exc:
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def run_diagnostics_sweep(cfg, out_path=None, threads=1):
    """Incoherence and certificate checks for ``trials`` seeds at every rate."""
    tasks = [(cfg, pi, t) for pi in range(len(cfg.rates)) for t in range(cfg.trials)]
    rows = _map(_diagnose_cell, tasks, threads)
    if out_path is not None:
        csv_export(rows, out_path, SWEEP_COLUMNS)
    return rows
