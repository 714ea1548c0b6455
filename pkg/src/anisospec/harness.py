"""Batch engine: config parsing, seeded replications, Monte Carlo tables.

Replication layout: every (cell, rep) pair owns two Philox streams derived
from the base seed — stream 2·(stream₀ + cell·2³³ + rep) draws the locations
and the odd sibling draws the field noise, where stream₀ is the config's
``stream`` offset — so results are independent of scheduling and thread
count.  Aggregation uses math.fsum (correctly rounded, hence
order-independent), and per-cell rows are written in a fixed cell order,
which makes the output CSV byte-identical across thread counts.  The
``timing`` switch replaces wall-clock readings with 0.0 for byte-comparable
output.

Replications that fail with a degenerate variance (or a Cholesky failure)
count as non-rejections and appear in the ``degenerate`` column; their
statistics are excluded from the cell means.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path
from typing import List, Optional, Tuple, Union

from threadpoolctl import threadpool_limits

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__ as _version
from .errors import ConfigurationError, DataIOError, NumericalError
from .estimators import TestConfig, TestResult, isotropy_test
from .fields import (
    CovarianceModel,
    GaussianAniso,
    Matern,
    Seed,
    sample_locations,
    simulate_field,
)
from .windows import CosinePower, Rectangular, Taper

CSV_HEADER = "r,n,reps,rejections,rate,rate_se,mean_statistic,mean_m_hat,degenerate,wall_seconds"

_CELL_STRIDE = 2**33  # max replications per cell before streams could collide

_KNOWN_KEYS = {
    "model", "r", "nu", "ell", "n", "reps", "seed", "stream", "threads",
    "timing", "out", "alpha_level", "lambda", "a", "lambda_r", "a_r",
    "taper", "alpha", "truncate_c0",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo study (or single run)."""

    model: CovarianceModel
    r_sweep: Tuple[float, ...]  # anisotropy values; one cell row per entry
    n_list: Tuple[int, ...]
    reps: int
    test: TestConfig
    seed: Seed
    out_path: str = "results"
    threads: Union[int, str] = 1
    timing: bool = True

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigurationError(f"reps must be >= 1, got {self.reps}")
        if not self.n_list:
            raise ConfigurationError("n list must be nonempty")
        for n in self.n_list:
            if n < 4:
                raise ConfigurationError(f"each n must be >= 4, got {n}")
        if isinstance(self.model, Matern) and len(self.r_sweep) != 1:
            raise ConfigurationError("r sweep applies to the gauss-aniso model only")
        if isinstance(self.threads, str) and self.threads != "auto":
            raise ConfigurationError(
                f'threads must be a positive integer or "auto", got {self.threads!r}'
            )
        if isinstance(self.threads, int) and self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")

    @property
    def alpha_level(self) -> float:
        return self.test.alpha_level

    def cell_models(self) -> List[Tuple[float, CovarianceModel]]:
        """(r-label, model) per sweep entry; NaN labels the isotropic Matérn."""
        if isinstance(self.model, GaussianAniso):
            return [(r, GaussianAniso(r)) for r in self.r_sweep]
        return [(math.nan, self.model)]


@dataclass(frozen=True)
class MonteCarloRow:
    r: float
    n: int
    reps: int
    rejections: int
    rate: float
    rate_se: float
    mean_statistic: float
    mean_m_hat: float
    degenerate: int
    wall_seconds: float

    def as_csv(self) -> str:
        return ",".join(
            [
                _fmt(self.r),
                str(self.n),
                str(self.reps),
                str(self.rejections),
                _fmt(self.rate),
                _fmt(self.rate_se),
                _fmt(self.mean_statistic),
                _fmt(self.mean_m_hat),
                str(self.degenerate),
                _fmt(self.wall_seconds),
            ]
        )

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "n": self.n,
            "reps": self.reps,
            "rejections": self.rejections,
            "rate": self.rate,
            "rate_se": self.rate_se,
            "mean_statistic": self.mean_statistic,
            "mean_m_hat": self.mean_m_hat,
            "degenerate": self.degenerate,
            "wall_seconds": self.wall_seconds,
        }


def _fmt(x: float) -> str:
    return format(x, ".17g")


def parse_config(path) -> ExperimentConfig:
    """Read and validate a flat TOML config file, filling defaults."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataIOError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"config file {path} is not valid TOML: {exc}") from exc
    return config_from_dict(data)


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return _build_config(data)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid config value: {exc}") from exc


def _build_config(data: dict) -> ExperimentConfig:
    kind = data.get("model", "gauss-aniso")
    if kind == "gauss-aniso":
        r_raw = data.get("r", 1.0)
        r_sweep = tuple(float(v) for v in (r_raw if isinstance(r_raw, list) else [r_raw]))
        if not r_sweep:
            raise ConfigurationError("r list must be nonempty")
        for key in ("nu", "ell"):
            if key in data:
                raise ConfigurationError(f"key {key!r} applies to the matern model only")
        model: CovarianceModel = GaussianAniso(r_sweep[0])
    elif kind == "matern":
        if "r" in data:
            raise ConfigurationError("key 'r' applies to the gauss-aniso model only")
        model = Matern(nu=float(data.get("nu", 3.0)), ell=float(data.get("ell", 1.0)))
        r_sweep = (math.nan,)
    else:
        raise ConfigurationError(
            f"model must be 'gauss-aniso' or 'matern', got {kind!r}"
        )

    n_raw = data.get("n", [2000])
    n_list = tuple(int(v) for v in (n_raw if isinstance(n_raw, list) else [n_raw]))

    taper = _parse_taper(data.get("taper", "cos"), data.get("alpha", 3))
    test = TestConfig(
        a=int(data.get("a", 80)),
        lam=float(data.get("lambda", 30.0)),
        a_r=int(data.get("a_r", 800)),
        lam_r=float(data.get("lambda_r", 300.0)),
        alpha_level=float(data.get("alpha_level", 0.05)),
        taper=taper,
        truncate_c0=bool(data.get("truncate_c0", True)),
    )
    threads_raw = data.get("threads", 1)
    threads: Union[int, str] = threads_raw if threads_raw == "auto" else int(threads_raw)
    return ExperimentConfig(
        model=model,
        r_sweep=r_sweep,
        n_list=n_list,
        reps=int(data.get("reps", 200)),
        test=test,
        seed=Seed(int(data.get("seed", 0)), int(data.get("stream", 0))),
        out_path=str(data.get("out", "results")),
        threads=threads,
        timing=bool(data.get("timing", True)),
    )


def _parse_taper(kind: str, alpha) -> Taper:
    if kind in ("cos", "cosine"):
        return CosinePower(int(alpha))
    if kind in ("rect", "rectangular"):
        return Rectangular()
    raise ConfigurationError(f"taper must be 'cos' or 'rect', got {kind!r}")


def serialize_config(config: ExperimentConfig) -> str:
    """Emit the config as flat TOML; parse_config round-trips it."""
    lines = []
    if isinstance(config.model, GaussianAniso):
        lines.append('model = "gauss-aniso"')
        lines.append(f"r = [{', '.join(_fmt(r) for r in config.r_sweep)}]")
    else:
        lines.append('model = "matern"')
        lines.append(f"nu = {_fmt(config.model.nu)}")
        lines.append(f"ell = {_fmt(config.model.ell)}")
    lines.append(f"n = [{', '.join(str(n) for n in config.n_list)}]")
    lines.append(f"reps = {config.reps}")
    lines.append(f"seed = {config.seed.seed}")
    lines.append(f"stream = {config.seed.stream}")
    threads = f'"{config.threads}"' if isinstance(config.threads, str) else config.threads
    lines.append(f"threads = {threads}")
    lines.append(f"timing = {str(config.timing).lower()}")
    lines.append(f'out = "{config.out_path}"')
    test = config.test
    lines.append(f"alpha_level = {_fmt(test.alpha_level)}")
    lines.append(f"lambda = {_fmt(test.lam)}")
    lines.append(f"a = {test.a}")
    lines.append(f"lambda_r = {_fmt(test.lam_r)}")
    lines.append(f"a_r = {test.a_r}")
    if isinstance(test.taper, CosinePower):
        lines.append('taper = "cos"')
        lines.append(f"alpha = {test.taper.alpha}")
    else:
        lines.append('taper = "rect"')
    lines.append(f"truncate_c0 = {str(test.truncate_c0).lower()}")
    return "\n".join(lines) + "\n"


def config_as_dict(config: ExperimentConfig) -> dict:
    """JSON-friendly echo of the config (used in results.json)."""
    out = {
        "n": list(config.n_list),
        "reps": config.reps,
        "seed": config.seed.seed,
        "stream": config.seed.stream,
        "threads": config.threads,
        "timing": config.timing,
        "out": config.out_path,
        "alpha_level": config.test.alpha_level,
        "lambda": config.test.lam,
        "a": config.test.a,
        "lambda_r": config.test.lam_r,
        "a_r": config.test.a_r,
        "truncate_c0": config.test.truncate_c0,
    }
    if isinstance(config.model, GaussianAniso):
        out["model"] = "gauss-aniso"
        out["r"] = list(config.r_sweep)
    else:
        out["model"] = "matern"
        out["nu"] = config.model.nu
        out["ell"] = config.model.ell
    if isinstance(config.test.taper, CosinePower):
        out["taper"] = "cos"
        out["alpha"] = config.test.taper.alpha
    else:
        out["taper"] = "rect"
    return out


def _replicate(
    model: CovarianceModel, n: int, test: TestConfig, seed: Seed
) -> Tuple[Optional[TestResult], Optional[str]]:
    """One replication: locations, field, test.  BLAS is pinned to one
    thread so results cannot depend on the worker's thread environment."""
    with threadpool_limits(limits=1):
        loc_seed = Seed(seed.seed, 2 * seed.stream)
        noise_seed = Seed(seed.seed, 2 * seed.stream + 1)
        locations = sample_locations(n, test.lam, loc_seed)
        try:
            sample = simulate_field(model, locations, test.lam, noise_seed)
            return isotropy_test(sample, test), None
        except NumericalError as exc:
            return None, repr(exc)


def _replicate_task(args) -> Tuple[Optional[TestResult], Optional[str]]:
    model, n, test, seed_val, stream = args
    return _replicate(model, n, test, Seed(seed_val, stream))


def run_single(config: ExperimentConfig, seed: Seed) -> TestResult:
    """One fresh replication of the first cell (base model, first n).

    The given seed's stream is the replication index: location and noise
    draws use its even/odd sub-streams.
    """
    result, failure = _replicate(
        config.cell_models()[0][1], config.n_list[0], config.test, seed
    )
    if result is None:
        raise NumericalError(failure)
    return result


def resolve_threads(config: ExperimentConfig, max_n: int) -> int:
    """Worker count: env override, then config; capped so concurrent
    covariance factorizations stay within a few GB."""
    env = os.environ.get("ANISO_THREADS")
    if env is not None:
        requested = int(env)
    elif config.threads == "auto":
        requested = os.cpu_count() or 1
    else:
        requested = int(config.threads)
    bytes_per_worker = 20 * max_n * max_n  # covariance + cholesky copies
    cap = max(1, int(3.5e9) // max(bytes_per_worker, 1))
    return max(1, min(requested, cap))


def run_montecarlo(config: ExperimentConfig) -> List[MonteCarloRow]:
    """Run all (r, n) cells, write CSV + JSON under config.out_path, and
    return the rows.  Partial progress survives I/O failure in a
    ``results.csv.partial`` file that is renamed on success."""
    out_dir = Path(config.out_path)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise DataIOError(f"output directory {out_dir} is not writable: {exc}") from exc

    cells = [
        (r_label, model, n)
        for (r_label, model) in config.cell_models()
        for n in config.n_list
    ]
    workers = resolve_threads(config, max(config.n_list))
    csv_path = out_dir / "results.csv"
    partial_path = out_dir / "results.csv.partial"
    rows: List[MonteCarloRow] = []
    try:
        with open(partial_path, "w", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            fh.flush()
            for cell_index, (r_label, model, n) in enumerate(cells):
                row = _run_cell(config, cell_index, r_label, model, n, workers)
                rows.append(row)
                fh.write(row.as_csv() + "\n")
                fh.flush()
                print(
                    f"cell r={r_label:g} n={n}: rate={row.rate:.3f} "
                    f"({row.rejections}/{row.reps}, {row.degenerate} degenerate, "
                    f"{row.wall_seconds:.1f}s)",
                    file=sys.stderr,
                    flush=True,
                )
        os.replace(partial_path, csv_path)
        payload = {
            "version": _version,
            "config": config_as_dict(config),
            "rows": [row.as_dict() for row in rows],
        }
        (out_dir / "results.json").write_text(json.dumps(payload, indent=2) + "\n")
    except OSError as exc:
        raise DataIOError(f"failed writing results under {out_dir}: {exc}") from exc
    return rows


def _run_cell(
    config: ExperimentConfig,
    cell_index: int,
    r_label: float,
    model: CovarianceModel,
    n: int,
    workers: int,
) -> MonteCarloRow:
    started = time.perf_counter()
    base = config.seed.stream + cell_index * _CELL_STRIDE
    tasks = [
        (model, n, config.test, config.seed.seed, base + rep)
        for rep in range(config.reps)
    ]
    if workers > 1:
        chunk = max(1, config.reps // (4 * workers))
        with ProcessPoolExecutor(
            max_workers=workers, mp_context=get_context("spawn")
        ) as pool:
            outcomes = list(pool.map(_replicate_task, tasks, chunksize=chunk))
    else:
        outcomes = [_replicate_task(t) for t in tasks]

    rejections = 0
    degenerate = 0
    statistics: List[float] = []
    m_hats: List[float] = []
    for result, _failure in outcomes:
        if result is None:
            degenerate += 1
            continue
        rejections += int(result.reject)
        statistics.append(result.statistic)
        m_hats.append(result.m_hat)
    rate = rejections / config.reps
    rate_se = math.sqrt(rate * (1.0 - rate) / config.reps)
    mean_stat = math.fsum(statistics) / len(statistics) if statistics else math.nan
    mean_m = math.fsum(m_hats) / len(m_hats) if m_hats else math.nan
    elapsed = time.perf_counter() - started if config.timing else 0.0
    return MonteCarloRow(
        r=r_label,
        n=n,
        reps=config.reps,
        rejections=rejections,
        rate=rate,
        rate_se=rate_se,
        mean_statistic=mean_stat,
        mean_m_hat=mean_m,
        degenerate=degenerate,
        wall_seconds=elapsed,
    )
