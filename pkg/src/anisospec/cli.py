"""Command-line front end: simulate fields, test samples, run studies.

Exit codes: 0 success, 2 configuration problem (including bad usage),
3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from .errors import ConfigurationError, DataIOError, NumericalError
from .estimators import TestConfig, isotropy_test
from .fields import GaussianAniso, Matern, Seed, SpatialSample, sample_locations, simulate_field
from .harness import (
    config_as_dict,
    parse_config,
    run_montecarlo,
    serialize_config,
)
from .population import (
    population_d1,
    population_d2,
    population_f4,
    population_m2,
    population_tau_limits,
)
from .windows import CosinePower

_ORACLE_TAPER = CosinePower(3)


@click.group()
def cli() -> None:
    """Frequency-domain isotropy testing for irregularly sampled fields."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def simulate(config_path: str, out_dir: str) -> None:
    """Draw one field sample (first cell of the config) to OUT/points.csv."""
    config = parse_config(config_path)
    model = config.cell_models()[0][1]
    n = config.n_list[0]
    lam = config.test.lam
    loc_seed = Seed(config.seed.seed, 2 * config.seed.stream)
    noise_seed = Seed(config.seed.seed, 2 * config.seed.stream + 1)
    locations = sample_locations(n, lam, loc_seed)
    sample = simulate_field(model, locations, lam, noise_seed)

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "points.csv", "w", newline="\n") as fh:
            fh.write("x,y,z\n")
            for (x, y), z in zip(sample.locations, sample.values):
                fh.write(f"{x:.17g},{y:.17g},{z:.17g}\n")
        meta = {
            "n": n,
            "lambda": lam,
            "seed": config.seed.seed,
            "stream": config.seed.stream,
            "jitter": sample.jitter,
            "model": config_as_dict(config)["model"],
        }
        if isinstance(model, GaussianAniso):
            meta["r"] = model.r
        else:
            meta["nu"] = model.nu
            meta["ell"] = model.ell
        (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        raise DataIOError(f"cannot write sample under {out}: {exc}") from exc
    click.echo(f"wrote {n} points to {out / 'points.csv'}", err=True)


@cli.command("test")
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--lambda", "lam", type=float, default=None,
              help="Side length of the sampling square (defaults to the config value).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def test_command(data_path: str, lam, config_path) -> None:
    """Test a points.csv sample (columns x,y,z) for isotropy."""
    if config_path is not None:
        test_config = parse_config(config_path).test
        if lam is not None:
            test_config = dataclasses.replace(test_config, lam=lam)
    else:
        if lam is None:
            raise ConfigurationError("either --lambda or --config is required")
        test_config = TestConfig(lam=lam)

    table = _read_points(data_path)
    sample = SpatialSample(
        lam=test_config.lam,
        locations=table[:, :2],
        values=table[:, 2],
        n=table.shape[0],
    )
    result = isotropy_test(sample, test_config)
    click.echo(json.dumps(result.as_dict(), indent=2))
    verdict = "rejects isotropy" if result.reject else "does not reject isotropy"
    click.echo(
        f"statistic {result.statistic:.4f} vs critical {result.critical:.4f} "
        f"at level {test_config.alpha_level:g}: {verdict}",
        err=True,
    )


def _read_points(path: str) -> np.ndarray:
    try:
        with open(path, "r") as fh:
            header = fh.readline().strip()
            if header != "x,y,z":
                raise DataIOError(
                    f"{path}: expected header 'x,y,z', got {header!r}"
                )
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataIOError(f"{path} is not a numeric x,y,z table: {exc}") from exc
    if table.ndim != 2 or table.shape[1] != 3:
        raise DataIOError(f"{path}: expected three columns, got shape {table.shape}")
    return table


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Override the config's output directory.")
def montecarlo(config_path: str, out_dir) -> None:
    """Run the Monte Carlo study described by the config."""
    config = parse_config(config_path)
    if out_dir is not None:
        config = dataclasses.replace(config, out_path=out_dir)
    rows = run_montecarlo(config)
    click.echo(f"wrote {len(rows)} rows to {Path(config.out_path) / 'results.csv'}", err=True)


@cli.command()
@click.option("--model", "kind", type=click.Choice(["gauss-aniso", "matern"]),
              default="gauss-aniso")
@click.option("--r", "r", type=float, default=1.0)
@click.option("--nu", type=float, default=3.0)
@click.option("--ell", type=float, default=1.0)
def oracle(kind: str, r: float, nu: float, ell: float) -> None:
    """Print population quadrature values for a covariance model as JSON."""
    model = GaussianAniso(r) if kind == "gauss-aniso" else Matern(nu=nu, ell=ell)
    limits = population_tau_limits(model, _ORACLE_TAPER)
    payload = {
        "model": kind,
        "d1": population_d1(model),
        "d2": population_d2(model),
        "m2": population_m2(model),
        "f4_integral": population_f4(model),
        "tau_h0_sq": limits.tau_h0_sq,
        "tau_sq": limits.tau_sq,
    }
    if kind == "gauss-aniso":
        payload["r"] = r
    else:
        payload["nu"] = nu
        payload["ell"] = ell
    click.echo(json.dumps(payload, indent=2))


@cli.command("show-config")
@click.option("--config", "config_path", required=True, type=click.Path())
def show_config(config_path: str) -> None:
    """Parse a config file and print its fully-defaulted TOML form."""
    click.echo(serialize_config(parse_config(config_path)), nl=False)


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    except (DataIOError, OSError) as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(4)


if __name__ == "__main__":
    main()
