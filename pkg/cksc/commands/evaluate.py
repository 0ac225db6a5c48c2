"""
Eval and Sweep Commands - Cross-validated accuracy and sensitivity tables

Usage:
    cksc eval --kernel-dir run/ --out report.json --folds 5
    cksc eval --kernel-dir run/ --out report.json --mode holdout --repeats 10
    cksc sweep --kernel-dir run/ --out sweep.csv --param alpha --values 0.05,0.1,0.2
"""

from pathlib import Path
from typing import Any, List, Optional

import click

from cksc import dataio, metrics
from cksc.commands.common import handle_errors, load_kernel_dir, resolve_config, run_options
from cksc.config import RunConfig
from cksc.trainer import LabelMatrix


def _dataset(kernel_dir: str) -> metrics.Dataset:
    source = load_kernel_dir(Path(kernel_dir))
    return metrics.Dataset(source.kernel, LabelMatrix.from_labels(source.labels), source.delta)


def _protocol(config: RunConfig) -> dict:
    return {
        "folds": config.get("eval.folds"),
        "seed": config.get("train.seed"),
        "repeats": config.get("eval.repeats"),
        "mode": config.get("eval.mode"),
        "test_fraction": config.get("eval.test_fraction"),
        "n_jobs": config.threads,
    }


def _parse_values(_ctx: click.Context, _param: click.Parameter, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated numbers ({e})") from e


@click.command("eval")
@click.option("--kernel-dir", "-k", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", "-o", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Report JSON")
@click.option("--mode", type=click.Choice(["cv", "holdout"]), help="Split protocol")
@click.option("--test-fraction", type=float, help="Test share per holdout split")
@run_options
@click.pass_context
@handle_errors
def eval_cmd(_ctx: click.Context, kernel_dir: str, out_path: str, mode: Optional[str],
             test_fraction: Optional[float], **options: Any) -> None:
    """Cross-validate and write an accuracy / interpretability report."""
    config = resolve_config(options, {"eval.mode": mode, "eval.test_fraction": test_fraction})
    report = metrics.crossvalidate(_dataset(kernel_dir), config.hyperparams(), **_protocol(config))
    data = report.to_dict()
    data["config"] = config.to_dict()
    dataio.write_json(Path(out_path), data)
    click.echo(f"[OK] Accuracy {report.accuracy_percent:.2f} +/- {report.std_accuracy:.2f}% "
               f"mean IP {report.mean_ip:.3f} ({report.unclassifiable_count} unclassifiable)")


@click.command("sweep")
@click.option("--kernel-dir", "-k", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", "-o", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Sweep CSV")
@click.option("--param", type=click.Choice(["alpha", "sparsity"]), help="Parameter to vary")
@click.option("--values", callback=_parse_values, help="Comma-separated grid")
@click.option("--mode", type=click.Choice(["cv", "holdout"]), help="Split protocol")
@run_options
@click.pass_context
@handle_errors
def sweep_cmd(_ctx: click.Context, kernel_dir: str, out_path: str, param: Optional[str],
              values: Optional[List[float]], mode: Optional[str], **options: Any) -> None:
    """Vary one parameter with the others fixed; write a plot-ready CSV."""
    config = resolve_config(options, {"sweep.param": param, "sweep.values": values, "eval.mode": mode})
    rows = metrics.sensitivity_sweep(
        _dataset(kernel_dir),
        config.get("sweep.param"),
        config.get("sweep.values"),
        config.hyperparams(),
        **_protocol(config),
    )
    dataio.write_sweep_csv(Path(out_path), rows)
    for row in rows:
        click.echo(f"{row.param_name}={row.param_value:g}: "
                   f"{row.mean_accuracy:.2f} +/- {row.std_accuracy:.2f}")
