"""
Train Command - Learn the dictionary from a kernel directory

Usage:
    cksc train --kernel-dir run/ --out run/ --alpha 0.1 -T 4
"""

from pathlib import Path
from typing import Any

import click

from cksc import dataio
from cksc.commands.common import handle_errors, load_kernel_dir, resolve_config, run_options
from cksc.trainer import LabelMatrix, train

MODEL_FILE = "model.json"
TRACE_FILE = "trace.csv"


@click.command("train")
@click.option("--kernel-dir", "-k", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory written by 'cksc kernel'")
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Output directory for model.json and trace.csv")
@click.option("--check-invariants", is_flag=True, help="Verify feasibility after every half-step")
@run_options
@click.pass_context
@handle_errors
def train_cmd(_ctx: click.Context, kernel_dir: str, out_dir: str, check_invariants: bool,
              **options: Any) -> None:
    """Train the dictionary and write the model and its objective trace."""
    config = resolve_config(options)
    source = load_kernel_dir(Path(kernel_dir))
    labels = LabelMatrix.from_labels(source.labels)

    model = train(
        source.kernel,
        labels,
        config.hyperparams(),
        n_jobs=config.threads,
        check_invariants=check_invariants,
        delta=source.delta,
        config=config.to_dict(),
    )

    out = Path(out_dir)
    dataio.write_json(out / MODEL_FILE, model.to_dict())
    dataio.write_trace_csv(out / TRACE_FILE, model.objective_trace)

    trace = model.objective_trace
    click.echo(f"[OK] Model written to {out / MODEL_FILE}")
    click.echo(f"     iterations={len(trace) // 2} objective {trace[0]:.6g} -> {trace[-1]:.6g}")
