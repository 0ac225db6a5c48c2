"""
Predict Command - Code and classify new points with a trained model

Usage:
    cksc predict --model run/model.json --kernel-dir run/ --manifest test/manifest.csv
    cksc predict --model run/model.json --kernel-dir run/ --cross-kernel rows.csv

Test series are compared to the training series (from the manifest the
kernel was built from) with the bandwidth frozen at training time.
Residuals need K(z, z): it is 1 for manifest series and read from
--self-kernel for cross-kernel rows.
"""

import logging
from pathlib import Path
from typing import Any, List, Optional

import click
import numpy as np

from cksc import dataio, kernelcore, metrics, recall
from cksc.commands.common import handle_errors, load_kernel_dir, resolve_config, run_options
from cksc.errors import ContractError
from cksc.trainer import TrainedModel

logger = logging.getLogger(__name__)


@click.command("predict")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="model.json written by 'cksc train'")
@click.option("--kernel-dir", "-k", type=click.Path(exists=True, file_okay=False), required=True,
              help="Training kernel directory the model was trained on")
@click.option("--manifest", "-m", type=click.Path(exists=True, dir_okay=False),
              help="Test dataset manifest")
@click.option("--cross-kernel", type=click.Path(exists=True, dir_okay=False),
              help="Precomputed M x N cross-kernel rows")
@click.option("--self-kernel", type=click.Path(exists=True, dir_okay=False),
              help="K(z, z) per cross-kernel row, one value per line (enables residuals)")
@click.option("--out", "-o", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Predictions JSONL")
@run_options
@click.pass_context
@handle_errors
def predict_cmd(_ctx: click.Context, model_path: str, kernel_dir: str, manifest: Optional[str],
                cross_kernel: Optional[str], self_kernel: Optional[str], out_path: str,
                **options: Any) -> None:
    """Write one prediction record per test point.

    Hyperparameters come from the model; the run options set threads and
    are recorded in the <out>.meta.json sidecar.
    """
    if (manifest is None) == (cross_kernel is None):
        raise click.UsageError("Give exactly one of --manifest or --cross-kernel")
    if self_kernel is not None and cross_kernel is None:
        raise click.UsageError("--self-kernel goes with --cross-kernel")
    config = resolve_config(options)
    threads = config.threads

    source = load_kernel_dir(Path(kernel_dir))
    model = TrainedModel.from_dict(dataio.read_json(Path(model_path)), source.kernel)

    actual: Optional[List[str]] = None
    diagonal: Optional[np.ndarray] = None
    if manifest is not None:
        rows, actual = _manifest_rows(model, source.manifest, Path(manifest), threads)
        # Gaussian builder: K(z, z) = 1
        diagonal = np.ones(rows.shape[0])
    else:
        rows = dataio.read_matrix_csv(Path(cross_kernel), allow_empty=True)
        if self_kernel is not None:
            diagonal = dataio.read_matrix_csv(Path(self_kernel), allow_empty=True).reshape(-1)

    predictions = recall.predict_batch(model, rows, n_jobs=threads, self_kernel=diagonal)
    classes = model.labels.classes
    out = Path(out_path)
    dataio.write_jsonl(out, (p.to_record(i, classes) for i, p in enumerate(predictions)))
    dataio.write_json(meta_path(out), {
        "model": str(model_path),
        "kernel_sha256": model.kernel_sha256,
        "predictions": len(predictions),
        "residuals": diagonal is not None,
        "config": config.to_dict(),
        "model_config": model.config,
    })

    unclassifiable = sum(p.unclassifiable for p in predictions)
    click.echo(f"[OK] {len(predictions)} predictions written to {out_path} "
               f"({unclassifiable} unclassifiable)")
    if actual and all(label in classes for label in actual):
        lookup = {name: i for i, name in enumerate(classes)}
        score = metrics.accuracy([p.class_id for p in predictions], [lookup[a] for a in actual])
        click.echo(f"     accuracy {score:.2f}%")


def meta_path(out: Path) -> Path:
    return out.with_name(out.name + ".meta.json")


def _manifest_rows(model: TrainedModel, train_manifest: Optional[Path], test_manifest: Path,
                   threads: int) -> Any:
    entries = dataio.read_manifest(test_manifest)
    if not entries:
        return np.empty((0, model.kernel.n)), []
    if model.delta is None or train_manifest is None:
        raise ContractError(
            "Model has no stored bandwidth or training manifest; use --cross-kernel instead"
        )
    train_series, _ = dataio.load_manifest_series(train_manifest)
    test_series, labels = dataio.load_manifest_series(test_manifest)
    band = model.config.get("kernel", {}).get("band")
    rows = kernelcore.cross_kernels(test_series, train_series, model.delta, band, n_jobs=threads)
    return rows, labels
