"""
Kernel Command - Build the Gaussian-of-DTW training kernel

Usage:
    cksc kernel --manifest data/manifest.csv --out run/
    cksc kernel --kernel-csv K.csv --labels labels.csv --out run/   (precomputed)

Writes kernel.csv, labels.csv and spectrum.json (delta, eigenvalue summary,
kernel hash, resolved config) into the output directory.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import click

from cksc import dataio, kernelcore
from cksc.commands.common import (
    KERNEL_FILE,
    LABELS_FILE,
    SPECTRUM_FILE,
    handle_errors,
    resolve_config,
    run_options,
)
from cksc.errors import DimensionError
from cksc.kernelcore import KernelMatrix

logger = logging.getLogger(__name__)


@click.command("kernel")
@click.option("--manifest", "-m", type=click.Path(exists=True, dir_okay=False),
              help="Dataset manifest (path,label)")
@click.option("--kernel-csv", type=click.Path(exists=True, dir_okay=False),
              help="Precomputed N x N kernel instead of a manifest")
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False),
              help="Labels for --kernel-csv, one per line")
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Output directory")
@run_options
@click.pass_context
@handle_errors
def kernel_cmd(_ctx: click.Context, manifest: Optional[str], kernel_csv: Optional[str],
               labels_path: Optional[str], out_dir: str, **options: Any) -> None:
    """Compute DTW distances, the bandwidth and the Gaussian kernel."""
    if (manifest is None) == (kernel_csv is None):
        raise click.UsageError("Give exactly one of --manifest or --kernel-csv")
    if kernel_csv is not None and labels_path is None:
        raise click.UsageError("--kernel-csv needs --labels")

    config = resolve_config(options)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    spectrum: Dict[str, Any] = {}
    if manifest is not None:
        series, labels = dataio.load_manifest_series(Path(manifest))
        build = kernelcore.build_gaussian_kernel(
            series, band=config.get("kernel.band"), n_jobs=config.threads
        )
        kernel = build.kernel
        dataio.write_matrix_csv(out / "distances.csv", build.distances)
        spectrum["delta"] = build.delta
        spectrum["manifest"] = str(Path(manifest).resolve())
    else:
        kernel = KernelMatrix(dataio.read_matrix_csv(Path(kernel_csv)))
        labels = dataio.read_labels(Path(labels_path))
        spectrum["delta"] = None
        spectrum["manifest"] = None
    if len(labels) != kernel.n:
        raise DimensionError(f"{len(labels)} labels for a {kernel.n}x{kernel.n} kernel")

    summary = kernelcore.spectrum_summary(kernelcore.gram_spectrum(kernel))
    spectrum["clipped_count"] = 0
    if config.get("kernel.clip_psd"):
        kernel, spectrum["clipped_count"] = kernelcore.clip_psd(kernel)
    spectrum.update(summary)
    spectrum["kernel_sha256"] = kernel.sha256()
    spectrum["config"] = config.to_dict()

    dataio.write_matrix_csv(out / KERNEL_FILE, kernel.values)
    dataio.write_labels(out / LABELS_FILE, labels)
    dataio.write_json(out / SPECTRUM_FILE, spectrum)

    click.echo(f"[OK] Kernel {kernel.n}x{kernel.n} written to {out / KERNEL_FILE}")
    click.echo(f"     lambda_min={summary['lambda_min']:.6g} lambda_max={summary['lambda_max']:.6g} "
               f"negative={summary['negative_count']}")
