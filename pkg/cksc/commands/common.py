"""
Shared plumbing for cksc commands: run options, config resolution,
kernel-directory loading and error mapping.
"""

import functools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click

from cksc import dataio
from cksc.config import RunConfig
from cksc.errors import CkscError
from cksc.kernelcore import KernelMatrix

logger = logging.getLogger(__name__)

KERNEL_FILE = "kernel.csv"
LABELS_FILE = "labels.csv"
SPECTRUM_FILE = "spectrum.json"

# flag name -> config key
OPTION_KEYS = {
    "seed": "train.seed",
    "threads": "runtime.threads",
    "alpha": "train.alpha",
    "sparsity": "train.sparsity",
    "atoms": "train.atoms",
    "folds": "eval.folds",
    "repeats": "eval.repeats",
    "clip_psd": "kernel.clip_psd",
    "band": "kernel.band",
}


class CommandError(click.ClickException):
    """ClickException carrying the exit code of the library error behind it."""

    def __init__(self, error: CkscError):
        super().__init__(str(error))
        self.exit_code = error.exit_code


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Attach the flags every pipeline command accepts."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON config file"),
        click.option("--preset", type=click.Choice(sorted(RunConfig.PRESETS)),
                     help="Named parameter preset"),
        click.option("--seed", type=int, help="Master random seed"),
        click.option("--threads", type=int, help="Worker threads (1 = sequential)"),
        click.option("--alpha", type=float, help="Discriminant weight"),
        click.option("--sparsity", "-T", type=int, help="Non-zeros per code and per atom"),
        click.option("--atoms", type=int, help="Dictionary size (default p x T)"),
        click.option("--folds", type=int, help="Cross-validation folds"),
        click.option("--repeats", type=int, help="Repeats of the split protocol"),
        click.option("--clip-psd/--no-clip-psd", default=None, help="Clip negative kernel eigenvalues"),
        click.option("--band", type=int, help="Sakoe-Chiba band half-width"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def resolve_config(options: Dict[str, Any], extra: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Build the effective RunConfig from popped run options plus extra overrides."""
    overrides = {key: options.pop(name, None) for name, key in OPTION_KEYS.items()}
    overrides.update(extra or {})
    return RunConfig.resolve(
        path=options.pop("config_path", None),
        preset=options.pop("preset", None),
        overrides=overrides,
    )


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Turn library errors into ClickExceptions with the matching exit code."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except CkscError as e:
            logger.error("%s: %s", type(e).__name__, e)
            raise CommandError(e) from e

    return wrapper


@dataclass(frozen=True)
class KernelDir:
    """Output of `cksc kernel`: kernel, labels and spectrum metadata."""

    path: Path
    kernel: KernelMatrix
    labels: List[str]
    spectrum: Dict[str, Any]

    @property
    def delta(self) -> Optional[float]:
        return self.spectrum.get("delta")

    @property
    def manifest(self) -> Optional[Path]:
        manifest = self.spectrum.get("manifest")
        return Path(manifest) if manifest else None


def load_kernel_dir(path: Path) -> KernelDir:
    path = Path(path)
    kernel_file = path / KERNEL_FILE
    if not kernel_file.exists():
        raise click.ClickException(f"No {KERNEL_FILE} in {path}. Run: cksc kernel")
    kernel = KernelMatrix(dataio.read_matrix_csv(kernel_file))
    labels = dataio.read_labels(path / LABELS_FILE)
    spectrum_file = path / SPECTRUM_FILE
    spectrum = dataio.read_json(spectrum_file) if spectrum_file.exists() else {}
    return KernelDir(path, kernel, labels, spectrum)
