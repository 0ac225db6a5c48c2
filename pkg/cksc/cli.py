"""
cksc CLI - Main entry point

Usage:
    cksc <command> [options]

Commands:
    synthetic   Generate a class-templated dataset
    kernel      Build the Gaussian-of-DTW kernel and its spectrum
    train       Learn the dictionary and export the objective trace
    predict     Code and classify test points
    eval        Cross-validated accuracy and interpretability report
    sweep       One-at-a-time sensitivity sweep
    nqp-solve   Solve a standalone non-negative sparse QP

Environment:
    CKSC_LOG    error | info | debug (overridden by --verbose / --quiet)
"""

import logging
import os
import sys

import click

from cksc import __version__
from cksc.commands import evaluate, kernel, nqp_solve, predict, synthetic, train
from cksc.errors import CkscError

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def resolve_log_level(verbose: bool = False, quiet: bool = False) -> int:
    if quiet:
        return logging.ERROR
    if verbose:
        return logging.DEBUG
    name = os.environ.get("CKSC_LOG", "info").strip().lower()
    if name not in LOG_LEVELS:
        logging.getLogger(__name__).warning("Ignoring unknown CKSC_LOG value '%s'", name)
        return logging.INFO
    return LOG_LEVELS[name]


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Setup logging configuration. Logs go to stderr."""
    logging.basicConfig(
        level=resolve_log_level(verbose, quiet),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    logging.getLogger("joblib").setLevel(logging.WARNING)


@click.group()
@click.version_option(version=__version__, prog_name="cksc")
@click.option("--verbose", "-v", is_flag=True, help="Verbose output")
@click.option("--quiet", "-q", is_flag=True, help="Suppress non-error output")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, quiet: bool) -> None:
    """cksc - Confident kernel sparse coding.

    Pipeline: synthetic -> kernel -> train -> predict, with eval and sweep
    for cross-validated experiments.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["quiet"] = quiet
    setup_logging(verbose, quiet)


cli.add_command(synthetic.synthetic_cmd, name="synthetic")
cli.add_command(kernel.kernel_cmd, name="kernel")
cli.add_command(train.train_cmd, name="train")
cli.add_command(predict.predict_cmd, name="predict")
cli.add_command(evaluate.eval_cmd, name="eval")
cli.add_command(evaluate.sweep_cmd, name="sweep")
cli.add_command(nqp_solve.nqp_solve_cmd, name="nqp-solve")


def main() -> None:
    """Main entry point."""
    try:
        cli(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except click.exceptions.Abort:
        click.echo("\n\nOperation cancelled by user.", err=True)
        sys.exit(130)
    except KeyboardInterrupt:
        click.echo("\n\nOperation cancelled by user.", err=True)
        sys.exit(130)  # Standard exit code for SIGINT
    except CkscError as e:
        logging.getLogger(__name__).error("%s: %s", type(e).__name__, e)
        click.secho(f"Error: {e}", fg="red", err=True)
        sys.exit(e.exit_code)
    except OSError as e:
        logging.getLogger(__name__).error("File system error: %s", e)
        click.secho(f"File system error: {e}", fg="red", err=True)
        sys.exit(1)
    except Exception as e:  # noqa: BLE001 - Intentional catch-all for CLI robustness
        logging.getLogger(__name__).exception("Unexpected error")
        click.secho(f"Unexpected error: {e}", fg="red", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
