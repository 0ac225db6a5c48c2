"""
NQP Solve Command - Run the pursuit solver on a standalone problem

Usage:
    cksc nqp-solve problem.json
    cksc nqp-solve problem.json --out solution.json

The problem file holds {"Q": [[...]], "b": [...], "T": int}.
"""

import json
from pathlib import Path
from typing import Optional

import click

from cksc import dataio, nqp
from cksc.commands.common import handle_errors
from cksc.errors import SchemaError


@click.command("nqp-solve")
@click.argument("problem", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", "out_path", type=click.Path(dir_okay=False), help="Solution JSON")
@click.option("--tol", type=float, default=nqp.DEFAULT_TOL, show_default=True)
@click.option("--max-inner", type=int, default=nqp.DEFAULT_MAX_INNER, show_default=True)
@click.pass_context
@handle_errors
def nqp_solve_cmd(_ctx: click.Context, problem: str, out_path: Optional[str], tol: float,
                  max_inner: int) -> None:
    """Solve min x^T Q x + b^T x, x >= 0, ||x||_0 <= T."""
    data = dataio.read_json(Path(problem))
    if not isinstance(data, dict):
        raise SchemaError("<root>", "expected an object")
    for name in ("Q", "b", "T"):
        if name not in data:
            raise SchemaError(name, "missing")
    try:
        program = nqp.QuadProgram.from_dict(data)
    except (TypeError, ValueError) as e:
        raise SchemaError("Q", f"expected numeric arrays ({e})") from e

    solution = nqp.solve(program, tol=tol, max_inner=max_inner).to_dict()
    if out_path:
        dataio.write_json(Path(out_path), solution)
        click.echo(f"[OK] Solution written to {out_path}")
    else:
        click.echo(json.dumps(solution, indent=2, sort_keys=True))
