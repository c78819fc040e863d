"""Render figures from a pcnsim results directory."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .render import MissingColumnError, render_all


@click.command()
@click.option("--in", "results_dir", required=True, type=click.Path(exists=True),
              help="Results directory produced by the simulator CLI.")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Directory for the rendered figures.")
@click.option("--format", "fmt", type=click.Choice(["svg", "png"]), default="svg",
              show_default=True)
def main(results_dir: str, out_dir: str, fmt: str) -> None:
    """Render one figure per recognized CSV; absent analyses are skipped."""
    try:
        written = render_all(results_dir, out_dir, fmt)
    except MissingColumnError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if not written:
        click.echo("no recognized CSVs found; nothing rendered", err=True)
        sys.exit(1)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
