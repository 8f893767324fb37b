"""CLI: export a checkpoint to a container, verify forward parity."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from caneshuffle.errors import CaneError

from . import export as ex


def _fail(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(1)


@click.group()
def main():
    """Checkpoint-to-container exporter."""


@main.command("export")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="model.cnew", show_default=True,
              type=click.Path(dir_okay=False))
def export_cmd(checkpoint, out_path):
    """Convert a torch checkpoint to the weight container format."""
    try:
        nbytes = ex.export_checkpoint(checkpoint, out_path)
    except ex.ExportError as exc:
        raise _fail(str(exc))
    except Exception as exc:
        raise _fail(f"cannot read checkpoint: {exc}")
    click.echo(f"wrote {out_path} ({nbytes} bytes)")


@main.command("verify")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("container", type=click.Path(exists=True, dir_okay=False))
@click.option("--inputs", "n_inputs", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--report", "report_path", default=None,
              type=click.Path(dir_okay=False), help="write the JSON parity report here")
def verify_cmd(checkpoint, container, n_inputs, seed, report_path):
    """Check forward parity between a checkpoint and an exported container."""
    try:
        state = ex.load_checkpoint(checkpoint)
        data = Path(container).read_bytes()
        report = ex.verify_parity(state, data, n_inputs=n_inputs, seed=seed)
    except CaneError as exc:
        raise _fail(f"container rejected: {exc}")
    except Exception as exc:
        raise _fail(f"verification failed to run: {exc}")

    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2))
    if report.flagged:
        click.echo("no comparisons performed (inputs=0); nothing verified")
        raise SystemExit(1)
    click.echo(f"max |logit diff| {report.max_abs_diff:.3e} over "
               f"{report.comparisons} inputs (threshold {report.threshold:g})")
    if not report.passed:
        raise _fail("parity threshold exceeded")


if __name__ == "__main__":
    sys.exit(main())
