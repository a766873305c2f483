"""Terminal display functions for texfx."""

import math

import click

from .utils import format_duration


def warn(message):
    click.secho(f"Warning: {message}", fg="yellow", err=True)


def _rule():
    click.secho(f"{'─' * 60}", fg="bright_black")


def display_transfer(result, out_path):
    """Show the per-level objective and where the output went."""
    click.echo()
    _rule()
    click.secho(f" Transfer ({result.depth} pyramid levels)", fg="cyan", bold=True)
    _rule()

    for level, value in enumerate(result.level_objectives(), start=1):
        click.echo(f"  level {level:2d}  objective {value:12.4f}")

    click.echo()
    click.secho(f"  Output: {out_path}", fg="green")
    click.secho(f"  Time:   {format_duration(result.wall_time)}", fg="bright_black")


def display_analysis(report):
    """Table of colour and scale reliability per partition mode."""
    if not report.modes:
        click.echo("No partition modes analyzed.")
        return

    by_color = max(report.modes, key=lambda m: m.r_color).mode
    finite = [m for m in report.modes if math.isfinite(m.r_scale)]
    by_scale = max(finite, key=lambda m: m.r_scale).mode if finite else None

    click.echo()
    _rule()
    click.secho(f" Reliability {report.image}", fg="cyan", bold=True)
    _rule()
    click.echo(f"  {'mode':<10}{'r_color':>10}{'r_scale':>10}")
    for m in report.modes:
        scale = f"{m.r_scale:10.3f}" if math.isfinite(m.r_scale) else f"{'inf':>10}"
        click.echo(f"  {m.mode:<10}", nl=False)
        click.secho(f"{m.r_color:10.3f}", fg="green" if m.mode == by_color else None, nl=False)
        click.secho(scale, fg="green" if m.mode == by_scale else None)


def display_batch(entries, out_dir):
    """Successes and failures of a batch run."""
    failed = [e for e in entries if e["status"] != "ok"]

    click.echo()
    _rule()
    click.secho(f" Batch ({len(entries) - len(failed)}/{len(entries)} succeeded)", fg="cyan", bold=True)
    _rule()

    for entry in entries:
        if entry["status"] == "ok":
            click.secho(f"  ✓ {entry['name']}", fg="green")
        else:
            click.secho(f"  ✗ {entry['name']}: {entry['error']}", fg="red")

    click.echo()
    click.secho(f"  Outputs in {out_dir}", fg="bright_black")
