"""Command-line interface for texfx."""

import functools
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import kernels
from .analysis import analyze_image
from .config import (
    DEFAULT_PARTITIONS,
    DEFAULT_PATCH_SIZES,
    MAX_PARTITION_SAMPLES,
    PARTITION_MODES,
    SYNTHESIS_MODES,
    JobConfig,
    load_params,
)
from .display import display_analysis, display_batch, display_transfer, warn
from .errors import EXIT_OK, EXIT_USAGE, DegenerateInputError, ImageIOError
from .imagecore import load_image, save_image
from .report import (
    dump_debug,
    dump_geometry,
    generate_analysis_report,
    generate_batch_manifest,
    generate_transfer_sidecar,
    save_json,
)
from .samples import GLYPHS, glyph_mask, mask_to_text, neon_ring_pair
from .synthesis import prepare_source, transfer
from .textgeometry import analyze_text
from .utils import derive_seed, split_csv

PATH = click.Path(path_type=Path)


def threads_option(f):
    """Worker processes for batch; compiled-kernel threads for transfer and analyze."""
    return click.option(
        "--threads", type=int, envvar="TEXFX_THREADS",
        help="Batch worker processes, or kernel threads for transfer and analyze",
    )(f)


def _use_kernel_threads(cfg):
    if cfg.threads is not None:
        kernels.set_threads(cfg.threads)


def synthesis_options(f):
    """Flags shared by transfer and batch; unset flags fall through to the parameter file."""
    options = [
        click.option("--source-text", type=PATH, help="Raw source text image S (PNG)"),
        click.option("--source-style", type=PATH, help="Stylized source image S' (PNG)"),
        click.option("--params", "params_file", type=PATH, help="JSON file of parameter overrides"),
        click.option("--seed", type=int, help="Random seed"),
        click.option("--lambda1", type=float, help="Weight of the distribution term"),
        click.option("--lambda2", type=float, help="Weight of the psycho-visual term"),
        click.option("--lambda3", type=float, help="Weight of the text-shape part of the appearance term"),
        click.option("--omega", type=float, help="Scale detection threshold"),
        click.option("--patch-size", type=int, help="Patch side (odd, >= 3)"),
        click.option("--scales", type=int, help="Number of joint patch scales"),
        click.option("--pyramid-depth", type=int, help="Pyramid levels"),
        click.option("--coarsest", type=int, help="Long side of the coarsest level in pixels"),
        click.option("--iterations", type=int, help="PatchMatch sweeps per level"),
        click.option("--mode", type=click.Choice(SYNTHESIS_MODES), help="baseline or full objective"),
        click.option("--threshold", type=float, help="Binarization threshold for text images"),
        click.option("--outlier-fraction", type=float, help="Rank fraction of the width regression floor"),
        click.option("--dump-debug", is_flag=True, help="Write distance, width, scale and posterior dumps"),
        click.option("--verbose", is_flag=True, help="Show progress information"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def resolve_params(params_file=None, **overrides):
    return load_params(params_file).with_overrides(**overrides)


def _param_overrides(kwargs):
    names = ("seed", "lambda1", "lambda2", "lambda3", "omega", "patch_size", "scales",
             "pyramid_depth", "coarsest", "iterations", "mode", "threshold", "outlier_fraction")
    return {name: kwargs.pop(name) for name in names}


def run_transfer(cfg):
    """Synthesize one target; writes the PNG and its JSON sidecar."""
    params = cfg.params
    _use_kernel_threads(cfg)
    source_text = load_image(cfg.source_text)
    source_style = load_image(cfg.source_style)
    target_text = load_image(cfg.target_text)

    click.echo(f"Preparing source {cfg.source_style.name}...")
    source = prepare_source(source_text, source_style, params, verbose=cfg.verbose)
    click.echo(f"Synthesizing {cfg.target_text.name}...")
    result = transfer(source_text, source_style, target_text, params, source=source, verbose=cfg.verbose)

    save_image(result.image, cfg.out)
    save_json(cfg.out.with_suffix(".json"), generate_transfer_sidecar(
        result,
        params,
        params.seed,
        {"source_text": cfg.source_text, "source_style": cfg.source_style, "target_text": cfg.target_text},
    ))
    if cfg.dump_debug:
        dump_debug(source, cfg.out)

    display_transfer(result, cfg.out)
    return EXIT_OK


def _list_targets(target_dir):
    if not target_dir.is_dir():
        raise ImageIOError("Target directory not found", target_dir)
    try:
        targets = sorted(p for p in target_dir.iterdir() if p.suffix.lower() == ".png")
    except OSError as e:
        raise ImageIOError(f"Cannot read target directory ({e})", target_dir)
    if not targets:
        raise ImageIOError("No PNG files in target directory", target_dir)
    return targets


def _batch_one(target, source, source_text, source_style, params, out_dir):
    """Transfer one glyph; returns a manifest entry instead of raising on bad input."""
    seed = derive_seed(params.seed, target.name)
    out = out_dir / f"{target.stem}.png"
    try:
        target_text = load_image(target)
        result = transfer(source_text, source_style, target_text, params, source=source, seed=seed)
        save_image(result.image, out)
        save_json(out.with_suffix(".json"), generate_transfer_sidecar(
            result, params, seed, {"target_text": target},
        ))
    except (DegenerateInputError, ImageIOError) as e:
        return {"name": target.name, "status": "failed", "seed": seed, "output": None, "error": e.format_message()}
    return {"name": target.name, "status": "ok", "seed": seed, "output": out.name, "error": None}


def run_batch(cfg):
    """Synthesize every PNG of a directory against one shared source preprocessing."""
    params = cfg.params
    targets = _list_targets(cfg.target_dir)
    source_text = load_image(cfg.source_text)
    source_style = load_image(cfg.source_style)

    click.echo(f"Preparing source {cfg.source_style.name}...")
    source = prepare_source(source_text, source_style, params, verbose=cfg.verbose)
    cfg.out.mkdir(parents=True, exist_ok=True)
    if cfg.dump_debug:
        dump_debug(source, cfg.out / "source.png")

    job = functools.partial(
        _batch_one,
        source=source,
        source_text=source_text,
        source_style=source_style,
        params=params,
        out_dir=cfg.out,
    )
    entries = []
    with click.progressbar(length=len(targets), label=f"Synthesizing {len(targets)} glyphs") as bar:
        workers = cfg.threads or 1
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for entry in pool.map(job, targets):
                    entries.append(entry)
                    bar.update(1)
        else:
            for target in targets:
                entries.append(job(target))
                bar.update(1)

    save_json(cfg.out / "manifest.json", generate_batch_manifest(entries, params, params.seed))
    display_batch(entries, cfg.out)

    if not any(e["status"] == "ok" for e in entries):
        raise DegenerateInputError(f"All {len(entries)} glyphs failed")
    return EXIT_OK


def run_analyze(cfg):
    """Partition study of one exemplar pair; writes the JSON report."""
    _use_kernel_threads(cfg)
    text_img = load_image(cfg.source_text)
    style_img = load_image(cfg.source_style)
    geometry = None
    if "distance" in cfg.modes or cfg.dump_debug:
        geometry = analyze_text(text_img, cfg.params.threshold, cfg.params.outlier_fraction)

    click.echo(f"Analyzing {cfg.source_style.name} ({len(cfg.modes)} modes)...")
    report = analyze_image(
        text_img,
        style_img,
        modes=cfg.modes,
        n_partitions=cfg.partitions,
        seed=cfg.params.seed,
        patch_sizes=cfg.patch_sizes,
        samples=cfg.samples,
        geometry=geometry,
        name=cfg.source_style.name,
        verbose=cfg.verbose,
    )
    save_json(cfg.report, generate_analysis_report(report))
    if cfg.dump_debug:
        dump_geometry(geometry, cfg.report)
    display_analysis(report)
    click.secho(f"Report saved to: {cfg.report}", fg="green")
    return EXIT_OK


@click.group()
def cli():
    """texfx - Transfer text effects from a stylized exemplar onto new text."""


@cli.command("transfer")
@synthesis_options
@threads_option
@click.option("--target-text", type=PATH, help="Raw target text image T (PNG)")
@click.option("--out", type=PATH, help="Output PNG path; a .json sidecar is written next to it")
def transfer_command(params_file, **kwargs):
    """Synthesize the stylized version of one target text image."""
    overrides = _param_overrides(kwargs)
    cfg = JobConfig(subcommand="transfer", params=resolve_params(params_file, **overrides), **kwargs)
    return run_transfer(cfg.validate())


@cli.command("batch")
@synthesis_options
@click.option("--target-dir", type=PATH, help="Directory of target text PNGs")
@click.option("--out", type=PATH, help="Output directory")
@threads_option
def batch_command(params_file, **kwargs):
    """Synthesize every glyph in a directory with one shared source preprocessing."""
    overrides = _param_overrides(kwargs)
    cfg = JobConfig(subcommand="batch", params=resolve_params(params_file, **overrides), **kwargs)
    return run_batch(cfg.validate())


@cli.command("analyze")
@click.option("--source-text", type=PATH, help="Raw source text image S (PNG)")
@click.option("--source-style", type=PATH, help="Stylized source image S' (PNG)")
@click.option("--report", type=PATH, help="Output JSON report path")
@click.option("--modes", default=",".join(PARTITION_MODES), show_default=True,
              help="Comma separated partition modes")
@click.option("--partitions", type=int, default=DEFAULT_PARTITIONS, show_default=True, help="Partition count")
@click.option("--patch-sizes", default=",".join(str(s) for s in DEFAULT_PATCH_SIZES), show_default=True,
              help="Comma separated odd patch sizes")
@click.option("--samples", type=int, default=MAX_PARTITION_SAMPLES, show_default=True,
              help="Max matched pixels per partition")
@click.option("--params", "params_file", type=PATH, help="JSON file of parameter overrides")
@click.option("--seed", type=int, help="Random seed")
@click.option("--dump-debug", is_flag=True, help="Write the source distance and width dumps next to the report")
@threads_option
@click.option("--threshold", type=float, help="Binarization threshold for text images")
@click.option("--verbose", is_flag=True, help="Show progress information")
def analyze_command(params_file, modes, patch_sizes, seed, threshold, **kwargs):
    """Measure colour and scale reliability of the five partition modes."""
    try:
        sizes = split_csv(patch_sizes, int)
    except ValueError:
        raise click.BadParameter(f"'{patch_sizes}' is not a list of integers", param_hint="'--patch-sizes'")
    cfg = JobConfig(
        subcommand="analyze",
        params=resolve_params(params_file, seed=seed, threshold=threshold),
        modes=split_csv(modes),
        patch_sizes=sizes,
        **kwargs,
    )
    return run_analyze(cfg.validate())


@cli.command("demo")
@click.option("--out", type=PATH, required=True, help="Directory to write the sample images into")
@click.option("--size", type=int, default=192, show_default=True, help="Side of the sample images")
def demo_command(out, size):
    """Write a synthetic neon exemplar pair and a few target glyphs."""
    targets = out / "targets"
    targets.mkdir(parents=True, exist_ok=True)

    text, style = neon_ring_pair(size=size)
    save_image(text, out / "source_text.png")
    save_image(style, out / "source_style.png")
    for name in GLYPHS:
        if name == "O":
            continue
        save_image(mask_to_text(glyph_mask(name, size)), targets / f"{name}.png")

    click.secho(f"Sample images written to {out}", fg="green")
    click.echo("Try:")
    click.echo(f"  texfx batch --source-text {out / 'source_text.png'} "
               f"--source-style {out / 'source_style.png'} --target-dir {targets} --out {out / 'results'}")
    return EXIT_OK


def main(argv=None):
    """Run the CLI and return a process exit code instead of exiting."""
    try:
        rv = cli.main(args=argv, prog_name="texfx", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        warn("Aborted")
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK
