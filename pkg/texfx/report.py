"""Report, sidecar and debug artifact generation for texfx."""

import json
import math
from pathlib import Path

import numpy as np
from matplotlib import colormaps
from PIL import Image

from .errors import ImageIOError
from .textgeometry import width_scatter


def _jsonable(value):
    """Convert numpy scalars/arrays to plain Python; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def save_json(path, data):
    """
    Write data as UTF-8 JSON with sorted keys.

    Returns the path written.
    """
    path = Path(path)
    if not path.parent.exists():
        raise ImageIOError("Output directory does not exist", path.parent)
    text = json.dumps(_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    except OSError as e:
        raise ImageIOError(f"Cannot write JSON ({e})", path)
    return path


def generate_transfer_sidecar(result, params, seed, inputs, include_time=True):
    """
    Reproducibility record for one synthesized image.

    Holds the resolved parameters, the seed, the input paths, the objective
    trace grouped by pyramid level and the wall time.
    """
    levels = {}
    for entry in result.trace:
        levels.setdefault(entry["level"], []).append({
            "sweep": entry["sweep"],
            "before": entry["before"],
            "after": entry["after"],
            "candidate": entry["candidate"],
            "accepted": entry["accepted"],
            "kept": entry["kept"],
        })

    sidecar = {
        "params": params.to_dict(),
        "seed": int(seed),
        "inputs": {k: str(v) for k, v in inputs.items()},
        "pyramid_depth": result.depth,
        "objective": [
            {"level": level, "final": sweeps[-1]["after"], "sweeps": sweeps}
            for level, sweeps in sorted(levels.items())
        ],
    }
    if include_time:
        sidecar["wall_time"] = result.wall_time
    return sidecar


def generate_analysis_report(report):
    return report.to_dict()


def generate_batch_manifest(entries, params, base_seed):
    """Manifest of a batch run; entries are dicts with name/status/seed/output/error."""
    succeeded = [e for e in entries if e["status"] == "ok"]
    return {
        "base_seed": int(base_seed),
        "params": params.to_dict(),
        "summary": {
            "total": len(entries),
            "succeeded": len(succeeded),
            "failed": len(entries) - len(succeeded),
        },
        "glyphs": sorted(entries, key=lambda e: e["name"]),
    }


def save_distance_png(field, path, cmap="viridis"):
    """False-colour rendering of a normalized distance field."""
    norm = field.dist / max(field.max_distance, 1e-12)
    rgba = colormaps[cmap](norm)
    Image.fromarray((rgba[..., :3] * 255).round().astype(np.uint8)).save(path, format="PNG")
    return path


def save_scale_map_png(scale_map, path, cmap="tab10"):
    """Scale map as a palette PNG; palette index l-1 encodes scale l."""
    colors = colormaps[cmap](np.linspace(0.0, 1.0, max(scale_map.levels, 2)))[:, :3]
    palette = (colors * 255).round().astype(np.uint8).ravel().tolist()
    indices = np.ascontiguousarray(scale_map.scal - 1, dtype=np.uint8)
    img = Image.frombytes("P", (indices.shape[1], indices.shape[0]), indices.tobytes())
    img.putpalette(palette)
    img.save(path, format="PNG")
    return path


def dump_geometry(geometry, out_path):
    """Write <stem>.distance.png and <stem>.width.json next to an output file."""
    stem = Path(out_path).with_suffix("")
    return [
        save_distance_png(geometry.field, stem.with_name(stem.name + ".distance.png")),
        save_json(stem.with_name(stem.name + ".width.json"), width_scatter(geometry)),
    ]


def dump_debug(source, out_path):
    """
    Write the source-side intermediates next to an output image.

    Files: the geometry dumps and, when scale statistics exist,
    <stem>.scales.png and <stem>.posterior.json. Returns the paths.
    """
    stem = Path(out_path).with_suffix("")
    written = dump_geometry(source.geometry, out_path)
    if source.statistics is not None:
        stats = source.statistics
        written.append(save_scale_map_png(stats.scale_map, stem.with_name(stem.name + ".scales.png")))
        written.append(save_json(stem.with_name(stem.name + ".posterior.json"), {
            "histogram": stats.histogram,
            "joint": stats.posterior.joint,
            "posterior": stats.posterior.posterior,
            "usable_scales": stats.stack.levels,
        }))
    return written
