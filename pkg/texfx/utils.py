"""Utility functions for texfx."""

import hashlib


def format_duration(seconds):
    """Convert seconds to a short human string (e.g., '2m 05s')."""
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(int(round(seconds)), 60)
    if minutes < 60:
        return f"{minutes}m {secs:02d}s"
    hours, minutes = divmod(minutes, 60)
    return f"{hours}h {minutes:02d}m"


def derive_seed(base_seed, name):
    """Per-glyph seed from the base seed and file name, stable across processes."""
    digest = hashlib.sha256(f"{base_seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def split_csv(value, cast=str):
    """Parse a comma separated flag value, dropping empty items."""
    if value is None:
        return None
    return tuple(cast(item.strip()) for item in value.split(",") if item.strip())
