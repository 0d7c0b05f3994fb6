"""Plain-text configuration: ``key = value`` lines, ``#`` comments, blank lines ignored."""

from __future__ import annotations

import ast
from pathlib import Path

__all__ = ["parse_config_text", "load_config"]


def _value(text: str):
    text = text.strip()
    if "," in text and not text.startswith(("[", "(", "{", '"', "'")):
        return tuple(_value(part) for part in text.split(",") if part.strip())
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """
    Parse ``key = value`` lines.

    Values are Python literals when they parse as such, comma-separated
    lists become tuples, ``true``/``false`` are booleans and anything else
    stays a string.

    >>> parse_config_text("domain = half  # slab\\nq = 1.5, 2, 4")
    {'domain': 'half', 'q': (1.5, 2, 4)}
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        out[key] = _value(val)
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))
