"""Line-oriented ``key = value`` files shared by dataset metadata and configs."""
from __future__ import annotations


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped.

    Later duplicates override earlier ones.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        out[key] = value.strip()
    return out


def format_kv(values: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())
