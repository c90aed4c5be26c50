"""Flat key-value config files: one "key = value" per line, '#' comments.

Values stay strings here; consumers convert. Diff-friendly by design, and
command-line flags always take precedence over file entries.
"""

from __future__ import annotations

from pathlib import Path

__all__ = ["ConfigError", "parse_kv_text", "load_kv", "dump_kv_text", "save_kv"]


class ConfigError(ValueError):
    """Malformed config file or unusable config value."""


def parse_kv_text(text: str, source: str = "<string>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = value.strip()
    return out


def load_kv(path: str | Path) -> dict[str, str]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_kv_text(text, source=str(p))


def dump_kv_text(kv: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in kv.items())


def save_kv(kv: dict[str, str], path: str | Path) -> None:
    Path(path).write_text(dump_kv_text(kv), encoding="utf-8", newline="\n")
