"""Line-oriented ``key = value`` config files."""
from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ParseError

_SECTION = "root"


def read_kv(path) -> dict:
    """Parse a section-less ``key = value`` file into an ordered dict of strings.

    ``#`` and ``;`` start comments.  Duplicate keys are an error.
    """
    text = Path(path).read_text(encoding="utf-8")
    return parse_kv(text)


def parse_kv(text: str) -> dict:
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        interpolation=None, strict=True,
    )
    parser.optionxform = str
    # every line stands alone: no continuation lines, no sections
    lines = [line.strip() for line in text.splitlines()]
    for n, line in enumerate(lines, start=1):
        if not line or line[0] in "#;":
            continue
        key, sep, _ = line.partition("=")
        if not sep or not key.strip() or line.startswith("["):
            raise ParseError(f"expected 'key = value', got {line!r}", n)
    body = "\n".join(lines)
    try:
        parser.read_string(f"[{_SECTION}]\n" + body)
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r}", exc.lineno - 1) from None
    except configparser.Error as exc:
        raise ParseError(str(exc).replace(f"[{_SECTION}]", "")) from None
    return dict(parser[_SECTION])


def write_kv(path, values: dict) -> None:
    lines = [f"{k} = {v}" for k, v in values.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def get_float(cfg: dict, key: str, default=None) -> float:
    if key not in cfg:
        if default is None:
            raise ParseError(f"missing key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ParseError(f"key {key!r}: expected a number, got {cfg[key]!r}") from None


def get_int(cfg: dict, key: str, default=None) -> int:
    if key not in cfg:
        if default is None:
            raise ParseError(f"missing key {key!r}")
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ParseError(f"key {key!r}: expected an integer, got {cfg[key]!r}") from None


def get_bool(cfg: dict, key: str, default: bool) -> bool:
    if key not in cfg:
        return default
    v = cfg[key].strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ParseError(f"key {key!r}: expected on/off, got {cfg[key]!r}")
