"""
Handles the loading of scenario settings from a `key = value` text file.
"""

from __future__ import annotations

import pathlib


def read_config_file(config_path: pathlib.Path) -> dict[str, str]:

    config_text = config_path.read_text(encoding="utf-8")

    return parse_config_text(text=config_text, source=str(config_path))


def normalise_key(key: str) -> str:
    """
    Config keys may be written as the long flag names (`T-true`) or with underscores.
    """

    return key.strip().lstrip("-").replace("-", "_")


def parse_config_text(text: str, source: str = "<text>") -> dict[str, str]:
    """
    Parses `key = value` lines; blank lines and `#` comments are skipped.
    """

    settings: dict[str, str] = {}

    for i_line, raw_line in enumerate(text.splitlines(), start=1):

        line = raw_line.split("#", maxsplit=1)[0].strip()

        if not line:
            continue

        if "=" not in line:
            msg = f"{source}, line {i_line}: expected `key = value` (got `{raw_line}`)"
            raise ValueError(msg)

        (raw_key, raw_value) = line.split("=", maxsplit=1)

        key = normalise_key(raw_key)
        value = raw_value.strip()

        if not key or not value:
            raise ValueError(f"{source}, line {i_line}: empty key or value")

        if key in settings:
            raise ValueError(f"{source}, line {i_line}: duplicate key `{key}`")

        settings[key] = value

    return settings
