"""Run configuration: config-file merging and output metadata.

Config files are TOML. Keys may sit at the top level or inside a table named
after the subcommand; command-line flags override file values. Every output
artifact embeds the toolkit version, the effective configuration, and SHA-256
digests of its inputs so runs are auditable and reproducible.
"""

from __future__ import annotations

import difflib
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python 3.10
    import tomli as _toml

from . import __version__
from .errors import DataError

GLOBAL_KEYS = ("seed", "deterministic", "threads", "output_dir", "json")


@dataclass
class RunConfig:
    """Effective parameters for one subcommand invocation."""

    subcommand: str
    values: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    deterministic: bool = False
    threads: int | None = None
    output_dir: Path | None = None
    json_output: bool = False

    def get(self, key: str, default: Any = None) -> Any:
        value = self.values.get(key)
        return default if value is None else value

    def require(self, key: str) -> Any:
        value = self.values.get(key)
        if value is None:
            raise DataError(f"missing required parameter --{key.replace('_', '-')}")
        return value

    def resolve_output(self, name) -> Path:
        path = Path(name)
        if self.output_dir is not None and not path.is_absolute():
            self.output_dir.mkdir(parents=True, exist_ok=True)
            return self.output_dir / path
        return path

    def echo(self) -> dict[str, str]:
        """Flat string form of the effective configuration."""
        out = {"subcommand": self.subcommand}
        for key in ("seed", "deterministic", "threads"):
            value = getattr(self, key)
            if value is not None and value is not False:
                out[key] = str(value)
        if self.output_dir is not None:
            out["output_dir"] = str(self.output_dir)
        for key in sorted(self.values):
            value = self.values[key]
            if value is not None:
                out[key] = str(value)
        return out


def load_config_file(path) -> dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            return _toml.load(handle)
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}", path=path) from None
    except _toml.TOMLDecodeError as exc:
        raise DataError(f"malformed config file: {exc}", path=path) from None


def merge_config(
    subcommand: str,
    known_keys: Mapping[str, type],
    file_values: Mapping[str, Any],
    cli_values: Mapping[str, Any],
) -> dict[str, Any]:
    """Overlay CLI flags on config-file values.

    ``known_keys`` maps parameter names to their expected types. Unknown keys
    are rejected with a close-match suggestion; type mismatches are errors.
    """
    allowed = dict(known_keys)
    for key in GLOBAL_KEYS:
        allowed.setdefault(key, object)

    flat: dict[str, Any] = {}
    for key, value in file_values.items():
        if isinstance(value, dict):
            if key == subcommand:
                flat.update(value)
            # Tables for other subcommands are ignored.
            continue
        flat[key] = value

    merged: dict[str, Any] = {}
    for key, value in flat.items():
        if key not in allowed:
            suggestion = difflib.get_close_matches(key, list(allowed), n=1)
            hint = f" (did you mean {suggestion[0]!r}?)" if suggestion else ""
            raise DataError(f"unknown config key {key!r}{hint}")
        expected = allowed[key]
        if expected is not object:
            if expected is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, expected) or (
                expected in (int, float) and isinstance(value, bool)
            ):
                raise DataError(
                    f"config key {key!r} expects {expected.__name__}, "
                    f"got {type(value).__name__}"
                )
        merged[key] = value

    for key, value in cli_values.items():
        if value is not None:
            merged[key] = value
    return merged


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_metadata(config: RunConfig, inputs: Mapping[str, Any]) -> dict[str, str]:
    meta = {"mtss_version": __version__}
    for key, value in config.echo().items():
        meta[f"config_{key}"] = value
    for name, path in inputs.items():
        if path is not None:
            meta[f"sha256_{name}"] = file_digest(path)
    return meta


def metadata_lines(meta: Mapping[str, str]) -> list[str]:
    return [f"# {key}: {value}" for key, value in meta.items()]
