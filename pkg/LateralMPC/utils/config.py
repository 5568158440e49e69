"""Helpers for the YAML parameter and scenario files.

Parameter files are plain YAML mappings whose keys are the field names of
the parameter dataclasses. Every dataclass that mixes in `ConfigMixin` can
be built from such a mapping and written back to one, and the round trip
gives an equal object.
"""
import dataclasses
import os
import re
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml

from ..exceptions import ConfigurationError

PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (`1e-3`)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


def preset_path(name: str) -> Path:
    """Resolve a bundled preset name (with or without `.yaml`) or a path.

    Parameters
    ----------
    * `name` [str or Path]:
        Either an existing file path or the stem of a file in the bundled
        `presets` directory.

    Returns
    -------
    * `path` [Path]:
        Path of an existing file.
    """
    candidate = Path(name)
    if candidate.is_file():
        return candidate
    stem = candidate.name if candidate.suffix else candidate.name + ".yaml"
    bundled = PRESET_DIR / stem
    if bundled.is_file():
        return bundled
    raise ConfigurationError(f"Configuration file \"{name}\" not found.")


def read_yaml(path) -> Dict[str, Any]:
    """Read a YAML mapping, turning every failure into a
    `ConfigurationError`."""
    try:
        with open(path, "rb") as f:
            config = yaml.load(f, Loader=_Loader)
    except FileNotFoundError:
        raise ConfigurationError(f"Configuration file \"{path}\" not found.")
    except yaml.YAMLError as error:
        raise ConfigurationError(f"Could not parse \"{path}\": {error}")
    if not isinstance(config, dict):
        raise ConfigurationError(
            f"Configuration file \"{path}\" must contain a mapping at the "
            "top level."
        )
    return config


def write_yaml(data: Dict[str, Any], path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(data, f, sort_keys=False, default_flow_style=None)


def parse_override(override: str):
    """Split `section.key=value` into (["section", "key"], value) with the
    value parsed as YAML, so `1e-3`, `true` and `[1, 2]` come out typed."""
    if "=" not in override:
        raise ConfigurationError(
            f"Override \"{override}\" must have the form section.key=value."
        )
    key, value = override.split("=", 1)
    path = [part for part in key.strip().split(".") if part]
    if not path:
        raise ConfigurationError(f"Override \"{override}\" has an empty key.")
    try:
        parsed = yaml.load(value, Loader=_Loader)
    except yaml.YAMLError as error:
        raise ConfigurationError(f"Bad override value in \"{override}\": {error}")
    return path, parsed


def apply_overrides(config: Dict[str, Any], overrides: Iterable[str],
                    sections: Optional[Iterable[str]] = None) -> Dict[str, Any]:
    """Return a copy of `config` with the overrides applied.

    Only the section is checked here; unknown keys inside a section are
    rejected later by `ConfigMixin.from_dict`.

    Parameters
    ----------
    * `config` [dict]:
        Raw configuration mapping.

    * `overrides` [iterable of str]:
        `section.key=value` strings.

    * `sections` [iterable of str, optional]:
        Allowed top-level sections. Overrides for other sections raise a
        `ConfigurationError`.
    """
    updated = _deep_copy(config)
    for override in overrides:
        path, value = parse_override(override)
        if sections is not None and path[0] not in sections:
            raise ConfigurationError(
                f"Unknown configuration section \"{path[0]}\" in override "
                f"\"{override}\"."
            )
        node = updated
        for part in path[:-1]:
            child = node.get(part)
            if child is None:
                child = {}
                node[part] = child
            elif not isinstance(child, dict):
                raise ConfigurationError(
                    f"Override \"{override}\" descends into the scalar "
                    f"\"{part}\"."
                )
            node = child
        node[path[-1]] = value
    return updated


def _deep_copy(config):
    if isinstance(config, dict):
        return {key: _deep_copy(value) for key, value in config.items()}
    if isinstance(config, list):
        return [_deep_copy(value) for value in config]
    return config


def _to_builtin(value):
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        # numpy scalars
        return value.item()
    if hasattr(value, "value") and isinstance(value, str):
        # str-valued enums
        return value.value
    return value


class ConfigMixin:
    """Dict and YAML conversion for frozen parameter dataclasses.

    Subclasses list nested config classes in `_nested` (field name ->
    class). Tuple conversion of list values is left to each class's
    `__post_init__`.
    """
    _nested: Dict[str, type] = {}

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], section: str = None):
        """Build an instance from a mapping of field names to values.

        Parameters
        ----------
        * `data` [dict or None]:
            Field values; missing fields take their defaults.

        * `section` [str, optional]:
            Name used in error messages.
        """
        section = section or cls.__name__
        data = {} if data is None else data
        if not isinstance(data, dict):
            raise ConfigurationError(
                f"Section \"{section}\" must be a mapping, got {type(data).__name__}."
            )
        names = {f.name for f in dataclasses.fields(cls) if f.init}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigurationError(
                f"Unknown key(s) {unknown} in section \"{section}\"."
            )
        kwargs = {}
        for key, value in data.items():
            nested = cls._nested.get(key)
            if nested is not None and isinstance(value, dict):
                value = nested.from_dict(value, section=f"{section}.{key}")
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as error:
            raise ConfigurationError(f"Invalid section \"{section}\": {error}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            f.name: _to_builtin(getattr(self, f.name))
            for f in dataclasses.fields(self)
            if f.init
        }


def relative_to(base_file, name) -> str:
    """Resolve `name` relative to the directory holding `base_file` if such
    a file exists, otherwise return `name` untouched."""
    candidate = os.path.join(os.path.dirname(os.fspath(base_file)), os.fspath(name))
    if os.path.isfile(candidate):
        return candidate
    return os.fspath(name)
