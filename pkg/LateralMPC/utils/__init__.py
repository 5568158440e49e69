from .get_rng import get_random_generator
from .utils import (
    eval_callbacks,
    dump,
    load,
)
from .config import (
    ConfigMixin,
    apply_overrides,
    parse_override,
    preset_path,
    read_yaml,
    write_yaml,
)

__all__ = [
    "get_random_generator",
    "eval_callbacks",
    "dump",
    "load",
    "ConfigMixin",
    "apply_overrides",
    "parse_override",
    "preset_path",
    "read_yaml",
    "write_yaml",
]
