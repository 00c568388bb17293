"""Pipeline configuration: TOML file plus command-line overrides."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .localization import NON_SOURCE_SUFFIXES

log = logging.getLogger(__name__)

# TOML keys holding lists that become tuples on the config object.
_LIST_KEYS = {
    "top_k": (int, "a list of positive integers"),
    "non_source_suffixes": (str, "a list of suffix strings"),
    "copulative": (str, "a list of conjunction strings"),
    "adversative": (str, "a list of conjunction strings"),
}


@dataclass(frozen=True)
class PipelineConfig:
    # input locations (command-line flags override these)
    reviews: str | None = None
    commits: str | None = None
    repo: str | None = None
    constraints: str | None = None
    truth: str | None = None
    # clustering
    seed: int = 0
    k: int | None = None
    pca_components: int | None = None
    pca_variance: float = 0.95
    max_iter: int = 100
    restarts: int = 10
    # localization and evaluation
    top_k: tuple[int, ...] = (1, 5, 10)
    non_source_suffixes: tuple[str, ...] = NON_SOURCE_SUFFIXES
    # text handling
    classify_fallback: bool = False
    lemma_path: str | None = None
    stopword_path: str | None = None
    acronym_path: str | None = None
    strings_xml: str | None = None
    copulative: tuple[str, ...] | None = None  # None keeps the built-in list
    adversative: tuple[str, ...] | None = None


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Load settings from a TOML file; None yields the defaults."""
    if path is None:
        return PipelineConfig()
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    values = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            log.warning("ignoring unknown config key %r", key)
            continue
        if key in _LIST_KEYS:
            want, describe = _LIST_KEYS[key]
            ok = isinstance(value, list) and all(
                isinstance(v, want) and (want is not int or v > 0) for v in value
            )
            if not ok:
                raise ConfigError(f"{key} must be {describe}")
            value = tuple(value)
        values[key] = value
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"invalid config values: {exc}") from exc


def with_overrides(config: PipelineConfig, **overrides) -> PipelineConfig:
    """Apply non-None override values on top of `config`."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **changes) if changes else config
