"""Run and tagger configuration files (TOML).

A config file may hold a ``[run]`` table and a ``[tagger]`` table. Paths are
taken relative to the working directory. Precedence is flags > file > the
built-in defaults, which point at the fixtures shipped inside the package.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .tagger import TaggerConfig

DATA_DIR = Path(str(resources.files("moralgate") / "data"))
DEFAULT_CORPUS = DATA_DIR / "corpus" / "default.jsonl"
ENVIRONMENTAL_CORPUS = DATA_DIR / "corpus" / "environmental.jsonl"
DEFAULT_SCRIPT = DATA_DIR / "scripts" / "default.json"
ENVIRONMENTAL_SCRIPT = DATA_DIR / "scripts" / "environmental.json"
CANONICAL_RULES = DATA_DIR / "rules" / "canonical.pl"
LISTING1_RULES = DATA_DIR / "rules" / "listing1.pl"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    corpus_path: str = str(DEFAULT_CORPUS)
    ruleset_path: str = str(CANONICAL_RULES)
    script_path: str = str(DEFAULT_SCRIPT)
    tagger_config_path: Optional[str] = None
    k: int = 1
    temperature: float = 0.7
    output_dir: str = "out"
    parallelism: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError("temperature must lie in [0, 2]")

    def check_files(self) -> None:
        paths = [self.corpus_path, self.ruleset_path, self.script_path]
        if self.tagger_config_path:
            paths.append(self.tagger_config_path)
        missing = [p for p in paths if not Path(p).is_file()]
        if missing:
            raise ConfigError(f"missing input file(s): {', '.join(missing)}")

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def tagger(self) -> TaggerConfig:
        if self.tagger_config_path:
            return load_tagger_config(self.tagger_config_path)
        return TaggerConfig()


_RUN_KEYS = {f.name for f in fields(RunConfig)}
# short aliases accepted in config files
_ALIASES = {"corpus": "corpus_path", "rules": "ruleset_path", "script": "script_path",
            "tagger_config": "tagger_config_path"}


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def tagger_config_from(data: Mapping) -> TaggerConfig:
    table = data.get("tagger", data)
    try:
        return TaggerConfig.from_mapping(table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid tagger config: {exc}") from None


def load_tagger_config(path) -> TaggerConfig:
    return tagger_config_from(read_toml(path))


def load_run_config(path=None, **overrides: Any) -> RunConfig:
    values: dict[str, Any] = {}
    if path is not None:
        data = read_toml(path)
        for key, value in data.get("run", {}).items():
            key = _ALIASES.get(key, key)
            if key not in _RUN_KEYS:
                raise ConfigError(f"{path}: unknown [run] option {key!r}")
            values[key] = value
        if "tagger" in data and "tagger_config_path" not in values:
            values["tagger_config_path"] = str(path)
    try:
        return RunConfig(**values).with_overrides(**overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
