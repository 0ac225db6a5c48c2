"""
Run configuration for cksc

Resolution order (later wins): defaults, preset, config file, flags.
"""

import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from cksc.errors import ConfigError
from cksc.trainer import Hyperparams

logger = logging.getLogger(__name__)


class RunConfig:
    """
    Resolved parameters for one cksc invocation.

    Sections:
    - kernel: DTW band and PSD clipping
    - train: alpha, sparsity T, atom count override, stopping rule, seed
    - nqp: inner solver tolerance and pass limit
    - eval: folds, repeats, holdout fraction, mode (cv | holdout)
    - sweep: swept parameter and its grid
    - runtime: worker threads
    """

    DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
        "kernel": {"band": None, "clip_psd": False},
        "train": {
            "alpha": 0.1,
            "sparsity": 4,
            "atoms": None,
            "max_outer": 50,
            "rel_tol": 1e-4,
            "seed": 0,
        },
        "nqp": {"tol": 1e-8, "max_inner": 100},
        "eval": {"folds": 5, "repeats": 1, "test_fraction": 0.3, "mode": "cv"},
        "sweep": {"param": "alpha", "values": [0.05, 0.1, 0.2, 0.4, 0.8]},
        "runtime": {"threads": 1},
    }

    # Tuned per-dataset settings
    PRESETS: Dict[str, Dict[str, Any]] = {
        "cricket": {"train.sparsity": 6, "train.alpha": 0.2},
        "words": {"train.sparsity": 8, "train.alpha": 0.2},
        "schunk": {"train.sparsity": 5, "train.alpha": 0.15},
        "utkinect": {"train.sparsity": 7, "train.alpha": 0.1},
        "dyntex": {"train.sparsity": 15, "train.alpha": 0.15},
    }

    def __init__(self, data: Optional[Dict[str, Any]] = None):
        self._data: Dict[str, Dict[str, Any]] = copy.deepcopy(self.DEFAULT_CONFIG)
        if data:
            self.merge(data)
        self.validate()

    @classmethod
    def resolve(
        cls,
        path: Optional[Path] = None,
        preset: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> "RunConfig":
        """Defaults, then preset, then the JSON file, then flag overrides (None = unset)."""
        config = cls()
        if preset is not None:
            if preset not in cls.PRESETS:
                raise ConfigError(f"Unknown preset '{preset}'; choose from {', '.join(sorted(cls.PRESETS))}")
            for key, value in cls.PRESETS[preset].items():
                config.set(key, value)
        if path is not None:
            config.merge(cls._read(Path(path)))
        for key, value in (overrides or {}).items():
            if value is not None:
                config.set(key, value)
        config.validate()
        logger.debug("Resolved config: %s", config.to_dict())
        return config

    @staticmethod
    def _read(path: Path) -> Dict[str, Any]:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a JSON object")
        return data

    def merge(self, data: Dict[str, Any]) -> None:
        for section, values in data.items():
            if section not in self._data:
                raise ConfigError(f"Unknown config section '{section}'")
            if not isinstance(values, dict):
                raise ConfigError(f"Config section '{section}' must be an object")
            for key, value in values.items():
                self.set(f"{section}.{key}", value)

    def get(self, key: str, default: Any = None) -> Any:
        """Get a value using dot notation (e.g. 'train.alpha')."""
        value: Any = self._data
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> None:
        """Set a known key using dot notation; unknown keys raise ConfigError."""
        section, _, name = key.partition(".")
        if section not in self._data or name not in self._data[section]:
            raise ConfigError(f"Unknown config key '{key}'")
        self._data[section][name] = value

    def _number(self, key: str, kind: type, low: Optional[float] = None,
                high: Optional[float] = None, nullable: bool = False,
                inclusive_low: bool = True) -> None:
        value = self.get(key)
        if value is None and nullable:
            return
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{key}' must be a number, got {value!r}")
        if kind is int and value != int(value):
            raise ConfigError(f"'{key}' must be an integer, got {value!r}")
        if low is not None and (value < low or (not inclusive_low and value == low)):
            raise ConfigError(f"'{key}' = {value} is out of range")
        if high is not None and value >= high:
            raise ConfigError(f"'{key}' = {value} is out of range")
        self._data[key.split(".")[0]][key.split(".")[1]] = kind(value)

    def validate(self) -> None:
        self._number("kernel.band", int, 1, nullable=True)
        if not isinstance(self.get("kernel.clip_psd"), bool):
            raise ConfigError("'kernel.clip_psd' must be true or false")
        self._number("train.alpha", float, 0)
        self._number("train.sparsity", int, 1)
        self._number("train.atoms", int, 1, nullable=True)
        self._number("train.max_outer", int, 1)
        self._number("train.rel_tol", float, 0, inclusive_low=False)
        self._number("train.seed", int, 0)
        self._number("nqp.tol", float, 0, inclusive_low=False)
        self._number("nqp.max_inner", int, 1)
        self._number("eval.folds", int, 2)
        self._number("eval.repeats", int, 1)
        self._number("eval.test_fraction", float, 0, 1, inclusive_low=False)
        if self.get("eval.mode") not in ("cv", "holdout"):
            raise ConfigError(f"'eval.mode' must be cv or holdout, got {self.get('eval.mode')!r}")
        if self.get("sweep.param") not in ("alpha", "sparsity"):
            raise ConfigError(f"'sweep.param' must be alpha or sparsity, got {self.get('sweep.param')!r}")
        values = self.get("sweep.values")
        if not isinstance(values, list) or not values or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            raise ConfigError("'sweep.values' must be a non-empty list of numbers")
        self._number("runtime.threads", int, 1)

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            alpha=self.get("train.alpha"),
            sparsity=self.get("train.sparsity"),
            atoms=self.get("train.atoms"),
            max_outer=self.get("train.max_outer"),
            rel_tol=self.get("train.rel_tol"),
            seed=self.get("train.seed"),
            nqp_tol=self.get("nqp.tol"),
            max_inner=self.get("nqp.max_inner"),
        )

    @property
    def threads(self) -> int:
        return int(self.get("runtime.threads"))

    def save(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self._data, f, indent=2, sort_keys=True)

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self._data)
