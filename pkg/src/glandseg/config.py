"""Pipeline configuration: a frozen parameter set, an INI file surface for
it, and a stable content hash for provenance.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError

# INI surface -> (dataclass field, parser); section and key names are the
# short forms users see in config files
_SCHEMA: dict[str, dict[str, tuple[str, type]]] = {
    "parameters": {
        "z": ("z", int),
        "w": ("window", int),
        "n": ("n_trees", int),
        "f": ("n_split_features", int),
        "k": ("k", float),
        "seed": ("seed", int),
    },
    "preprocess": {
        "iterations": ("diffusion_iterations", int),
        "kappa": ("diffusion_kappa", float),
        "step": ("diffusion_step", float),
    },
    "forest": {
        "max_depth": ("max_depth", int),
        "min_leaf_size": ("min_leaf_size", int),
    },
    "boundary.thick": {
        "max_steps": ("max_steps", int),
        "min_area": ("min_area", int),
    },
    "boundary.thin": {
        "p": ("p", float),
        "p2": ("p2", float),
        "n": ("n_link_iter", int),
        "border_fraction": ("border_fraction", float),
        "border_band": ("border_band", float),
    },
    "boundary": {
        "n_th": ("n_th", float),
    },
}


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the segmentation pipeline, with validated defaults.

    min_area=None means 0.1% of the image pixel count, resolved per image;
    n_th=None means the regime threshold comes from training (the model
    file), which is the normal mode.
    """

    z: int = 24
    window: int = 5
    n_trees: int = 500
    n_split_features: int = 20
    k: float = 45.0
    seed: int = 0
    diffusion_iterations: int = 15
    diffusion_kappa: float = 30.0
    diffusion_step: float = 0.20
    max_depth: int = 25
    min_leaf_size: int = 2
    max_steps: int = 100
    min_area: int | None = None
    p: float = 10.0
    p2: float = 20.0
    n_link_iter: int = 5
    border_fraction: float = 0.5
    border_band: float = 3.0
    n_th: float | None = None

    def __post_init__(self):
        checks = [
            (self.z >= 16, "z must be >= 16"),
            (self.window >= 3 and self.window % 2 == 1, "W must be odd and >= 3"),
            (self.n_trees >= 1, "N must be >= 1"),
            (self.n_split_features >= 1, "f must be >= 1"),
            (self.k > 0, "k must be > 0"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.diffusion_iterations >= 1, "iterations must be >= 1"),
            (self.diffusion_kappa > 0, "kappa must be > 0"),
            (0 < self.diffusion_step <= 0.25, "step must be in (0, 0.25]"),
            (self.max_depth >= 1, "max_depth must be >= 1"),
            (self.min_leaf_size >= 1, "min_leaf_size must be >= 1"),
            (self.max_steps >= 1, "max_steps must be >= 1"),
            (self.min_area is None or self.min_area >= 0, "min_area must be >= 0"),
            (self.p > 0, "p must be > 0"),
            (self.p2 > 0, "p2 must be > 0"),
            (self.n_link_iter >= 1, "n must be >= 1"),
            (0 < self.border_fraction <= 1, "border_fraction must be in (0, 1]"),
            (self.border_band >= 0, "border_band must be >= 0"),
            (self.n_th is None or self.n_th >= 0, "n_th must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        """Parse an INI config file, rejecting unknown sections and keys."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        values: dict[str, object] = {}
        for section in parser.sections():
            schema = _SCHEMA.get(section)
            if schema is None:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in schema:
                    raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
                field_name, parse = schema[key]
                try:
                    values[field_name] = parse(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"{path}: bad value for '{key}' in [{section}]: {raw!r}"
                    ) from exc
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    def estimator_kwargs(self) -> dict:
        return self.to_dict()

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON form of the parameters."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **overrides) -> "PipelineConfig":
        merged = {f.name: getattr(self, f.name) for f in fields(self)}
        merged.update(overrides)
        return PipelineConfig(**merged)
