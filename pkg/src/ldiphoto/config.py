"""Pipeline configuration: one dataclass holding every tunable, loadable from
the key-value config text format and overridable from CLI flags."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError
from .fileio import parse_config_text


@dataclass
class PipelineConfig:
    threshold: float = 0.04
    filter_window: int = 7
    sigma_spatial: float = 4.0
    sigma_intensity: float = 0.5
    min_edge_length: int = 10
    scale_edge_length: bool = False  # linear rescale with long side / 1024
    n_syn: int = 40
    n_ctx: int = 100
    dilate: int = 5
    depth_cap: int = 8
    backend: str = "diffusion"
    diffusion_tol: float = 1e-6
    diffusion_max_iter: int = 10000
    focal_factor: float = 0.8
    disp_a: float = 0.9
    disp_b: float = 0.1
    shuffle_edges: bool = False
    seed: int = 0

    def validate(self):
        if self.threshold <= 0:
            raise ConfigError(f"threshold must be positive, got {self.threshold}")
        if self.filter_window < 1 or self.filter_window % 2 == 0:
            raise ConfigError(f"filter_window must be odd, got {self.filter_window}")
        if self.sigma_spatial <= 0 or self.sigma_intensity <= 0:
            raise ConfigError("filter sigmas must be positive")
        if self.min_edge_length < 1:
            raise ConfigError("min_edge_length must be >= 1")
        if self.n_syn < 0 or self.n_ctx < 0 or self.dilate < 0:
            raise ConfigError("region iteration counts must be >= 0")
        if self.depth_cap < 1:
            raise ConfigError("depth_cap must be >= 1")
        if self.backend not in ("diffusion", "subprocess"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.diffusion_tol <= 0 or self.diffusion_max_iter < 1:
            raise ConfigError("diffusion solver parameters invalid")
        if self.focal_factor <= 0:
            raise ConfigError("focal_factor must be positive")
        if self.disp_a <= 0 or self.disp_b < 0:
            raise ConfigError("disparity-to-depth coefficients invalid")
        return self

    @classmethod
    def from_text(cls, text):
        raw = parse_config_text(text)
        cfg = cls()
        by_name = {f.name: f for f in fields(cls)}
        for key, value in raw.items():
            f = by_name.get(key)
            if f is None:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                if f.type in ("bool", bool):
                    parsed = value.lower() in ("1", "true", "yes", "on")
                elif f.type in ("int", int):
                    parsed = int(value)
                elif f.type in ("float", float):
                    parsed = float(value)
                else:
                    parsed = value
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
            setattr(cfg, key, parsed)
        return cfg.validate()

    @classmethod
    def from_file(cls, path):
        try:
            text = open(path).read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}
