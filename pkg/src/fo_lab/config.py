"""Run configuration: one YAML document per run, one master seed for all randomness."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import yaml

from .errors import ConfigError
from .toy_schemes import scheme_from_config

COMMANDS = ("demo", "games", "stats", "bounds", "spread")
FORMATS = ("json", "csv")

# Named toy instances, usable as `scheme: {preset: NAME}`.
SCHEME_PRESETS = {
    "toy-perfect": {"kind": "synthetic", "msg_bits": 4, "rand_space_size": 256, "key_space_size": 16,
                    "failure": {"kind": "never"}},
    "toy-delta-1/16": {"kind": "synthetic", "msg_bits": 4, "rand_space_size": 256, "key_space_size": 16,
                       "failure": {"kind": "large-r", "cut": 240}},
    "toy-threshold": {"kind": "synthetic", "msg_bits": 4, "rand_space_size": 16, "key_space_size": 16,
                      "failure": {"kind": "threshold", "threshold": 28}},
    "toy-parity": {"kind": "synthetic", "msg_bits": 4, "rand_space_size": 64, "key_space_size": 64,
                   "failure": {"kind": "parity"}, "leak_mask": 1},
    "micro-lwe": {"kind": "micro-lwe", "n": 2, "q": 17, "chi": [-1, 0, 1], "msg_bits": 1},
}


DEFAULT_SCHEME = {"preset": "toy-perfect"}


def resolve_scheme(cfg: dict | None):
    """Scheme from a config mapping; an empty mapping means the toy-perfect preset."""
    cfg = cfg or DEFAULT_SCHEME
    cfg = dict(cfg)
    if "preset" in cfg:
        name = cfg.pop("preset")
        if name not in SCHEME_PRESETS:
            raise ConfigError(f"unknown scheme preset {name!r}; known: {sorted(SCHEME_PRESETS)}")
        cfg = {**SCHEME_PRESETS[name], **cfg}
    return scheme_from_config(cfg)


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    trials: int | None = None
    scheme: dict = field(default_factory=dict)
    kem: dict = field(default_factory=dict)
    game: str | None = None
    adversary: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    spread: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; known: {list(COMMANDS)}")
        try:
            self.seed = int(self.seed)
        except (TypeError, ValueError):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}") from None
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trials is not None:
            if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
                raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        for f in fields(self):
            if f.name in ("command", "seed", "trials", "game"):
                continue
            v = getattr(self, f.name)
            if v is None:
                setattr(self, f.name, {})
            elif not isinstance(v, dict):
                raise ConfigError(f"{f.name} must be a mapping")
        fmt = self.output.get("format", "json")
        if fmt not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "command" not in d:
            raise ConfigError("config has no command")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        return cls.from_dict(data or {})

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
