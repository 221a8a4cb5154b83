"""Key-value configuration: one flat `key = value` file covering every default.

Lines look like ``train.lr = 1e-5``; ``#`` starts a comment. Unknown keys are
rejected so typos fail loudly. ``Config.document()`` emits a fully commented
file with every key at its default, which doubles as the format reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .agent.training import TrainConfig
from .evaluate import EvalConfig
from .simuser import UserNoise

__all__ = ["ConfigError", "GenConfig", "LikelihoodConfig", "Config", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    """Synthetic catalog generation and reduction."""

    n: int = 3000
    d: int = 32
    m: int = 10
    clusters: int = 12
    reduce_to: int = 1000  # 0 disables cluster reduction


@dataclass(frozen=True)
class SplitConfig:
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2

    @property
    def ratios(self) -> tuple[float, float, float]:
        return (self.train, self.val, self.test)


@dataclass(frozen=True)
class LikelihoodConfig:
    sigma_scale: float = 0.25  # comparison scale as a fraction of attr std
    tau_scale: float = 0.5  # sketch kernel width vs RMS feature spread
    floor: float = 1e-4


@dataclass(frozen=True)
class Config:
    seed: int = 0
    gen: GenConfig = field(default_factory=GenConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    likelihood: LikelihoodConfig = field(default_factory=LikelihoodConfig)
    user: UserNoise = field(default_factory=UserNoise)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    _SECTIONS = ("gen", "split", "likelihood", "user", "train", "eval")

    def with_seed(self, seed: int) -> "Config":
        cfg = replace(self, seed=seed, train=replace(self.train, seed=seed))
        return replace(cfg, eval=replace(cfg.eval, master_seed=seed))

    def document(self) -> str:
        lines = ["# mixsearch configuration: key = value, '#' comments",
                 f"seed = {self.seed}"]
        for section in self._SECTIONS:
            obj = getattr(self, section)
            lines.append("")
            for f in fields(obj):
                lines.append(f"{section}.{f.name} = {getattr(obj, f.name)}")
        return "\n".join(lines) + "\n"


def _coerce(raw: str, kind: type):
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(raw)
    return raw


def load_config(path: str | Path | None) -> Config:
    """Parse a config file over the defaults; None yields pure defaults."""
    cfg = Config()
    if path is None:
        return cfg
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such config file: {path}")
    overrides: dict[str, dict] = {s: {} for s in Config._SECTIONS}
    top: dict[str, int] = {}
    for lineno, raw_line in enumerate(path.read_text().splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "seed":
            top["seed"] = int(raw)
            continue
        if "." not in key:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        section, name = key.split(".", 1)
        if section not in overrides:
            raise ConfigError(f"{path}:{lineno}: unknown section {section!r}")
        proto = getattr(cfg, section)
        matching = {f.name: f for f in fields(proto)}
        if name not in matching:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            value = _coerce(raw, type(getattr(proto, name)))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value {raw!r} for {key}") from None
        overrides[section][name] = value
    for section, vals in overrides.items():
        if vals:
            cfg = replace(cfg, **{section: replace(getattr(cfg, section), **vals)})
    if "seed" in top:
        cfg = cfg.with_seed(top["seed"])
    return cfg
