"""JSON scenario configuration with validation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import List, Sequence, Tuple

from ..beamforming import BACKENDS
from ..channel import CHANNEL_KINDS, ArrayGeometry, PathLossModel, geometry_from_positions

JOINT_BF = "JointBf"
REFLECTIVE_ONLY = "ReflectiveOnly"
TRANSMIT_ONLY = "TransmitOnly"
NO_OPTIMIZATION = "NoOptimization"
SCHEMES = (JOINT_BF, REFLECTIVE_ONLY, TRANSMIT_ONLY, NO_OPTIMIZATION)

SNR = "Snr"
CRB = "Crb"
DETECTION = "Detection"
OBJECTIVES = (SNR, CRB, DETECTION)


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    bs_pos: Tuple[float, float] = (0.0, 0.0)
    irs_pos: Tuple[float, float] = (1.0, 1.0)
    target_pos: Tuple[float, float] = (1.0, -5.0)
    m_t: int = 4
    m_r: int = 4
    n_list: List[int] = field(default_factory=lambda: [10, 20, 40, 60, 80, 100])
    channel: str = "Rayleigh"
    k_factor: float = 1.0
    k0_db: float = -30.0
    d0: float = 1.0
    exponent_bs_irs: float = 2.2
    exponent_irs_target: float = 2.0
    rcs: float = 1.0
    power_budget_dbm: float = 30.0
    sigma2_dbm: float = -90.0
    t_symbols: int = 256
    p_fa: float = 1e-2
    trials: int = 100
    master_seed: int = 2024
    schemes: List[str] = field(default_factory=lambda: [JOINT_BF])
    objective: str = SNR
    backend: str = "auto"
    record_wall_time: bool = True
    out_dir: str = "out"
    name: str = "sweep"

    def __post_init__(self):
        if isinstance(self.schemes, str):
            self.schemes = [self.schemes]
        self.bs_pos = tuple(float(x) for x in self.bs_pos)
        self.irs_pos = tuple(float(x) for x in self.irs_pos)
        self.target_pos = tuple(float(x) for x in self.target_pos)
        self.n_list = [int(n) for n in self.n_list]
        self.validate()

    def validate(self) -> None:
        if not self.n_list:
            raise ConfigError("n_list is empty")
        if any(n < 1 for n in self.n_list):
            raise ConfigError("every N must be >= 1")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError("n_list must be strictly increasing")
        if self.m_t < 1 or self.m_r < 1:
            raise ConfigError("m_t and m_r must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.t_symbols < 1:
            raise ConfigError("t_symbols must be >= 1")
        for name in ("power_budget_dbm", "sigma2_dbm", "k0_db"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not 0.0 < self.p_fa < 1.0:
            raise ConfigError("p_fa must lie in (0, 1)")
        if self.rcs <= 0:
            raise ConfigError("rcs must be positive")
        if self.channel not in CHANNEL_KINDS:
            raise ConfigError(f"unknown channel {self.channel!r}; expected one of {CHANNEL_KINDS}")
        if self.k_factor < 0:
            raise ConfigError("k_factor must be nonnegative")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("duplicate schemes")
        if self.objective == CRB and self.channel == "LoS":
            raise ConfigError("the CRB is unbounded for a rank-one LoS link; use Rician or Rayleigh")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        try:
            self.scenario()
            self.path_loss_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def scenario(self):
        return geometry_from_positions(self.bs_pos, self.irs_pos, self.target_pos)

    def path_loss_model(self) -> PathLossModel:
        return PathLossModel(self.k0_db, self.d0, self.exponent_bs_irs, self.exponent_irs_target)

    def array(self, n: int) -> ArrayGeometry:
        return ArrayGeometry(M_t=self.m_t, M_r=self.m_r, N=n)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("bs_pos", "irs_pos", "target_pos"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        if "scheme" in d:
            if "schemes" in d:
                raise ConfigError("give either 'scheme' or 'schemes'")
            d["schemes"] = d.pop("scheme")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ScenarioConfig.from_dict(data)


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
