"""TOML run configuration with strict keys and early validation."""

from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bounds import CalibrationConstants
from .operators import ForcingSpec, forcing
from .spectral import Domain, make_domain
from .timestepper import DEFAULT_DT_MAX, SqgParams


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
        self.message = message


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DomainSection(_Strict):
    L: float = 1.0
    N: int

    @field_validator("L")
    @classmethod
    def _pos_L(cls, v):
        if not v > 0:
            raise ValueError("L must be positive")
        return v

    @field_validator("N")
    @classmethod
    def _even_N(cls, v):
        if v < 8 or v % 2:
            raise ValueError("N must be an even integer >= 8")
        return v


class ParamsSection(_Strict):
    nu: float
    alpha: float
    p: float = 4.0
    l: float = 4.0

    @field_validator("nu")
    @classmethod
    def _pos_nu(cls, v):
        if not v > 0:
            raise ValueError("nu must be positive")
        return v

    @field_validator("alpha")
    @classmethod
    def _alpha_range(cls, v):
        if not 1.0 < v < 2.0:
            raise ValueError("alpha must lie in the open interval (1, 2)")
        return v

    @field_validator("p")
    @classmethod
    def _p_range(cls, v, info):
        a = info.data.get("alpha")
        if a is not None and not v > 2.0 / a:
            raise ValueError(f"p must exceed 2/alpha = {2.0 / a:.6g}")
        return v

    @field_validator("l")
    @classmethod
    def _l_admissible(cls, v, info):
        a = info.data.get("alpha")
        if a is not None and not v > a / (a - 1.0):
            raise ValueError(f"l is not admissible: the rule is l > alpha/(alpha-1) = {a / (a - 1.0):.6g}")
        return v


class ForcingSection(_Strict):
    modes: list[tuple[int, int, float, float]] = []
    modulation: Literal["constant", "exp_decay", "sinusoid"] = "constant"
    param: float = 0.0


class ExperimentSection(_Strict):
    Q: Optional[int] = None
    Q_list: Optional[list[int]] = None
    projection_kind: Literal["smooth_lp", "sharp_truncation"] = "smooth_lp"
    seed1: int = 1
    seed2: int = 2
    horizon: float = 3.0
    spinup: float = 2.0
    cadence: int = 10
    dt_max: float = DEFAULT_DT_MAX
    dt: Optional[float] = None
    init_band: tuple[float, float] = (1.0, 8.0)
    init_decay: float = 1.0
    init_amplitude: Optional[float] = 0.1
    # explicit initial modes for `simulate`, rows [k1, k2, re, im]
    initial_modes: Optional[list[tuple[int, int, float, float]]] = None
    epsilon: float = 0.0
    gamma: float = 1.0
    perturbation_modes: list[tuple[int, int, float, float]] = []
    calibrate: bool = False
    calibration_horizon: float = 6.0
    seeds: list[int] = [1]

    @field_validator("horizon", "dt_max", "calibration_horizon")
    @classmethod
    def _positive(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("spinup")
    @classmethod
    def _nonneg(cls, v):
        if v < 0:
            raise ValueError("must be nonnegative")
        return v

    @field_validator("cadence")
    @classmethod
    def _cadence(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("Q_list")
    @classmethod
    def _ascending(cls, v):
        if v is not None and (not v or any(b <= a for a, b in zip(v, v[1:]))):
            raise ValueError("must be a nonempty strictly ascending list")
        return v


class ConstantsSection(_Strict):
    c_infty: float = 1.0
    c_thm: float = 1.0
    c_linfty: float = 1.0
    c_phi: float = 1.0
    c_psi: float = 1.0

    @field_validator("*")
    @classmethod
    def _positive(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v


class RunConfig(_Strict):
    domain: DomainSection
    params: ParamsSection
    forcing: ForcingSection = ForcingSection()
    experiment: ExperimentSection = ExperimentSection()
    constants: ConstantsSection = ConstantsSection()
    out_dir: Optional[str] = None

    def make_domain(self) -> Domain:
        return make_domain(self.domain.L, self.domain.N)

    def forcing_spec(self) -> ForcingSpec:
        f = self.forcing
        return forcing(f.modes, f.modulation, f.param)

    def sqg_params(self) -> SqgParams:
        p = self.params
        return SqgParams(p.nu, p.alpha, p.p, p.l, self.forcing_spec())

    def calibration_constants(self) -> CalibrationConstants:
        return CalibrationConstants(**self.constants.model_dump())

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def _check_band(rows, key: str, radius: int) -> None:
    for i, (k1, k2, _, _) in enumerate(rows):
        if k1 == 0 and k2 == 0:
            raise ConfigError(f"{key}[{i}]", "mode (0, 0) is not allowed: fields are zero-mean")
        if math.hypot(k1, k2) > radius:
            raise ConfigError(f"{key}[{i}]", f"mode ({k1}, {k2}) lies beyond the dealias radius {radius}")


def validate(cfg: RunConfig) -> RunConfig:
    """Cross-section checks that need the domain."""
    R = cfg.domain.N // 3
    _check_band(cfg.forcing.modes, "forcing.modes", R)
    _check_band(cfg.experiment.perturbation_modes, "experiment.perturbation_modes", R)
    if cfg.experiment.initial_modes:
        _check_band(cfg.experiment.initial_modes, "experiment.initial_modes", R)
    lo, hi = cfg.experiment.init_band
    if not 0 < lo <= hi <= R:
        raise ConfigError("experiment.init_band", f"band must satisfy 0 < lo <= hi <= dealias radius {R}")
    if cfg.experiment.Q is not None and cfg.experiment.Q < -1:
        raise ConfigError("experiment.Q", "must be >= -1")
    return cfg


def from_dict(doc: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(doc)
    except ValidationError as exc:
        err = exc.errors()[0]
        key = ".".join(str(p) for p in err["loc"])
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        raise ConfigError(key, msg.removeprefix("Value error, ")) from None
    return validate(cfg)


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("", f"{path}: {exc}") from None
    return from_dict(doc)
