"""Scenario configuration and the flat ``key = value`` config format.

One setting per line, ``#`` starts a comment, lists are comma separated::

    preset = scenario1      # optional, loaded first
    n_ue = 10
    snr_db = 0, 10, 20, 30
    modes = SG

Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..channel import CellGeometry, PropagationParams
from ..grouping import Mode

__all__ = ["ScenarioConfig", "PRESETS", "preset", "parse_config", "load_config", "dump_config"]

PRECODERS = ("ZFP", "ZF_PGP", "VAAC_PGP")
CONVENTIONS = ("printed", "sinr")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario1"
    # geometry
    n_ue: int = 10
    r_i: float = 1.0
    r_o: float = 5.0
    h: float = 3.0
    n_ux: int = 10
    n_uz: int = 10
    spacing: float = 0.5
    # propagation
    r_break: float = 1.0
    k_los: float = 2.0
    k_nlos: float = 4.0
    m_los: float = 4.0
    m_nlos: float = 2.0
    p_block: float = 0.2
    # grouping
    n_g: int = 3
    modes: tuple[str, ...] = ("SG",)
    n_v_init: int = 20
    nlos_boost_db: float = 13.0
    split_threshold: float = 0.5
    n_subgroups: int = 2
    # link
    M: int = 16
    L: int = 10
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)
    precoders: tuple[str, ...] = PRECODERS
    gaussian: bool = True
    mai_convention: str = "printed"
    # monte carlo
    trials: int = 20
    seed: int = 1
    # reporting
    operating_snr_db: float = 30.0
    se_kind: str = "ZF_PGP"
    ref_se: float = math.nan
    ref_seua: float = math.nan
    # power allocation
    opgpa_is: tuple[float, ...] = ()
    opgpa_snr0_db: float = 20.0
    opgpa_group_size: int = 4
    out_dir: str = "results"

    def __post_init__(self):
        if not self.snr_db:
            raise ValueError("snr_db sweep must not be empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n_ue < 1:
            raise ValueError("n_ue must be >= 1")
        if not self.modes:
            raise ValueError("modes must hold at least one entry")
        for m in self.modes:
            Mode(m)
        bad = set(self.precoders) - set(PRECODERS)
        if bad:
            raise ValueError(f"unknown precoders {sorted(bad)}")
        if self.se_kind not in PRECODERS:
            raise ValueError(f"unknown se_kind {self.se_kind!r}")
        if self.mai_convention not in CONVENTIONS:
            raise ValueError(f"mai_convention must be one of {CONVENTIONS}")
        if not 0 <= min(self.opgpa_is, default=0):
            raise ValueError("opgpa_is entries must be non-negative")
        # geometry and propagation validate themselves
        self.geometry()
        self.propagation()

    def geometry(self) -> CellGeometry:
        return CellGeometry(
            r_i=self.r_i, r_o=self.r_o, h=self.h,
            n_ux=self.n_ux, n_uz=self.n_uz, spacing=self.spacing,
        )

    def propagation(self) -> PropagationParams:
        return PropagationParams(
            snr0=1.0, r_break=self.r_break, k_los=self.k_los, k_nlos=self.k_nlos,
            m_los=self.m_los, m_nlos=self.m_nlos, p_block=self.p_block,
        )

    def mode_for(self, g: int) -> str:
        """Sub-grouping mode of the ``g``-th group (0-based); the last entry repeats."""
        return self.modes[min(g, len(self.modes) - 1)]

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)


PRESETS = {
    "scenario1": ScenarioConfig(
        name="scenario1", n_ue=10, r_i=1.0, r_o=5.0, n_g=3,
        ref_se=26.33, ref_seua=0.3647, operating_snr_db=30.0,
    ),
    "scenario2": ScenarioConfig(
        name="scenario2", n_ue=20, r_i=1.0, r_o=20.0, n_g=4,
        snr_db=(0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0),
        ref_se=31.50, ref_seua=0.0252, operating_snr_db=60.0,
        opgpa_is=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0),
    ),
}


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _convert(value: str, default):
    if isinstance(default, bool):
        v = value.lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(default, tuple):
        items = [x.strip() for x in value.split(",") if x.strip()]
        kind = type(default[0]) if default else (float if items and _is_number(items[0]) else str)
        return tuple(kind(x) for x in items)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse the flat config format into a validated :class:`ScenarioConfig`."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs[key] = (value, lineno)
    base = preset(pairs.pop("preset")[0]) if "preset" in pairs else ScenarioConfig()
    defaults = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
    updates = {}
    for key, (value, lineno) in pairs.items():
        if key not in defaults:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            updates[key] = _convert(value, defaults[key])
        except ValueError as e:
            raise ValueError(f"{source}:{lineno}: bad value for {key}: {e}") from None
    return dataclasses.replace(base, **updates)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def dump_config(cfg: ScenarioConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
