"""Farmer trust in a fertilization schedule as ability x benevolence x integrity."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from agritrust.agronomics import DEFAULT_WINDOW, ScheduleSummary


@dataclass(frozen=True)
class TrustParams:
    yield_base: float = 8649.0  # USDA 1999 US average, kg/ha
    fert_center: float = 196.0  # kg/ha
    fert_scale: float = 0.1  # 1/(kg/ha)
    freq_center: float = 2.5
    window: tuple[int, int] = DEFAULT_WINDOW
    leach_center: float = 0.14  # kg/ha
    leach_width: float = 0.1  # kg/ha
    integrity: float = 1.0

    def __post_init__(self):
        if self.fert_scale <= 0 or self.leach_width <= 0:
            raise ValueError("fert_scale and leach_width must be positive")
        if not 0 <= self.integrity <= 1:
            raise ValueError("integrity must lie in [0, 1]")
        if self.yield_base <= 0:
            raise ValueError("yield_base must be positive")
        object.__setattr__(self, "window", tuple(int(d) for d in self.window))

    @classmethod
    def from_dict(cls, d: dict) -> "TrustParams":
        return cls(**d)


@dataclass(frozen=True)
class TrustBreakdown:
    ability: float
    benevolence: float
    integrity: float
    score: float

    def as_dict(self):
        return asdict(self)


def _frequency_factor(n_apps: float, center: float) -> float:
    # |N_F - 2.5| is floored at 0.5, its minimum over integer counts
    return 0.5 / max(abs(n_apps - center), 0.5)


def ability(s: ScheduleSummary, p: TrustParams = TrustParams()) -> float:
    """Competence term: yield ratio, cosh penalty on total N, frequency and window factors."""
    x = p.fert_scale * (s.total_n_kg_ha - p.fert_center)
    # 1/cosh overflows to 0 cleanly; guard math.cosh's OverflowError
    n_factor = 1.0 / math.cosh(x) if abs(x) < 700 else 0.0
    return (
        s.yield_kg_ha / p.yield_base
        * n_factor
        * _frequency_factor(s.n_apps, p.freq_center)
        * (s.in_window_apps + 1) / (s.n_apps + 1)
    )


def benevolence(s: ScheduleSummary, p: TrustParams = TrustParams()) -> float:
    if s.total_leach_kg_ha < 0:
        raise ValueError("total leaching must be >= 0")
    return math.exp(-(((s.total_leach_kg_ha - p.leach_center) / p.leach_width) ** 2))


def trust_score(s: ScheduleSummary, p: TrustParams = TrustParams()) -> TrustBreakdown:
    a = ability(s, p)
    b = benevolence(s, p)
    return TrustBreakdown(a, b, p.integrity, a * b * p.integrity)
