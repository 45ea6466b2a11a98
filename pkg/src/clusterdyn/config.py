"""Run configuration shared by the CLI and the report writer."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .core import Profile


@dataclass(frozen=True)
class RunConfig:
    """Pipeline parameters.

    Defaults follow the match-analysis conventions: 10 Hz sampling, 4 s
    trailing averages, pivot gaps up to 80 s, about 24 peaks per match and a
    30 s tolerance around tagged events.
    """

    sample_rate: float = 10.0
    ma_window: float = 4.0
    max_pivot_gap: float = 80.0
    peak_target: int | None = 24
    event_window: float = 30.0
    profile: Profile = Profile.SOCCER
    seed: int = 0
    carry_forward: bool = False
    top_n: int = 10
    bin_width: float = 0.05
    spline_step: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "profile", Profile(self.profile))
        for name in ("sample_rate", "ma_window", "max_pivot_gap", "event_window", "bin_width", "spline_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.peak_target is not None and self.peak_target < 1:
            raise ValueError(f"peak_target must be positive, got {self.peak_target}")
        if self.top_n < 1:
            raise ValueError(f"top_n must be positive, got {self.top_n}")

    def to_json(self) -> dict:
        out = asdict(self)
        out["profile"] = self.profile.value
        return out
