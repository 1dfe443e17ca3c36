"""Step schedules for the conditioning-swap probability and the loss weight."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class ScheduleConfig:
    total_steps: int = 5000
    warmup_fraction: float = 0.05
    transition_fraction: float = 0.60
    pi_ceiling: float = 0.9
    alpha_max: float = 0.7

    def __post_init__(self):
        problems = []
        if self.total_steps <= 0:
            problems.append("total_steps must be positive")
        if not (self.warmup_fraction > 0 and self.transition_fraction > 0):
            problems.append("warmup_fraction and transition_fraction must be positive")
        if self.warmup_fraction + self.transition_fraction > 1 + 1e-12:
            problems.append("warmup_fraction + transition_fraction must not exceed 1")
        if not 0 <= self.pi_ceiling <= 1:
            problems.append("pi_ceiling must lie in [0, 1]")
        if not 0 <= self.alpha_max <= 1:
            problems.append("alpha_max must lie in [0, 1]")
        if problems:
            raise ValueError("invalid schedule config: " + "; ".join(problems))

    @property
    def warmup_steps(self) -> float:
        return self.warmup_fraction * self.total_steps

    @property
    def transition_steps(self) -> float:
        return self.transition_fraction * self.total_steps

    @property
    def transition_end(self) -> float:
        return self.warmup_steps + self.transition_steps

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ScheduleState:
    t: int
    pi: float
    alpha: float


def pi_at(t: int, cfg: ScheduleConfig) -> float:
    """0 during warm-up, then a linear ramp capped at the ceiling."""
    w, m = cfg.warmup_steps, cfg.transition_steps
    if t < w:
        return 0.0
    if t < w + m:
        return min(cfg.pi_ceiling, (t - w) / m)
    return cfg.pi_ceiling


def alpha_at(t: int, cfg: ScheduleConfig) -> float:
    w = cfg.warmup_steps
    if t < w:
        return (t / w) * cfg.alpha_max
    return cfg.alpha_max


def state_at(t: int, cfg: ScheduleConfig) -> ScheduleState:
    return ScheduleState(t, pi_at(t, cfg), alpha_at(t, cfg))
