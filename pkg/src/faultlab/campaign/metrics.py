"""Aggregate counts and rates over a set of run logs."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..controller import ALERT_KINDS
from ..hazards import HAZARD_KINDS


def rate(num: float, den: float) -> float:
    """num / den, with 0/0 (and anything over 0) taken as 0."""
    return num / den if den else 0.0


@dataclass
class CampaignMetrics:
    injected: int = 0
    activated: int = 0
    manifested: int = 0
    sdc: int = 0
    hazards: int = 0
    hazards_by_kind: dict = field(default_factory=lambda: {k: 0 for k in HAZARD_KINDS})
    collisions: int = 0
    alerts: int = 0
    alerts_by_kind: dict = field(default_factory=lambda: {k: 0 for k in ALERT_KINDS})
    hazards_no_alert: int = 0
    alerts_no_hazard: int = 0
    invalid: int = 0
    reaction_times: list = field(default_factory=list)
    manifestation_times: list = field(default_factory=list)

    @property
    def hazard_coverage(self) -> float:
        return rate(self.hazards, self.activated)

    @property
    def activation_rate(self) -> float:
        return rate(self.activated, self.injected)

    @property
    def manifestation_rate(self) -> float:
        return rate(self.manifested, self.activated)

    @property
    def alert_rate(self) -> float:
        return rate(self.alerts, self.activated)

    @property
    def no_alert_fraction(self) -> float:
        return rate(self.hazards_no_alert, self.hazards)

    @property
    def mean_reaction_time(self) -> float | None:
        if not self.reaction_times:
            return None
        return sum(self.reaction_times) / len(self.reaction_times)

    def check(self) -> None:
        """Assert the count lattice."""
        assert self.injected >= self.activated >= self.manifested >= self.hazards >= 0, self
        assert self.sdc + self.hazards == self.manifested, self
        assert self.hazards_no_alert <= self.hazards
        assert all(t > 0 for t in self.reaction_times)


def compute_metrics(logs) -> CampaignMetrics:
    """Fold run logs into counts.

    Invalid runs are counted separately and excluded from every other count.
    A hazard counts only for runs whose fault both activated and manifested;
    a fault-free hazard would otherwise be charged to the fault.
    """
    m = CampaignMetrics()
    for log in logs:
        if log.invalid:
            m.invalid += 1
            continue
        m.injected += 1
        if not log.activated:
            continue
        m.activated += 1
        if log.alerts:
            m.alerts += 1
            for kind in log.alerts:
                m.alerts_by_kind[kind] = m.alerts_by_kind.get(kind, 0) + 1
            if not log.hazardous:
                m.alerts_no_hazard += 1
        if not log.manifested:
            continue
        m.manifested += 1
        m.manifestation_times.append(log.t_manifest - log.t_activation)
        if log.hazardous:
            m.hazards += 1
            for kind in log.hazards:
                m.hazards_by_kind[kind] = m.hazards_by_kind.get(kind, 0) + 1
            if log.collision_t is not None:
                m.collisions += 1
            tr = log.t_reaction
            if tr is None:
                m.hazards_no_alert += 1
            else:
                m.reaction_times.append(tr)
        else:
            m.sdc += 1
    return m


def group_by(logs, key) -> dict:
    out: dict = {}
    for log in logs:
        out.setdefault(key(log), []).append(log)
    return out


def fault_key(log) -> str:
    """Target, refined by image effect for image-effect faults."""
    return log.entry if log.target == "VisionImageEffect" and log.entry else log.target


@dataclass(frozen=True)
class ComparisonReport:
    guided: dict
    random: dict
    guided_ge_random: bool

    def rows(self):
        for k in self.guided:
            yield k, self.guided[k], self.random[k]


def _summary(m: CampaignMetrics) -> dict:
    return {
        "injected": m.injected,
        "activated": m.activated,
        "activation_rate": m.activation_rate,
        "manifestation_rate": m.manifestation_rate,
        "hazard_coverage": m.hazard_coverage,
        "alert_rate": m.alert_rate,
        "no_alert_fraction": m.no_alert_fraction,
    }


def compare_guided_random(metrics_g: CampaignMetrics, metrics_r: CampaignMetrics) -> ComparisonReport:
    return ComparisonReport(_summary(metrics_g), _summary(metrics_r),
                            metrics_g.hazard_coverage >= metrics_r.hazard_coverage)
