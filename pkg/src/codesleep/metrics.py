"""Run metrics, aggregation across repetitions, and CSV emission.

Coding gain compares the transmissions a coding-free scheme would have
needed (each data frame counts its coding degree) against the data frames
actually sent, so it is 1.0 exactly when nothing was coded and grows with
every coded frame. Energy per bit divides the total spend of all nodes by
the bits delivered to final destinations. Delay is measured per delivered
packet from its first transmission to its final delivery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class NodeEnergySummary:
    node: int
    initial: float
    residual: float
    recharged: float
    shortfall: float
    sends: int
    receives: int
    overhears: int
    idle_slots: int
    sleep_slots: int
    death_slot: int | None


@dataclass
class MetricsReport:
    """Everything measured in one simulation run."""

    scenario: str
    policy: str
    seed: int
    nodes: int
    flow_count: int
    duration_slots: int

    data_transmissions: int = 0
    native_equivalent: int = 0
    coded_transmissions: int = 0
    control_transmissions: int = 0

    created_packets: int = 0
    delivered_packets: int = 0
    delivered_bits: int = 0
    dropped_routing: int = 0
    dropped_dead: int = 0
    decode_failures: int = 0
    redundant_decodes: int = 0

    delays: list[int] = field(default_factory=list)

    energy_spent: float = 0.0
    energy_by_category: dict[str, float] = field(default_factory=dict)
    node_energy: list[NodeEnergySummary] = field(default_factory=list)

    useful_overhear_hits: int = 0
    useless_overhears: int = 0
    early_evictions: int = 0
    collision_overhears: int = 0
    epoch_count: int = 0

    reward_sums: list[float] = field(default_factory=list)
    reward_counts: list[int] = field(default_factory=list)
    node_epochs: list[int] = field(default_factory=list)
    node_greedy_actions: list[list[int]] = field(default_factory=list)

    trace_hash: str = ""
    qtable_rows: list[tuple] | None = None

    @property
    def gain_defined(self) -> bool:
        return self.data_transmissions > 0

    @property
    def undelivered_packets(self) -> int:
        return self.created_packets - self.delivered_packets


def coding_gain(report: MetricsReport) -> float:
    """Native-equivalent transmissions over actual data transmissions.

    With zero data transmissions the ratio is undefined; it is reported as
    1.0 and ``report.gain_defined`` is False.
    """
    if report.data_transmissions == 0:
        return 1.0
    return report.native_equivalent / report.data_transmissions


def energy_per_bit(report: MetricsReport) -> float:
    """Total energy spent by all nodes per bit delivered to a destination."""
    if report.delivered_bits == 0:
        return math.nan
    return report.energy_spent / report.delivered_bits


def avg_delay(report: MetricsReport) -> float:
    """Mean slots from a packet's first transmission to its final delivery."""
    if not report.delays:
        return math.nan
    return sum(report.delays) / len(report.delays)


def lifetime(report: MetricsReport) -> int | None:
    """Earliest node death slot, or None when every node survived."""
    deaths = [s.death_slot for s in report.node_energy if s.death_slot is not None]
    return min(deaths) if deaths else None


def reward_curve(report: MetricsReport, window: int) -> list[tuple[int, float]]:
    """Sliding-window mean of per-epoch rewards averaged across nodes."""
    if window < 1:
        raise ValueError("window must be at least 1")
    sums = np.asarray(report.reward_sums, dtype=float)
    counts = np.asarray(report.reward_counts, dtype=float)
    if sums.size == 0:
        return []
    means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    csum = np.concatenate(([0.0], np.cumsum(means)))
    out = []
    for k in range(means.size):
        lo = max(0, k - window + 1)
        out.append((k, (csum[k + 1] - csum[lo]) / (k + 1 - lo)))
    return out


def converged_epoch(
    report: MetricsReport,
    window: int = 400,
    grid: int = 250,
    threshold: float = 0.01,
    min_epoch: int = 1000,
) -> int | None:
    """First epoch at which the smoothed reward curve has plateaued.

    Scanning a grid of candidate epochs, the curve counts as flat at epoch e
    when the least-squares slope over its trailing quartile, projected over
    that quartile's length, stays below ``threshold`` of the curve's range
    so far. Returns None when the curve never settles.
    """
    curve = reward_curve(report, window)
    if len(curve) <= window:
        return None
    # the first `window` points average fewer samples than the window span;
    # their extremes would inflate the curve range, so detection starts after
    values = np.asarray([v for _, v in curve[window:]])
    found = detect_plateau(values, grid=grid, threshold=threshold, min_epoch=min_epoch)
    return None if found is None else found + window


def detect_plateau(values: np.ndarray, grid: int = 250, threshold: float = 0.01,
                   min_epoch: int = 1000) -> int | None:
    """Earliest grid epoch whose trailing quartile has gone flat.

    Flat means the least-squares drift across the quartile stays under
    ``threshold`` of the whole curve's range so far.
    """
    n = values.size
    for e in range(min_epoch, n + 1, grid):
        seg = values[(3 * e) // 4:e]
        if seg.size < 32:
            continue
        x = np.arange(seg.size, dtype=float)
        slope = np.polyfit(x, seg, 1)[0]
        span = float(values[:e].max() - values[:e].min())
        if abs(slope) * seg.size <= threshold * span + 1e-15:
            return e
    return None


PER_RUN_COLUMNS = [
    "scenario", "policy", "flows", "nodes", "rep", "seed",
    "coding_gain", "energy_per_bit", "avg_delay_slots", "lifetime_slots",
    "converged_epoch", "data_transmissions", "native_equivalent",
    "coded_transmissions", "delivered_packets", "delivered_bits",
    "total_energy_j", "useful_overhears", "useless_overhears", "trace_hash",
]

AGGREGATE_COLUMNS = [
    "scenario", "policy", "flows", "nodes", "seed_count",
    "coding_gain_mean", "coding_gain_sd", "energy_per_bit_mean",
    "delay_mean_slots", "lifetime_min_slots", "converged_epoch",
]


def _fmt(value) -> str:
    if value is None:
        return "survived"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def per_run_row(report: MetricsReport, rep: int) -> list:
    conv = converged_epoch(report)
    return [
        report.scenario, report.policy, report.flow_count, report.nodes, rep,
        report.seed, coding_gain(report), energy_per_bit(report),
        avg_delay(report), lifetime(report),
        -1 if conv is None else conv,
        report.data_transmissions, report.native_equivalent,
        report.coded_transmissions, report.delivered_packets,
        report.delivered_bits, report.energy_spent,
        report.useful_overhear_hits, report.useless_overhears,
        report.trace_hash,
    ]


def aggregate_row(reports: list[MetricsReport]) -> list:
    """One summary row for a batch of repetitions of the same scenario.

    The *_mean columns are exact arithmetic means of the per-run values.
    Lifetime aggregates as the minimum across runs (the pessimistic view);
    the convergence column is the mean epoch over the runs that converged.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    first = reports[0]
    gains = [coding_gain(r) for r in reports]
    epbs = [energy_per_bit(r) for r in reports]
    delays = [avg_delay(r) for r in reports]
    lifes = [lifetime(r) for r in reports]
    convs = [converged_epoch(r) for r in reports]
    gain_mean = sum(gains) / len(gains)
    gain_sd = math.sqrt(sum((g - gain_mean) ** 2 for g in gains) / len(gains))
    fired = [c for c in convs if c is not None]
    deaths = [x for x in lifes if x is not None]
    return [
        first.scenario, first.policy, first.flow_count, first.nodes,
        len(reports), gain_mean, gain_sd,
        sum(epbs) / len(epbs), sum(delays) / len(delays),
        min(deaths) if deaths else None,
        -1 if not fired else sum(fired) / len(fired),
    ]


def write_csv(path, columns: list[str], rows: list[list]) -> None:
    """Plain comma-separated output: header row, LF endings, repr floats."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
