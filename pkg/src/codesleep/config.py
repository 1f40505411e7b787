"""Experiment configuration: a flat key=value file format with sections.

One scenario per file. The format is diff-friendly on purpose; multi-valued
entries (positions, flows) use indented continuation lines. See
``ScenarioConfig.from_file`` for the accepted keys and
``ScenarioConfig.write`` for round-tripping.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

from .world import Flow

DEFAULT_SLOT_SECONDS = 500 * 8 / 11e6  # one 500-byte packet at 11 Mbit/s

POLICY_LEARNED = "learned"
POLICY_ALWAYS_OVERHEAR = "always-overhear"
POLICY_ALWAYS_SLEEP = "always-sleep"


def parse_policy(text: str) -> tuple[str, float]:
    """Normalize a policy string; returns (kind, overhear probability)."""
    text = text.strip().lower()
    if text in (POLICY_LEARNED, POLICY_ALWAYS_OVERHEAR, POLICY_ALWAYS_SLEEP):
        return text, 1.0
    if text.startswith("random:"):
        p = float(text.split(":", 1)[1])
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"random policy probability out of range: {p}")
        return "random", p
    raise ValueError(f"unknown policy {text!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one simulation run needs, validated up front."""

    name: str = "scenario"
    seed: int = 0
    duration_slots: int = 1000
    policy: str = POLICY_ALWAYS_OVERHEAR
    repetitions: int = 20

    # topology: either explicit positions or a random deployment
    positions: tuple[tuple[float, float], ...] | None = None
    node_count: int = 0
    area: tuple[float, float] = (1100.0, 1100.0)
    radius: float = 200.0

    # traffic: either explicit flows or a random flow count
    flows: tuple[Flow, ...] | None = None
    flow_count: int = 0
    flow_mean_interarrival: float = 10.0
    packet_size_bits: int = 4000

    # energy model
    transmit_power_w: float = 140e-6
    receive_power_w: float = 90e-6
    idle_power_w: float = 55e-6
    slot_seconds: float = DEFAULT_SLOT_SECONDS
    capacity_j: float = 5e-3
    recharge_j_per_slot: float = 0.0

    # coding
    usefulness_deadline_slots: int = 50
    pool_capacity: int = 64
    report_period_slots: int = 5
    degree_window: int = 15

    # learning
    learning_rate: float = 0.5
    discount_rate: float = 0.9
    max_reward_delay: int = 8
    energy_levels: int = 8
    degree_levels: int = 10
    exploration_start: float = 0.3
    exploration_end: float = 0.02
    exploration_horizon: int = 4000
    time_unit_slots: float | None = None  # None means per-node auto estimate

    collect_qtables: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        errors = []
        if self.duration_slots < 1:
            errors.append("duration_slots must be at least 1")
        if self.repetitions < 1:
            errors.append("repetitions must be at least 1")
        try:
            parse_policy(self.policy)
        except ValueError as exc:
            errors.append(str(exc))
        if self.positions is None and self.node_count < 1:
            errors.append("either explicit positions or node_count >= 1 required")
        if self.radius <= 0:
            errors.append("radius must be positive")
        if self.flows is None and self.flow_count < 0:
            errors.append("flow_count must be non-negative")
        if self.flows is None and self.flow_count > 0 and not self.flow_mean_interarrival > 0:
            errors.append("flow_mean_interarrival must be positive")
        if self.packet_size_bits < 8 or self.packet_size_bits % 8:
            errors.append("packet_size_bits must be a positive multiple of 8")
        for name in ("transmit_power_w", "receive_power_w", "idle_power_w"):
            if getattr(self, name) < 0:
                errors.append(f"{name} must be non-negative")
        if self.slot_seconds <= 0:
            errors.append("slot_seconds must be positive")
        if self.capacity_j <= 0:
            errors.append("capacity_j must be positive")
        if self.recharge_j_per_slot < 0:
            errors.append("recharge must be non-negative")
        if self.usefulness_deadline_slots < 1:
            errors.append("usefulness_deadline_slots must be at least 1")
        if self.pool_capacity < 0:
            errors.append("pool_capacity must be non-negative")
        if self.report_period_slots < 1:
            errors.append("report_period_slots must be at least 1")
        if self.degree_window < 1:
            errors.append("degree_window must be at least 1")
        if not 0.0 < self.learning_rate <= 1.0:
            errors.append("learning_rate must lie in (0, 1]")
        if self.discount_rate <= 0:
            errors.append("discount_rate must be positive")
        if self.max_reward_delay < 0:
            errors.append("max_reward_delay must be non-negative")
        if self.energy_levels < 1 or self.degree_levels < 1:
            errors.append("state quantization levels must be at least 1")
        if not 0.0 <= self.exploration_end <= self.exploration_start <= 1.0:
            errors.append("need 0 <= exploration_end <= exploration_start <= 1")
        if self.exploration_horizon < 1:
            errors.append("exploration_horizon must be at least 1")
        if self.time_unit_slots is not None and self.time_unit_slots <= 0:
            errors.append("time_unit_slots must be positive when given")
        if errors:
            raise ValueError("invalid scenario config: " + "; ".join(errors))

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise FileNotFoundError(path)
        kwargs = {}

        def grab(section, key, cast, target=None):
            if parser.has_option(section, key):
                kwargs[target or key] = cast(parser.get(section, key))

        grab("scenario", "name", str)
        grab("scenario", "seed", int)
        grab("scenario", "duration_slots", int)
        grab("scenario", "policy", str)
        grab("scenario", "repetitions", int)

        if parser.has_option("topology", "positions"):
            rows = _multiline(parser.get("topology", "positions"))
            kwargs["positions"] = tuple(
                (float(a), float(b)) for a, b in (row.split() for row in rows)
            )
        grab("topology", "nodes", int, "node_count")
        if parser.has_option("topology", "area"):
            w, h = parser.get("topology", "area").lower().split("x")
            kwargs["area"] = (float(w), float(h))
        grab("topology", "radius", float)

        if parser.has_option("flows", "flows"):
            duration = kwargs.get("duration_slots", cls.duration_slots)
            size = int(parser.get("flows", "packet_size_bits", fallback=cls.packet_size_bits))
            rows = _multiline(parser.get("flows", "flows"))
            kwargs["flows"] = tuple(
                _parse_flow(i, row, size, duration) for i, row in enumerate(rows)
            )
        grab("flows", "count", int, "flow_count")
        grab("flows", "mean_interarrival_slots", float, "flow_mean_interarrival")
        grab("flows", "packet_size_bits", int)

        grab("energy", "transmit_power_w", float)
        grab("energy", "receive_power_w", float)
        grab("energy", "idle_power_w", float)
        grab("energy", "slot_seconds", float)
        grab("energy", "capacity_j", float)
        grab("energy", "recharge_j_per_slot", float)

        grab("coding", "usefulness_deadline_slots", int)
        grab("coding", "pool_capacity", int)
        grab("coding", "report_period_slots", int)
        grab("coding", "degree_window", int)

        grab("learning", "learning_rate", float)
        grab("learning", "discount_rate", float)
        grab("learning", "max_reward_delay", int)
        grab("learning", "energy_levels", int)
        grab("learning", "degree_levels", int)
        grab("learning", "exploration_start", float)
        grab("learning", "exploration_end", float)
        grab("learning", "exploration_horizon", int)
        if parser.has_option("learning", "time_unit_slots"):
            raw = parser.get("learning", "time_unit_slots").strip().lower()
            kwargs["time_unit_slots"] = None if raw == "auto" else float(raw)

        return cls(**kwargs)

    def write(self, path) -> None:
        """Serialize back to the flat file format (stable field order)."""
        lines = ["[scenario]"]
        lines.append(f"name = {self.name}")
        lines.append(f"seed = {self.seed}")
        lines.append(f"duration_slots = {self.duration_slots}")
        lines.append(f"policy = {self.policy}")
        lines.append(f"repetitions = {self.repetitions}")
        lines.append("")
        lines.append("[topology]")
        if self.positions is not None:
            lines.append("positions =")
            for x, y in self.positions:
                lines.append(f"    {x!r} {y!r}")
        else:
            lines.append(f"nodes = {self.node_count}")
            lines.append(f"area = {self.area[0]!r}x{self.area[1]!r}")
        lines.append(f"radius = {self.radius!r}")
        lines.append("")
        lines.append("[flows]")
        if self.flows is not None:
            lines.append("flows =")
            for f in self.flows:
                if f.arrivals is not None:
                    slots = ",".join(str(t) for t in f.arrivals)
                    lines.append(f"    {f.source} {f.destination} at {slots}")
                else:
                    lines.append(
                        f"    {f.source} {f.destination} {f.start} {f.end} {f.mean_interarrival!r}"
                    )
        else:
            lines.append(f"count = {self.flow_count}")
            lines.append(f"mean_interarrival_slots = {self.flow_mean_interarrival!r}")
        lines.append(f"packet_size_bits = {self.packet_size_bits}")
        lines.append("")
        lines.append("[energy]")
        lines.append(f"transmit_power_w = {self.transmit_power_w!r}")
        lines.append(f"receive_power_w = {self.receive_power_w!r}")
        lines.append(f"idle_power_w = {self.idle_power_w!r}")
        lines.append(f"slot_seconds = {self.slot_seconds!r}")
        lines.append(f"capacity_j = {self.capacity_j!r}")
        lines.append(f"recharge_j_per_slot = {self.recharge_j_per_slot!r}")
        lines.append("")
        lines.append("[coding]")
        lines.append(f"usefulness_deadline_slots = {self.usefulness_deadline_slots}")
        lines.append(f"pool_capacity = {self.pool_capacity}")
        lines.append(f"report_period_slots = {self.report_period_slots}")
        lines.append(f"degree_window = {self.degree_window}")
        lines.append("")
        lines.append("[learning]")
        lines.append(f"learning_rate = {self.learning_rate!r}")
        lines.append(f"discount_rate = {self.discount_rate!r}")
        lines.append(f"max_reward_delay = {self.max_reward_delay}")
        lines.append(f"energy_levels = {self.energy_levels}")
        lines.append(f"degree_levels = {self.degree_levels}")
        lines.append(f"exploration_start = {self.exploration_start!r}")
        lines.append(f"exploration_end = {self.exploration_end!r}")
        lines.append(f"exploration_horizon = {self.exploration_horizon}")
        unit = "auto" if self.time_unit_slots is None else repr(self.time_unit_slots)
        lines.append(f"time_unit_slots = {unit}")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _multiline(raw: str) -> list[str]:
    return [line.strip() for line in raw.splitlines() if line.strip()]


def _parse_flow(flow_id: int, row: str, packet_size_bits: int, duration: int) -> Flow:
    """Flow line: ``src dst start end mean`` or ``src dst at SLOT[,SLOT...]``."""
    parts = row.split()
    if len(parts) == 4 and parts[2] == "at":
        slots = tuple(int(t) for t in parts[3].split(","))
        return Flow(
            id=flow_id, source=int(parts[0]), destination=int(parts[1]),
            packet_size_bits=packet_size_bits, mean_interarrival=math.inf,
            start=min(slots), end=max(slots), arrivals=slots,
        )
    if len(parts) == 5:
        return Flow(
            id=flow_id, source=int(parts[0]), destination=int(parts[1]),
            packet_size_bits=packet_size_bits, mean_interarrival=float(parts[4]),
            start=int(parts[2]), end=int(parts[3]),
        )
    raise ValueError(f"cannot parse flow line {row!r}")
