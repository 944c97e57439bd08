"""Per-store aggregation: collect each epoch's node frames until all
registered nodes report or the timeout fires, then emit one telemetry
update over the Wi-Fi uplink.

A store runs two physical collection coordinators (parking and traffic)
that share one epoch cadence and one telemetry stream, since the update
row spans both domains.  Missing nodes fall back to their last known
payload and are flagged stale; a node never heard from counts in the
customer-unfriendly direction (slot occupied / traffic heavy) so the
system cannot oversell availability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .radio import VACANT, Frame, airtime
from .simcore import US_PER_MS

EPOCH_PERIOD_MS = 500
DEFAULT_TIMEOUT_MS = 1_000
UPLINK_RATE_BPS = 54_000_000  # 802.11g backhaul

TRAFFIC_LEVEL_MIN = 1
TRAFFIC_LEVEL_MAX = 3
# Fallback for a traffic node that has never reported: assume heavy.
NEVER_SEEN_TRAFFIC_LEVEL = TRAFFIC_LEVEL_MAX


class EpochClosedError(RuntimeError):
    """A close was attempted on an epoch that already closed."""


@dataclass(frozen=True)
class CoordinatorPower:
    """Always-on collection hardware; no duty cycling is possible."""

    host_mw: float = 10_000.0
    radio_mw: float = 132.0

    @property
    def total_mw(self) -> float:
        return self.host_mw + self.radio_mw


@dataclass
class EpochState:
    """One collection round for a store."""

    epoch_id: int
    opened_at: int
    expected: frozenset[int]
    deadline: int
    received: dict[int, int] = field(default_factory=dict)
    closed: bool = False
    # Filled at close: per parking node, the payload the close used
    # (None = never seen, counted occupied).
    effective_parking: dict[int, int | None] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return set(self.received) == set(self.expected)


@dataclass(frozen=True)
class TelemetryUpdate:
    store_id: int
    epoch_id: int
    parking_available: int
    parking_total: int
    avg_traffic: int
    stale_nodes: tuple[int, ...]
    emitted_at: int

    def __post_init__(self):
        if not 0 <= self.parking_available <= self.parking_total:
            raise ValueError("parking_available must be within [0, parking_total]")
        if not TRAFFIC_LEVEL_MIN <= self.avg_traffic <= TRAFFIC_LEVEL_MAX:
            raise ValueError("avg_traffic must be a level 1-3")

    def to_payload(self) -> dict:
        """Wire shape of the uplink body (see POST /telemetry)."""
        return {
            "store_id": self.store_id,
            "epoch_id": self.epoch_id,
            "parking_available": self.parking_available,
            "parking_total": self.parking_total,
            "avg_traffic": self.avg_traffic,
            "stale_nodes": list(self.stale_nodes),
        }

    def payload_bytes(self) -> int:
        return len(json.dumps(self.to_payload(), separators=(",", ":")).encode())


def aggregate_traffic(levels: Iterable[int]) -> int:
    """Round-half-up mean of traffic levels, clamped to [1, 3]."""
    levels = list(levels)
    if not levels:
        raise ValueError("no traffic nodes registered")
    for level in levels:
        if not TRAFFIC_LEVEL_MIN <= level <= TRAFFIC_LEVEL_MAX:
            raise ValueError(f"traffic level {level} outside 1-3")
    n = len(levels)
    mean_rounded = (2 * sum(levels) + n) // (2 * n)
    return min(TRAFFIC_LEVEL_MAX, max(TRAFFIC_LEVEL_MIN, mean_rounded))


def uplink_latency_us(payload_bytes: int, rate_bps: int = UPLINK_RATE_BPS) -> int:
    """Backhaul serialization delay; ~30 us for a 200-byte update."""
    return airtime(payload_bytes, rate_bps)


class TelemetrySink(Protocol):
    def update_telemetry(self, update: TelemetryUpdate) -> object: ...


def push_telemetry(sink: TelemetrySink, update: TelemetryUpdate) -> int:
    """Apply an update to the datastore; returns the modeled uplink delay.

    A rejected (stale) update propagates as the sink's exception; the
    caller supersedes it with the next epoch, latest wins.
    """
    latency = uplink_latency_us(update.payload_bytes())
    sink.update_telemetry(update)
    return latency


class StoreAggregator:
    """The per-store epoch state machine.

    Epochs open back to back every EPOCH_PERIOD_MS aligned with the node
    report period; because the timeout spans two periods, up to two
    epochs can be open at once and frames are routed by their epoch id.
    Each epoch closes exactly once: early when every registered node has
    reported, otherwise at its deadline.
    """

    def __init__(
        self,
        store_id: int,
        parking_nodes: Iterable[int],
        traffic_nodes: Iterable[int],
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
    ):
        self.store_id = store_id
        self.parking_nodes = frozenset(parking_nodes)
        self.traffic_nodes = frozenset(traffic_nodes)
        if self.parking_nodes & self.traffic_nodes:
            raise ValueError("a node cannot be both parking and traffic")
        if not self.traffic_nodes:
            raise ValueError("at least one traffic node must be registered")
        self.expected = self.parking_nodes | self.traffic_nodes
        self.timeout_us = timeout_ms * US_PER_MS
        self.last_known: dict[int, int] = {}
        self.open_epochs: dict[int, EpochState] = {}
        self.late_frames = 0
        self.duplicate_frames = 0
        self.closed_complete = 0
        self.closed_by_timeout = 0
        self.last_closed: EpochState | None = None

    def open_epoch(self, epoch_id: int, now_us: int) -> EpochState:
        if epoch_id in self.open_epochs:
            raise ValueError(f"epoch {epoch_id} already open")
        epoch = EpochState(
            epoch_id=epoch_id,
            opened_at=now_us,
            expected=self.expected,
            deadline=now_us + self.timeout_us,
        )
        self.open_epochs[epoch_id] = epoch
        return epoch

    def ingest_frame(self, frame: Frame, now_us: int) -> TelemetryUpdate | None:
        """Record one delivered frame; closes the epoch early if it is the
        last expected report.  Frames for unknown/closed epochs or from
        unregistered nodes are counted and dropped, never raised."""
        epoch = self.open_epochs.get(frame.epoch_id)
        if epoch is None:
            self.late_frames += 1
            return None
        if frame.src_node not in epoch.expected:
            self.late_frames += 1
            return None
        if frame.src_node in epoch.received:
            self.duplicate_frames += 1
            return None
        epoch.received[frame.src_node] = frame.payload
        if epoch.complete:
            self.closed_complete += 1
            return self.close_epoch(epoch, now_us)
        return None

    def handle_deadline(self, epoch_id: int, now_us: int) -> TelemetryUpdate | None:
        """Timeout path: close the epoch if it is still open."""
        epoch = self.open_epochs.get(epoch_id)
        if epoch is None:
            return None
        self.closed_by_timeout += 1
        return self.close_epoch(epoch, now_us)

    def close_epoch(self, epoch: EpochState, now_us: int) -> TelemetryUpdate:
        """Fold received payloads (with last-known fallback for missing
        nodes) into one telemetry update and retire the epoch."""
        if epoch.closed:
            raise EpochClosedError(f"epoch {epoch.epoch_id} already closed")
        epoch.closed = True
        self.open_epochs.pop(epoch.epoch_id, None)

        stale = sorted(epoch.expected - set(epoch.received))
        available = 0
        for node in sorted(self.parking_nodes):
            payload = epoch.received.get(node, self.last_known.get(node))
            epoch.effective_parking[node] = payload
            if payload is None:
                continue  # never seen: counts as occupied
            if payload == VACANT:
                available += 1
        levels = [
            epoch.received.get(node, self.last_known.get(node, NEVER_SEEN_TRAFFIC_LEVEL))
            for node in sorted(self.traffic_nodes)
        ]
        self.last_known.update(epoch.received)
        self.last_closed = epoch
        return TelemetryUpdate(
            store_id=self.store_id,
            epoch_id=epoch.epoch_id,
            parking_available=available,
            parking_total=len(self.parking_nodes),
            avg_traffic=aggregate_traffic(levels),
            stale_nodes=tuple(stale),
            emitted_at=now_us,
        )
