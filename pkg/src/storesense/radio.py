"""Short-range mesh link layer: fixed 21-byte frames, airtime math,
distance-gated delivery, and deterministic min-hop routing toward a
collection point.

The link model is intentionally binary: delivery inside the radio range
succeeds with probability 1 - loss_within_range and is impossible beyond
it.  There is no contention model; per-frame airtime is exact.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .simcore import US_PER_S

FRAME_WIRE_BYTES = 21
DATA_RATE_BPS = 250_000
MAX_RANGE_M = 121.92  # 400 ft

PARKING = "parking"
TRAFFIC = "traffic"

# Parking payload values; traffic payloads are the level 1-3 directly.
VACANT = 0
OCCUPIED = 1


class UnreachableNodeError(Exception):
    """No multi-hop path exists from a node to the coordinator."""

    def __init__(self, node_id: int):
        super().__init__(f"node {node_id} cannot reach the coordinator")
        self.node_id = node_id


@dataclass(frozen=True)
class Frame:
    """One node status report; always 21 bytes on the wire.

    payload holds the occupancy flag (0 vacant / 1 occupied) for parking
    nodes, or the congestion level 1-3 for traffic nodes.  The byte-level
    layout is logical only; the wire size is the contract.
    """

    src_node: int
    node_kind: str
    seq: int
    epoch_id: int
    payload: int
    wire_size: int = FRAME_WIRE_BYTES

    def __post_init__(self):
        if self.wire_size != FRAME_WIRE_BYTES:
            raise ValueError(f"frame wire size is fixed at {FRAME_WIRE_BYTES} bytes")
        if self.node_kind not in (PARKING, TRAFFIC):
            raise ValueError(f"unknown node kind {self.node_kind!r}")


@dataclass(frozen=True)
class LinkModel:
    data_rate_bps: int = DATA_RATE_BPS
    max_range_m: float = MAX_RANGE_M
    loss_within_range: float = 0.0
    loss_beyond_range: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.loss_within_range <= 1.0:
            raise ValueError("loss_within_range must be in [0, 1]")
        if self.loss_beyond_range != 1.0:
            raise ValueError("delivery beyond max_range_m is impossible")


def airtime(frame_bytes: int, data_rate_bps: int = DATA_RATE_BPS) -> int:
    """On-medium duration of one frame, in microseconds (rounded).

    21 bytes at 250 kbps come out at exactly 672 us.
    """
    if data_rate_bps <= 0:
        raise ValueError("data rate must be positive")
    if frame_bytes < 0:
        raise ValueError("frame size must be non-negative")
    bits = frame_bytes * 8
    return (bits * US_PER_S + data_rate_bps // 2) // data_rate_bps


class Topology:
    """Static node placement with adjacency derived from radio range.

    positions maps radio id -> (x, y) in meters and must include the
    coordinator.  An edge exists iff the euclidean distance is at most
    max_range_m.  Routing is recomputed only when the layout changes.
    """

    def __init__(
        self,
        positions: dict[int, tuple[float, float]],
        coordinator: int,
        max_range_m: float = MAX_RANGE_M,
    ):
        if coordinator not in positions:
            raise ValueError(f"coordinator {coordinator} has no position")
        self.positions = dict(positions)
        self.coordinator = coordinator
        self.max_range_m = max_range_m
        self._adjacency = self._build_adjacency()
        self._hops_to_coordinator = self._bfs_from_coordinator()

    def _build_adjacency(self) -> dict[int, list[int]]:
        ids = sorted(self.positions)
        adjacency: dict[int, list[int]] = {i: [] for i in ids}
        for i, a in enumerate(ids):
            ax, ay = self.positions[a]
            for b in ids[i + 1 :]:
                bx, by = self.positions[b]
                if math.dist((ax, ay), (bx, by)) <= self.max_range_m:
                    adjacency[a].append(b)
                    adjacency[b].append(a)
        return {node: sorted(neighbors) for node, neighbors in adjacency.items()}

    def _bfs_from_coordinator(self) -> dict[int, int]:
        hops = {self.coordinator: 0}
        frontier = [self.coordinator]
        while frontier:
            nxt: list[int] = []
            for node in frontier:
                for neighbor in self._adjacency[node]:
                    if neighbor not in hops:
                        hops[neighbor] = hops[node] + 1
                        nxt.append(neighbor)
            frontier = nxt
        return hops

    def neighbors(self, node_id: int) -> list[int]:
        return self._adjacency[node_id]

    def route(self, src: int) -> list[int]:
        """Minimum-hop path [src, ..., coordinator].

        Among equal-hop paths the next hop is always the neighbor with
        the lowest id, so routes are deterministic for a given layout.
        """
        if src not in self.positions:
            raise KeyError(f"unknown node {src}")
        if src not in self._hops_to_coordinator:
            raise UnreachableNodeError(src)
        path = [src]
        current = src
        while current != self.coordinator:
            step_down = self._hops_to_coordinator[current] - 1
            current = min(
                n
                for n in self._adjacency[current]
                if self._hops_to_coordinator.get(n) == step_down
            )
            path.append(current)
        return path


def route(src: int, topology: Topology) -> list[int]:
    return topology.route(src)


@dataclass(frozen=True)
class DeliveryOutcome:
    """Result of pushing one frame along a hop path.

    airtime_us covers the hops actually traversed, so a frame lost at
    hop k still occupied the medium k times.
    """

    delivered: bool
    hops: int
    airtime_us: int
    lost_at_hop: int | None = None


def transmit(
    frame: Frame,
    path: list[int],
    link: LinkModel,
    rng: random.Random,
) -> DeliveryOutcome:
    """Carry a frame hop by hop; loss is an outcome, not an error."""
    hops = len(path) - 1
    if hops < 1:
        raise ValueError("path must contain at least one hop")
    per_hop_us = airtime(frame.wire_size, link.data_rate_bps)
    for hop in range(1, hops + 1):
        if rng.random() < link.loss_within_range:
            return DeliveryOutcome(
                delivered=False, hops=hops, airtime_us=hop * per_hop_us, lost_at_hop=hop
            )
    return DeliveryOutcome(delivered=True, hops=hops, airtime_us=hops * per_hop_us)
