"""Field node behavior and energy model.

Two node kinds share the same hardware power budget: parking nodes turn
an ultrasonic range reading into a debounced occupancy flag (with a
red/green LED mirroring it), traffic nodes count road passages into a
1-3 congestion level.  Every node reports once per 500 ms period and is
billed the active power for the sensing window plus its frame's total
path airtime, idle power for the rest of the period.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .radio import DATA_RATE_BPS, FRAME_WIRE_BYTES, OCCUPIED, PARKING, TRAFFIC, VACANT, Frame, airtime
from .simcore import US_PER_S

MWH_PER_MW_MS = 1.0 / 3_600_000.0

DEFAULT_OCCUPIED_THRESHOLD_M = 1.0
DEFAULT_SENSOR_NOISE_M = 0.05
DEBOUNCE_DEPTH = 2

TRAFFIC_WINDOW_S = 60.0
# passages/minute cut points for the 3-level scale: <6 light, 6-20 moderate, >20 heavy
TRAFFIC_LEVEL_2_MIN = 6.0
TRAFFIC_LEVEL_3_ABOVE = 20.0

LED_RED = "red"
LED_GREEN = "green"


@dataclass(frozen=True)
class PowerProfile:
    """Node power budget in mW, with the sensing/reporting duty cycle."""

    ultrasonic_mw: float = 75.0
    radio_mw: float = 132.0
    mcu_mw: float = 25.0
    idle_mw: float = 50.0
    sense_duration_ms: float = 50.0
    report_period_ms: float = 500.0

    @property
    def active_mw(self) -> float:
        return self.ultrasonic_mw + self.radio_mw + self.mcu_mw

    def __post_init__(self):
        if self.idle_mw >= self.active_mw:
            raise ValueError("idle power must be below active power")
        if self.sense_duration_ms < 0 or self.report_period_ms <= 0:
            raise ValueError("durations must be positive")


def energy_per_report_mwh(
    profile: PowerProfile,
    hops: int,
    frame_airtime_us: int | None = None,
) -> float:
    """Energy of one report period in mWh.

    Active for the sensing window plus hops x frame airtime, idle for
    the remainder of the period.
    """
    if hops < 0:
        raise ValueError("hops must be non-negative")
    if frame_airtime_us is None:
        frame_airtime_us = airtime(FRAME_WIRE_BYTES, DATA_RATE_BPS)
    t_active_ms = profile.sense_duration_ms + hops * frame_airtime_us * 1000.0 / US_PER_S
    if t_active_ms > profile.report_period_ms:
        raise ValueError("active window exceeds the report period")
    t_idle_ms = profile.report_period_ms - t_active_ms
    return (profile.active_mw * t_active_ms + profile.idle_mw * t_idle_ms) * MWH_PER_MW_MS


def raw_occupancy(reading_m: float, threshold_m: float) -> bool:
    """True (occupied) iff the range reading falls below the threshold."""
    if reading_m < 0:
        raise ValueError(f"negative range reading {reading_m} m")
    return reading_m < threshold_m


class Debouncer:
    """Commit a state change only after `depth` consecutive equal raw inputs.

    A raw input that matches the committed state resets any pending
    streak, so constant input can never flip the committed state.
    """

    def __init__(self, committed: bool, depth: int = DEBOUNCE_DEPTH):
        if depth < 1:
            raise ValueError("debounce depth must be >= 1")
        self.committed = committed
        self.depth = depth
        self._streak = 0

    def update(self, raw: bool) -> bool:
        if raw == self.committed:
            self._streak = 0
        else:
            self._streak += 1
            if self._streak >= self.depth:
                self.committed = raw
                self._streak = 0
        return self.committed


def classify_occupancy(reading_m: float, threshold_m: float, debounce: Debouncer) -> bool:
    """Raw-classify one reading and feed it through the debouncer."""
    return debounce.update(raw_occupancy(reading_m, threshold_m))


def traffic_level(passages_per_minute: float) -> int:
    if passages_per_minute < 0:
        raise ValueError("passage rate must be non-negative")
    if passages_per_minute < TRAFFIC_LEVEL_2_MIN:
        return 1
    if passages_per_minute <= TRAFFIC_LEVEL_3_ABOVE:
        return 2
    return 3


class ParkingNode:
    """One parking-slot monitor: ultrasonic reading -> debounced occupancy
    -> LED -> one frame per report period."""

    kind = PARKING

    def __init__(
        self,
        node_id: int,
        slot_id: int,
        position: tuple[float, float],
        rng: random.Random,
        profile: PowerProfile | None = None,
        threshold_m: float = DEFAULT_OCCUPIED_THRESHOLD_M,
        noise_m: float = DEFAULT_SENSOR_NOISE_M,
        initially_occupied: bool = False,
    ):
        self.node_id = node_id
        self.slot_id = slot_id
        self.position = position
        self.rng = rng
        self.profile = profile or PowerProfile()
        self.threshold_m = threshold_m
        self.noise_m = noise_m
        self.debounce = Debouncer(committed=initially_occupied)
        self.hops = 1
        self.seq = 0
        self.energy_mwh = 0.0
        self.flip_count = 0

    @property
    def occupied(self) -> bool:
        return self.debounce.committed

    @property
    def led(self) -> str:
        return LED_RED if self.occupied else LED_GREEN

    def sense(self, true_distance_m: float) -> float:
        """One noisy range reading of the slot."""
        return max(0.0, true_distance_m + self.rng.uniform(-self.noise_m, self.noise_m))

    def tick(self, now_us: int, true_distance_m: float) -> Frame:
        """One report period: sense, debounce, emit, and bill the energy."""
        before = self.occupied
        classify_occupancy(self.sense(true_distance_m), self.threshold_m, self.debounce)
        if self.occupied != before:
            self.flip_count += 1
        self.seq += 1
        self.energy_mwh += energy_per_report_mwh(self.profile, self.hops)
        return Frame(
            src_node=self.node_id,
            node_kind=PARKING,
            seq=self.seq,
            epoch_id=now_us // int(self.profile.report_period_ms * 1000),
            payload=OCCUPIED if self.occupied else VACANT,
        )


class TrafficNode:
    """One roadside counter: passages in a sliding window -> level 1-3."""

    kind = TRAFFIC

    def __init__(
        self,
        node_id: int,
        position: tuple[float, float],
        profile: PowerProfile | None = None,
        window_s: float = TRAFFIC_WINDOW_S,
    ):
        self.node_id = node_id
        self.position = position
        self.profile = profile or PowerProfile()
        self.window_us = int(window_s * US_PER_S)
        self.hops = 1
        self.seq = 0
        self.energy_mwh = 0.0
        self._passages: list[int] = []

    def record_passage(self, now_us: int) -> None:
        self._passages.append(now_us)

    def rate_per_minute(self, now_us: int) -> float:
        cutoff = now_us - self.window_us
        self._passages = [t for t in self._passages if t > cutoff]
        return len(self._passages) * 60.0 * US_PER_S / self.window_us

    def level(self, now_us: int) -> int:
        return traffic_level(self.rate_per_minute(now_us))

    def tick(self, now_us: int) -> Frame:
        self.seq += 1
        self.energy_mwh += energy_per_report_mwh(self.profile, self.hops)
        return Frame(
            src_node=self.node_id,
            node_kind=TRAFFIC,
            seq=self.seq,
            epoch_id=now_us // int(self.profile.report_period_ms * 1000),
            payload=self.level(now_us),
        )
