"""Scenario configuration and the end-to-end simulation wiring.

A scenario is a YAML file describing stores (coordinator and node
placement), the car-arrival and road-traffic processes, and link
overrides.  Unknown keys are errors so typos never silently change a
run.  Given a seed, a run is fully deterministic: metrics CSVs and the
event trace are byte-identical across repeats.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import yaml

from .coordinator import (
    DEFAULT_TIMEOUT_MS,
    EPOCH_PERIOD_MS,
    CoordinatorPower,
    StoreAggregator,
    TelemetryUpdate,
    uplink_latency_us,
)
from .datastore import Datastore, StaleEpochError, StoreRecord
from .nodes import ParkingNode, TrafficNode
from .radio import OCCUPIED, VACANT, LinkModel, Topology, UnreachableNodeError, transmit
from .simcore import US_PER_MS, US_PER_S, Simulator

# True slot distances seen by the ultrasonic sensor; both sit well clear
# of the 1.0 m threshold so noise can never misclassify.
OCCUPIED_DISTANCE_M = 0.5
VACANT_DISTANCE_M = 2.5

EPOCH_PERIOD_US = EPOCH_PERIOD_MS * US_PER_MS

EVENT_NODE_TICK = "node-tick"
EVENT_EPOCH_OPEN = "epoch-open"
EVENT_EPOCH_DEADLINE = "epoch-deadline"
EVENT_FRAME_ARRIVAL = "frame-arrival"
EVENT_TELEMETRY_APPLY = "telemetry-apply"
EVENT_CAR_TOGGLE = "car-toggle"
EVENT_TRAFFIC_PASSAGE = "traffic-passage"


class ScenarioError(ValueError):
    """Configuration problem; the message names the offending field."""


@dataclass(frozen=True)
class CarProcess:
    """Alternating exponential occupied/vacant dwell times per slot."""

    mean_occupied_s: float = 900.0
    mean_vacant_s: float = 300.0


@dataclass(frozen=True)
class TrafficProcess:
    """Poisson road passages per traffic node."""

    passages_per_min: float = 10.0


@dataclass(frozen=True)
class StoreLayout:
    store_id: int
    store_name: str
    store_long: float
    store_lat: float
    parking_coordinator: tuple[float, float]
    traffic_coordinator: tuple[float, float]
    parking_positions: tuple[tuple[float, float], ...]
    traffic_positions: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    duration_s: float
    stores: tuple[StoreLayout, ...]
    car: CarProcess = CarProcess()
    traffic: TrafficProcess = TrafficProcess()
    link: LinkModel = LinkModel()
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    inventory: str | None = None
    api_port: int = 8000
    # relative weights of the recommendation criteria: product, parking, traffic
    recommend_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)


# -- config parsing -------------------------------------------------------


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScenarioError(f"{context}: missing required key '{key}'")
    return mapping[key]


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{context}: expected a mapping")
    for key in mapping:
        if key not in allowed:
            raise ScenarioError(f"{context}: unknown key '{key}'")


def _number(value, context: str, minimum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{context}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ScenarioError(f"{context}: must be finite")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{context}: must be >= {minimum}")
    return float(value)


def _position(value, context: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(f"{context}: expected [x, y]")
    return (_number(value[0], f"{context}[0]"), _number(value[1], f"{context}[1]"))


def _positions(value, context: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, list):
        raise ScenarioError(f"{context}: expected a list of [x, y] pairs")
    return tuple(_position(item, f"{context}[{i}]") for i, item in enumerate(value))


def _grid_positions(spec: dict, context: str) -> tuple[tuple[float, float], ...]:
    _check_keys(spec, {"origin", "rows", "cols", "pitch_m"}, context)
    origin = _position(_require(spec, "origin", context), f"{context}.origin")
    rows = int(_number(_require(spec, "rows", context), f"{context}.rows", minimum=1))
    cols = int(_number(_require(spec, "cols", context), f"{context}.cols", minimum=1))
    pitch = _number(_require(spec, "pitch_m", context), f"{context}.pitch_m", minimum=0.1)
    return tuple(
        (origin[0] + c * pitch, origin[1] + r * pitch) for r in range(rows) for c in range(cols)
    )


def _parse_store(raw: dict, context: str) -> StoreLayout:
    _check_keys(
        raw,
        {
            "store_id",
            "store_name",
            "store_long",
            "store_lat",
            "parking_coordinator",
            "traffic_coordinator",
            "parking_positions",
            "parking_grids",
            "traffic_positions",
        },
        context,
    )
    parking: tuple[tuple[float, float], ...] = ()
    if "parking_positions" in raw:
        parking += _positions(raw["parking_positions"], f"{context}.parking_positions")
    if "parking_grids" in raw:
        grids = raw["parking_grids"]
        if not isinstance(grids, list):
            raise ScenarioError(f"{context}.parking_grids: expected a list of grid specs")
        for i, spec in enumerate(grids):
            parking += _grid_positions(spec, f"{context}.parking_grids[{i}]")
    if not parking:
        raise ScenarioError(f"{context}: at least one parking slot is required")
    traffic = _positions(_require(raw, "traffic_positions", context), f"{context}.traffic_positions")
    if not traffic:
        raise ScenarioError(f"{context}: at least one traffic node is required")
    return StoreLayout(
        store_id=int(_number(_require(raw, "store_id", context), f"{context}.store_id", minimum=1)),
        store_name=str(_require(raw, "store_name", context)),
        store_long=_number(_require(raw, "store_long", context), f"{context}.store_long"),
        store_lat=_number(_require(raw, "store_lat", context), f"{context}.store_lat"),
        parking_coordinator=_position(
            _require(raw, "parking_coordinator", context), f"{context}.parking_coordinator"
        ),
        traffic_coordinator=_position(
            _require(raw, "traffic_coordinator", context), f"{context}.traffic_coordinator"
        ),
        parking_positions=parking,
        traffic_positions=traffic,
    )


def parse_scenario(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    _check_keys(
        raw,
        {
            "seed",
            "duration_s",
            "timeout_ms",
            "api_port",
            "inventory",
            "car_process",
            "traffic_process",
            "link",
            "stores",
            "recommend_weights",
        },
        "scenario",
    )
    seed = int(_number(_require(raw, "seed", "scenario"), "scenario.seed", minimum=0))
    duration_s = _number(_require(raw, "duration_s", "scenario"), "scenario.duration_s", minimum=0.001)

    car = CarProcess()
    if "car_process" in raw:
        section = raw["car_process"]
        _check_keys(section, {"mean_occupied_s", "mean_vacant_s"}, "car_process")
        car = CarProcess(
            mean_occupied_s=_number(
                section.get("mean_occupied_s", car.mean_occupied_s),
                "car_process.mean_occupied_s",
                minimum=0.001,
            ),
            mean_vacant_s=_number(
                section.get("mean_vacant_s", car.mean_vacant_s),
                "car_process.mean_vacant_s",
                minimum=0.001,
            ),
        )

    traffic = TrafficProcess()
    if "traffic_process" in raw:
        section = raw["traffic_process"]
        _check_keys(section, {"passages_per_min"}, "traffic_process")
        traffic = TrafficProcess(
            passages_per_min=_number(
                section.get("passages_per_min", traffic.passages_per_min),
                "traffic_process.passages_per_min",
                minimum=0.0,
            )
        )

    link = LinkModel()
    if "link" in raw:
        section = raw["link"]
        _check_keys(section, {"data_rate_bps", "max_range_m", "loss_within_range"}, "link")
        try:
            link = LinkModel(
                data_rate_bps=int(
                    _number(section.get("data_rate_bps", link.data_rate_bps), "link.data_rate_bps", minimum=1)
                ),
                max_range_m=_number(
                    section.get("max_range_m", link.max_range_m), "link.max_range_m", minimum=0.001
                ),
                loss_within_range=_number(
                    section.get("loss_within_range", link.loss_within_range),
                    "link.loss_within_range",
                    minimum=0.0,
                ),
            )
        except ValueError as exc:
            raise ScenarioError(f"link: {exc}") from exc

    stores_raw = _require(raw, "stores", "scenario")
    if not isinstance(stores_raw, list) or not stores_raw:
        raise ScenarioError("scenario: at least one store is required")
    stores = tuple(_parse_store(item, f"stores[{i}]") for i, item in enumerate(stores_raw))
    if len({s.store_id for s in stores}) != len(stores):
        raise ScenarioError("scenario: duplicate store_id")

    weights = (1.0, 1.0, 1.0)
    if "recommend_weights" in raw:
        section = raw["recommend_weights"]
        _check_keys(section, {"product", "parking", "traffic"}, "recommend_weights")
        weights = (
            _number(section.get("product", 1.0), "recommend_weights.product", minimum=0.0),
            _number(section.get("parking", 1.0), "recommend_weights.parking", minimum=0.0),
            _number(section.get("traffic", 1.0), "recommend_weights.traffic", minimum=0.0),
        )
        if sum(weights) == 0:
            raise ScenarioError("recommend_weights: at least one weight must be positive")

    inventory = raw.get("inventory")
    if inventory is not None:
        inventory = str(inventory)
        if base_dir is not None and not Path(inventory).is_absolute():
            inventory = str(base_dir / inventory)

    return ScenarioConfig(
        seed=seed,
        duration_s=duration_s,
        stores=stores,
        car=car,
        traffic=traffic,
        link=link,
        timeout_ms=int(
            _number(raw.get("timeout_ms", DEFAULT_TIMEOUT_MS), "scenario.timeout_ms", minimum=1)
        ),
        inventory=inventory,
        api_port=int(_number(raw.get("api_port", 8000), "scenario.api_port", minimum=1)),
        recommend_weights=weights,
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return parse_scenario(raw, base_dir=path.parent)


# -- metrics --------------------------------------------------------------


@dataclass
class NodeMetrics:
    node_id: int
    store_id: int
    kind: str
    hops: int
    frames_sent: int
    frames_delivered: int
    energy_mwh: float
    flip_count: int

    @property
    def frames_lost(self) -> int:
        return self.frames_sent - self.frames_delivered


@dataclass
class StoreMetrics:
    store_id: int
    epochs_closed: int
    closed_complete: int
    closed_by_timeout: int
    accuracy: float
    late_frames: int
    duplicate_frames: int
    updates_applied: int
    updates_superseded: int
    mean_latency_ms: float
    p95_latency_ms: float
    coordinator_energy_mwh: float


@dataclass
class MetricsReport:
    seed: int
    duration_s: float
    stores: list[StoreMetrics]
    nodes: list[NodeMetrics]
    medium_airtime_us: int
    warmup_epochs: int
    update_latencies_ms: list[float] = field(repr=False, default_factory=list)

    @property
    def frames_sent(self) -> int:
        return sum(n.frames_sent for n in self.nodes)

    @property
    def frames_delivered(self) -> int:
        return sum(n.frames_delivered for n in self.nodes)

    @property
    def frames_lost(self) -> int:
        return self.frames_sent - self.frames_delivered

    def store_csv_rows(self) -> list[list[str]]:
        rows = [
            [
                "store_id",
                "epochs_closed",
                "closed_complete",
                "closed_by_timeout",
                "availability_accuracy",
                "late_frames",
                "duplicate_frames",
                "updates_applied",
                "updates_superseded",
                "mean_update_latency_ms",
                "p95_update_latency_ms",
                "coordinator_energy_mwh",
            ]
        ]
        for s in self.stores:
            rows.append(
                [
                    str(s.store_id),
                    str(s.epochs_closed),
                    str(s.closed_complete),
                    str(s.closed_by_timeout),
                    f"{s.accuracy:.6f}",
                    str(s.late_frames),
                    str(s.duplicate_frames),
                    str(s.updates_applied),
                    str(s.updates_superseded),
                    f"{s.mean_latency_ms:.3f}",
                    f"{s.p95_latency_ms:.3f}",
                    f"{s.coordinator_energy_mwh:.6f}",
                ]
            )
        return rows

    def node_csv_rows(self) -> list[list[str]]:
        rows = [
            [
                "node_id",
                "store_id",
                "kind",
                "hops",
                "frames_sent",
                "frames_delivered",
                "frames_lost",
                "energy_mwh",
                "flip_count",
            ]
        ]
        for n in self.nodes:
            rows.append(
                [
                    str(n.node_id),
                    str(n.store_id),
                    n.kind,
                    str(n.hops),
                    str(n.frames_sent),
                    str(n.frames_delivered),
                    str(n.frames_lost),
                    f"{n.energy_mwh:.6f}",
                    str(n.flip_count),
                ]
            )
        return rows


def _percentile(values: list[float], fraction: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    index = max(0, min(len(ordered) - 1, int(round(fraction * len(ordered) + 0.5)) - 1))
    return ordered[index]


# -- the runner -----------------------------------------------------------


class _StoreRuntime:
    """Per-store simulation state: nodes, topologies, aggregator, oracle."""

    def __init__(self):
        self.layout: StoreLayout | None = None
        self.parking_nodes: list[ParkingNode] = []
        self.traffic_nodes: list[TrafficNode] = []
        self.aggregator: StoreAggregator | None = None
        self.ground_truth: dict[int, bool] = {}
        # committed occupancy recorded at each node's emission, per epoch
        self.epoch_truth: dict[int, dict[int, int]] = {}
        self.epoch_matches = 0
        self.epoch_total = 0
        self.updates_applied = 0
        self.updates_superseded = 0
        self.pending_flips: dict[int, tuple[int, int]] = {}
        self.latencies_ms: list[float] = []


class ScenarioRun:
    """Build and drive one simulated deployment against a datastore."""

    def __init__(
        self,
        config: ScenarioConfig,
        datastore: Datastore | None = None,
        silenced: set[int] | None = None,
        trace: TextIO | None = None,
        warmup_s: float = 2.0,
    ):
        self.config = config
        self.silenced = silenced or set()
        self.sim = Simulator(seed=config.seed, trace=trace)
        self.duration_us = int(config.duration_s * US_PER_S)
        self.warmup_us = int(warmup_s * US_PER_S)
        self.medium_airtime_us = 0
        self.stores: dict[int, _StoreRuntime] = {}
        self.telemetry_log: list[TelemetryUpdate] = []
        self._link_rngs: dict[int, random.Random] = {}
        self._car_rngs: dict[int, random.Random] = {}
        self._passage_rngs: dict[int, random.Random] = {}

        if datastore is not None:
            self.datastore = datastore
        elif config.inventory:
            self.datastore = Datastore.load(config.inventory)
        else:
            self.datastore = Datastore()

        self._build()
        self._schedule_initial_events()

    # -- construction --------------------------------------------------

    def _build(self) -> None:
        next_id = 1
        for layout in self.config.stores:
            runtime = _StoreRuntime()
            runtime.layout = layout
            rng_init = self.sim.rng.stream(f"init-{layout.store_id}")
            stationary_occupied = self.config.car.mean_occupied_s / (
                self.config.car.mean_occupied_s + self.config.car.mean_vacant_s
            )

            parking_ids: list[int] = []
            parking_positions: dict[int, tuple[float, float]] = {}
            for slot_index, position in enumerate(layout.parking_positions, start=1):
                node_id = next_id
                next_id += 1
                occupied = rng_init.random() < stationary_occupied
                node = ParkingNode(
                    node_id=node_id,
                    slot_id=slot_index,
                    position=position,
                    rng=self.sim.rng.stream(f"node-{node_id}"),
                    initially_occupied=occupied,
                )
                node.frames_sent = 0
                node.frames_delivered = 0
                runtime.parking_nodes.append(node)
                runtime.ground_truth[node_id] = occupied
                parking_ids.append(node_id)
                parking_positions[node_id] = position
                self._link_rngs[node_id] = self.sim.rng.stream(f"link-{node_id}")

            traffic_ids: list[int] = []
            traffic_positions: dict[int, tuple[float, float]] = {}
            for position in layout.traffic_positions:
                node_id = next_id
                next_id += 1
                node = TrafficNode(node_id=node_id, position=position)
                node.frames_sent = 0
                node.frames_delivered = 0
                runtime.traffic_nodes.append(node)
                traffic_ids.append(node_id)
                traffic_positions[node_id] = position
                self._link_rngs[node_id] = self.sim.rng.stream(f"link-{node_id}")

            parking_coord_id = next_id
            next_id += 1
            traffic_coord_id = next_id
            next_id += 1

            parking_topology = Topology(
                positions={**parking_positions, parking_coord_id: layout.parking_coordinator},
                coordinator=parking_coord_id,
                max_range_m=self.config.link.max_range_m,
            )
            traffic_topology = Topology(
                positions={**traffic_positions, traffic_coord_id: layout.traffic_coordinator},
                coordinator=traffic_coord_id,
                max_range_m=self.config.link.max_range_m,
            )
            try:
                for node in runtime.parking_nodes:
                    node.path = parking_topology.route(node.node_id)
                    node.hops = len(node.path) - 1
                for node in runtime.traffic_nodes:
                    node.path = traffic_topology.route(node.node_id)
                    node.hops = len(node.path) - 1
            except UnreachableNodeError as exc:
                raise ScenarioError(
                    f"store {layout.store_id}: node {exc.node_id} cannot reach its "
                    f"coordinator within {self.config.link.max_range_m} m"
                ) from exc

            runtime.aggregator = StoreAggregator(
                store_id=layout.store_id,
                parking_nodes=parking_ids,
                traffic_nodes=traffic_ids,
                timeout_ms=self.config.timeout_ms,
            )
            self.stores[layout.store_id] = runtime
            self._seed_store_row(layout, len(parking_ids))

    def _seed_store_row(self, layout: StoreLayout, parking_total: int) -> None:
        try:
            self.datastore.get_store(layout.store_id)
        except KeyError:
            self.datastore.add_store(
                StoreRecord(
                    store_id=layout.store_id,
                    store_name=layout.store_name,
                    store_long=layout.store_long,
                    store_lat=layout.store_lat,
                    store_parking_total=parking_total,
                    store_parking_available=parking_total,
                    avg_traffic=1,
                )
            )
        else:
            self.datastore.register_parking_capacity(layout.store_id, parking_total)

    # -- event scheduling ------------------------------------------------

    def _schedule_initial_events(self) -> None:
        for runtime in self.stores.values():
            store_id = runtime.layout.store_id
            for node in runtime.parking_nodes:
                self._schedule_parking_tick(runtime, node, 0)
                self._schedule_car_toggle(runtime, node.node_id, first=True)
            for node in runtime.traffic_nodes:
                self._schedule_traffic_tick(runtime, node, 0)
                self._schedule_traffic_passage(runtime, node, first=True)
            self._schedule_epoch_open(runtime, 0)

    def _schedule_parking_tick(self, runtime: _StoreRuntime, node: ParkingNode, at_us: int) -> None:
        def action() -> None:
            now = self.sim.now
            true_distance = (
                OCCUPIED_DISTANCE_M if runtime.ground_truth[node.node_id] else VACANT_DISTANCE_M
            )
            frame = node.tick(now, true_distance)
            runtime.epoch_truth.setdefault(frame.epoch_id, {})[node.node_id] = frame.payload
            self._transmit_frame(runtime, node, frame)
            next_at = now + EPOCH_PERIOD_US
            if next_at < self.duration_us:
                self._schedule_parking_tick(runtime, node, next_at)

        self.sim.schedule(at_us, EVENT_NODE_TICK, f"node-{node.node_id}", action)

    def _schedule_traffic_tick(self, runtime: _StoreRuntime, node: TrafficNode, at_us: int) -> None:
        def action() -> None:
            now = self.sim.now
            frame = node.tick(now)
            self._transmit_frame(runtime, node, frame)
            next_at = now + EPOCH_PERIOD_US
            if next_at < self.duration_us:
                self._schedule_traffic_tick(runtime, node, next_at)

        self.sim.schedule(at_us, EVENT_NODE_TICK, f"node-{node.node_id}", action)

    def _transmit_frame(self, runtime: _StoreRuntime, node, frame) -> None:
        node.frames_sent += 1
        if node.node_id in self.silenced:
            return
        outcome = transmit(frame, node.path, self.config.link, self._link_rngs[node.node_id])
        self.medium_airtime_us += outcome.airtime_us
        if not outcome.delivered:
            return
        arrival = self.sim.now + outcome.airtime_us

        def deliver() -> None:
            node.frames_delivered += 1
            update = runtime.aggregator.ingest_frame(frame, self.sim.now)
            if update is not None:
                self._emit_telemetry(runtime, update)

        self.sim.schedule(arrival, EVENT_FRAME_ARRIVAL, f"node-{frame.src_node}", deliver)

    def _schedule_epoch_open(self, runtime: _StoreRuntime, at_us: int) -> None:
        def action() -> None:
            now = self.sim.now
            epoch_id = now // EPOCH_PERIOD_US
            epoch = runtime.aggregator.open_epoch(epoch_id, now)

            def deadline() -> None:
                update = runtime.aggregator.handle_deadline(epoch_id, self.sim.now)
                if update is not None:
                    self._emit_telemetry(runtime, update)

            self.sim.schedule(
                epoch.deadline,
                EVENT_EPOCH_DEADLINE,
                f"store-{runtime.layout.store_id}",
                deadline,
            )
            next_at = now + EPOCH_PERIOD_US
            if next_at < self.duration_us:
                self._schedule_epoch_open(runtime, next_at)

        self.sim.schedule(at_us, EVENT_EPOCH_OPEN, f"store-{runtime.layout.store_id}", action)

    def _schedule_car_toggle(self, runtime: _StoreRuntime, node_id: int, first: bool) -> None:
        if first:
            self._car_rngs[node_id] = self.sim.rng.stream(f"car-{node_id}")
        rng = self._car_rngs[node_id]
        occupied = runtime.ground_truth[node_id]
        mean_s = self.config.car.mean_occupied_s if occupied else self.config.car.mean_vacant_s
        dwell_us = int(rng.expovariate(1.0 / mean_s) * US_PER_S)
        at_us = self.sim.now + max(1, dwell_us)
        if at_us >= self.duration_us:
            return

        def action() -> None:
            new_state = not runtime.ground_truth[node_id]
            runtime.ground_truth[node_id] = new_state
            target = OCCUPIED if new_state else VACANT
            runtime.pending_flips[node_id] = (self.sim.now, target)
            self._schedule_car_toggle(runtime, node_id, first=False)

        self.sim.schedule(at_us, EVENT_CAR_TOGGLE, f"node-{node_id}", action)

    def _schedule_traffic_passage(self, runtime: _StoreRuntime, node: TrafficNode, first: bool) -> None:
        if self.config.traffic.passages_per_min <= 0:
            return
        if first:
            self._passage_rngs[node.node_id] = self.sim.rng.stream(f"traffic-{node.node_id}")
        rng = self._passage_rngs[node.node_id]
        gap_us = int(rng.expovariate(self.config.traffic.passages_per_min / 60.0) * US_PER_S)
        at_us = self.sim.now + max(1, gap_us)
        if at_us >= self.duration_us:
            return

        def action() -> None:
            node.record_passage(self.sim.now)
            self._schedule_traffic_passage(runtime, node, first=False)

        self.sim.schedule(at_us, EVENT_TRAFFIC_PASSAGE, f"node-{node.node_id}", action)

    # -- telemetry plumbing ----------------------------------------------

    def _emit_telemetry(self, runtime: _StoreRuntime, update: TelemetryUpdate) -> None:
        self.telemetry_log.append(update)
        epoch = runtime.aggregator.last_closed
        truth = runtime.epoch_truth.pop(epoch.epoch_id, {})
        if epoch.opened_at >= self.warmup_us:
            runtime.epoch_total += 1
            oracle_vacant = sum(1 for payload in truth.values() if payload == VACANT)
            if update.parking_available == oracle_vacant:
                runtime.epoch_matches += 1
        effective = dict(epoch.effective_parking)
        latency = uplink_latency_us(update.payload_bytes())

        def apply() -> None:
            try:
                self.datastore.update_telemetry(update)
            except StaleEpochError:
                runtime.updates_superseded += 1
                return
            runtime.updates_applied += 1
            resolved = [
                node_id
                for node_id, (flip_at, target) in runtime.pending_flips.items()
                if effective.get(node_id) == target
            ]
            for node_id in resolved:
                flip_at, _ = runtime.pending_flips.pop(node_id)
                runtime.latencies_ms.append((self.sim.now - flip_at) / US_PER_MS)

        self.sim.schedule(
            self.sim.now + latency,
            EVENT_TELEMETRY_APPLY,
            f"store-{update.store_id}",
            apply,
        )

    # -- driving -----------------------------------------------------------

    def step(self, until_us: int) -> int:
        """Advance the simulation; used by the live-serving mode."""
        return self.sim.run_until(min(until_us, self.end_us))

    @property
    def end_us(self) -> int:
        # drain window: trailing epochs close up to one timeout late, plus
        # a millisecond for their uplink applies
        return self.duration_us + self.config.timeout_ms * US_PER_MS + US_PER_MS

    def run(self) -> MetricsReport:
        self.sim.run_until(self.end_us)
        return self.report()

    def report(self) -> MetricsReport:
        duration_h = self.duration_us / US_PER_S / 3600.0
        coordinator_energy = 2 * CoordinatorPower().total_mw * duration_h
        store_metrics = []
        all_latencies: list[float] = []
        for store_id in sorted(self.stores):
            runtime = self.stores[store_id]
            agg = runtime.aggregator
            accuracy = runtime.epoch_matches / runtime.epoch_total if runtime.epoch_total else 1.0
            store_metrics.append(
                StoreMetrics(
                    store_id=store_id,
                    epochs_closed=agg.closed_complete + agg.closed_by_timeout,
                    closed_complete=agg.closed_complete,
                    closed_by_timeout=agg.closed_by_timeout,
                    accuracy=accuracy,
                    late_frames=agg.late_frames,
                    duplicate_frames=agg.duplicate_frames,
                    updates_applied=runtime.updates_applied,
                    updates_superseded=runtime.updates_superseded,
                    mean_latency_ms=(
                        sum(runtime.latencies_ms) / len(runtime.latencies_ms)
                        if runtime.latencies_ms
                        else 0.0
                    ),
                    p95_latency_ms=_percentile(runtime.latencies_ms, 0.95),
                    coordinator_energy_mwh=coordinator_energy,
                )
            )
            all_latencies.extend(runtime.latencies_ms)

        node_metrics = []
        for store_id in sorted(self.stores):
            runtime = self.stores[store_id]
            for node in runtime.parking_nodes + runtime.traffic_nodes:
                node_metrics.append(
                    NodeMetrics(
                        node_id=node.node_id,
                        store_id=store_id,
                        kind=node.kind,
                        hops=node.hops,
                        frames_sent=node.frames_sent,
                        frames_delivered=node.frames_delivered,
                        energy_mwh=node.energy_mwh,
                        flip_count=getattr(node, "flip_count", 0),
                    )
                )

        report = MetricsReport(
            seed=self.config.seed,
            duration_s=self.config.duration_s,
            stores=store_metrics,
            nodes=node_metrics,
            medium_airtime_us=self.medium_airtime_us,
            warmup_epochs=int(self.warmup_us // EPOCH_PERIOD_US),
            update_latencies_ms=all_latencies,
        )
        self._check_invariants(report)
        return report

    def _check_invariants(self, report: MetricsReport) -> None:
        if report.frames_delivered > report.frames_sent:
            raise AssertionError("delivered more frames than were sent")
        duration_ms = self.duration_us / US_PER_MS
        for node_metrics in report.nodes:
            runtime = self.stores[node_metrics.store_id]
            node = next(
                n
                for n in runtime.parking_nodes + runtime.traffic_nodes
                if n.node_id == node_metrics.node_id
            )
            lower = node.profile.idle_mw * duration_ms / 3_600_000.0
            upper = node.profile.active_mw * duration_ms / 3_600_000.0
            if not lower - 1e-9 <= node_metrics.energy_mwh <= upper + 1e-9:
                raise AssertionError(
                    f"node {node_metrics.node_id} energy {node_metrics.energy_mwh} mWh "
                    f"outside [{lower}, {upper}]"
                )
        for store in report.stores:
            if not 0.0 <= store.accuracy <= 1.0:
                raise AssertionError("accuracy outside [0, 1]")
