from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from storesense.coordinator import (
    CoordinatorPower,
    EpochClosedError,
    StoreAggregator,
    TelemetryUpdate,
    aggregate_traffic,
    push_telemetry,
    uplink_latency_us,
)
from storesense.radio import OCCUPIED, PARKING, TRAFFIC, VACANT, Frame


def frame(src: int, epoch: int, payload: int, kind: str = PARKING, seq: int = 1) -> Frame:
    return Frame(src_node=src, node_kind=kind, seq=seq, epoch_id=epoch, payload=payload)


def make_aggregator(parking=(1, 2, 3), traffic=(10,), timeout_ms: int = 1000) -> StoreAggregator:
    return StoreAggregator(store_id=1, parking_nodes=parking, traffic_nodes=traffic, timeout_ms=timeout_ms)


# -- coordinator power --------------------------------------------------------


def test_coordinator_power_is_host_plus_radio() -> None:
    power = CoordinatorPower()
    assert power.total_mw == 10_000 + 132 == 10_132


# -- epoch lifecycle -----------------------------------------------------------


def test_epoch_closes_early_when_all_nodes_report() -> None:
    agg = make_aggregator()
    agg.open_epoch(0, 0)
    assert agg.ingest_frame(frame(1, 0, OCCUPIED), 100) is None
    assert agg.ingest_frame(frame(2, 0, VACANT), 200) is None
    assert agg.ingest_frame(frame(10, 0, 2, kind=TRAFFIC), 300) is None
    update = agg.ingest_frame(frame(3, 0, VACANT), 400)
    assert update is not None
    assert update.emitted_at == 400 < 1_000_000  # before the deadline
    assert agg.closed_complete == 1


def test_duplicate_frame_is_ignored_first_wins() -> None:
    agg = make_aggregator()
    epoch = agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, VACANT), 100)
    agg.ingest_frame(frame(1, 0, OCCUPIED, seq=2), 150)
    assert agg.duplicate_frames == 1
    assert epoch.received[1] == VACANT
    assert len(epoch.received) == 1


def test_frame_for_a_closed_epoch_counts_as_late() -> None:
    agg = make_aggregator(parking=(1,), traffic=(10,))
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, VACANT), 100)
    agg.ingest_frame(frame(10, 0, 1, kind=TRAFFIC), 150)  # closes epoch 0
    agg.open_epoch(1, 500_000)
    assert agg.ingest_frame(frame(1, 0, VACANT, seq=2), 520_000) is None
    assert agg.late_frames == 1


def test_unregistered_node_frame_is_discarded() -> None:
    agg = make_aggregator()
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(99, 0, VACANT), 100)
    assert agg.late_frames == 1


def test_timeout_close_lists_missing_nodes_as_stale() -> None:
    agg = make_aggregator()
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, VACANT), 100)
    agg.ingest_frame(frame(10, 0, 2, kind=TRAFFIC), 150)
    update = agg.handle_deadline(0, 1_000_000)
    assert update is not None
    assert update.stale_nodes == (2, 3)
    assert agg.closed_by_timeout == 1


def test_deadline_after_early_close_is_a_no_op() -> None:
    agg = make_aggregator(parking=(1,), traffic=(10,))
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, VACANT), 100)
    agg.ingest_frame(frame(10, 0, 1, kind=TRAFFIC), 150)
    assert agg.handle_deadline(0, 1_000_000) is None
    assert agg.closed_by_timeout == 0


def test_an_epoch_closes_exactly_once() -> None:
    agg = make_aggregator(parking=(1,), traffic=(10,))
    epoch = agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, VACANT), 100)
    agg.ingest_frame(frame(10, 0, 1, kind=TRAFFIC), 150)
    with pytest.raises(EpochClosedError):
        agg.close_epoch(epoch, 200)


# -- close aggregation ----------------------------------------------------------


def test_reported_availability_counts_vacant_slots() -> None:
    # total 3 slots, reports [occupied, vacant, vacant] -> 2 available
    agg = make_aggregator()
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, OCCUPIED), 100)
    agg.ingest_frame(frame(2, 0, VACANT), 110)
    agg.ingest_frame(frame(10, 0, 2, kind=TRAFFIC), 120)
    update = agg.ingest_frame(frame(3, 0, VACANT), 130)
    assert update.parking_available == 2
    assert update.parking_total == 3
    assert update.avg_traffic == 2


def test_all_vacant_reports_full_availability() -> None:
    agg = make_aggregator()
    agg.open_epoch(0, 0)
    for node in (1, 2, 3):
        agg.ingest_frame(frame(node, 0, VACANT), 100 + node)
    update = agg.ingest_frame(frame(10, 0, 1, kind=TRAFFIC), 200)
    assert update.parking_available == update.parking_total == 3


def test_silent_node_reuses_last_known_value() -> None:
    agg = make_aggregator()
    # epoch 0: everyone reports, node 2 vacant
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, OCCUPIED), 10)
    agg.ingest_frame(frame(2, 0, VACANT), 20)
    agg.ingest_frame(frame(3, 0, OCCUPIED), 30)
    agg.ingest_frame(frame(10, 0, 2, kind=TRAFFIC), 40)
    # epoch 1: node 2 goes silent
    agg.open_epoch(1, 500_000)
    agg.ingest_frame(frame(1, 1, OCCUPIED, seq=2), 500_010)
    agg.ingest_frame(frame(3, 1, OCCUPIED, seq=2), 500_030)
    agg.ingest_frame(frame(10, 1, 2, kind=TRAFFIC, seq=2), 500_040)
    update = agg.handle_deadline(1, 1_500_000)
    assert update.stale_nodes == (2,)
    assert update.parking_available == 1  # node 2 still counted vacant


def test_never_seen_node_counts_as_occupied() -> None:
    agg = make_aggregator()
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, VACANT), 10)
    agg.ingest_frame(frame(10, 0, 1, kind=TRAFFIC), 20)
    update = agg.handle_deadline(0, 1_000_000)
    assert update.parking_available == 1
    assert update.stale_nodes == (2, 3)


def test_never_seen_traffic_node_counts_as_heavy() -> None:
    agg = make_aggregator(parking=(1,), traffic=(10, 11))
    agg.open_epoch(0, 0)
    agg.ingest_frame(frame(1, 0, VACANT), 10)
    agg.ingest_frame(frame(10, 0, 1, kind=TRAFFIC), 20)
    update = agg.handle_deadline(0, 1_000_000)
    assert update.avg_traffic == aggregate_traffic([1, 3]) == 2


# -- traffic aggregation -----------------------------------------------------------


def test_uniform_levels_aggregate_to_themselves() -> None:
    assert aggregate_traffic([3, 3, 3, 3]) == 3


def test_singleton_mean() -> None:
    assert aggregate_traffic([2]) == 2


def test_half_means_round_up() -> None:
    assert aggregate_traffic([1, 2]) == 2
    assert aggregate_traffic([2, 3]) == 3


def test_empty_levels_is_an_error() -> None:
    with pytest.raises(ValueError):
        aggregate_traffic([])


def test_out_of_scale_level_is_rejected() -> None:
    with pytest.raises(ValueError):
        aggregate_traffic([0, 2])


@given(st.lists(st.integers(min_value=1, max_value=3), min_size=1, max_size=50))
def test_aggregate_stays_on_scale_and_tracks_the_mean(levels: list[int]) -> None:
    result = aggregate_traffic(levels)
    mean = sum(levels) / len(levels)
    assert 1 <= result <= 3
    assert abs(result - mean) <= 0.5


# -- uplink -------------------------------------------------------------------------


def test_uplink_latency_for_200_bytes_is_30_us() -> None:
    assert uplink_latency_us(200) == 30


def test_push_telemetry_applies_to_the_sink() -> None:
    class Sink:
        def __init__(self):
            self.updates = []

        def update_telemetry(self, update):
            self.updates.append(update)
            return update

    sink = Sink()
    update = TelemetryUpdate(
        store_id=1,
        epoch_id=0,
        parking_available=2,
        parking_total=3,
        avg_traffic=2,
        stale_nodes=(),
        emitted_at=0,
    )
    latency = push_telemetry(sink, update)
    assert sink.updates == [update]
    assert 0 < latency < 1000  # well under a millisecond at 54 Mbps


def test_update_validates_its_invariants() -> None:
    with pytest.raises(ValueError):
        TelemetryUpdate(1, 0, parking_available=4, parking_total=3, avg_traffic=2, stale_nodes=(), emitted_at=0)
    with pytest.raises(ValueError):
        TelemetryUpdate(1, 0, parking_available=1, parking_total=3, avg_traffic=4, stale_nodes=(), emitted_at=0)
