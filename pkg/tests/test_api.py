from __future__ import annotations

import jsonschema
import pytest
from fastapi.testclient import TestClient

from storesense.api import ScoreWeights, create_app, score_store
from storesense.datastore import Datastore, StoreRecord
from storesense.schemas import (
    AVAILABILITY_TABLE_SCHEMA,
    INVENTORY_LIST_SCHEMA,
    RECOMMENDATION_SCHEMA,
    STORE_LIST_SCHEMA,
    STORE_RECORD_SCHEMA,
)

STORE_KEYS = {
    "store_id",
    "store_name",
    "store_long",
    "store_lat",
    "store_parking_total",
    "store_parking_available",
    "avg_traffic",
}


@pytest.fixture
def client(chain_store: Datastore) -> TestClient:
    return TestClient(create_app(chain_store))


def telemetry_body(**overrides) -> dict:
    body = {
        "store_id": 1,
        "epoch_id": 1,
        "parking_available": 1,
        "parking_total": 3,
        "avg_traffic": 3,
        "stale_nodes": [],
    }
    body.update(overrides)
    return body


# -- GET /stores --------------------------------------------------------------


def test_list_stores_matches_the_fixture(client: TestClient) -> None:
    body = client.get("/stores").json()
    assert len(body) == 2
    assert body[0]["store_parking_available"] == 2
    assert body[1]["store_name"] == "Sultan_shaab"
    jsonschema.validate(body, STORE_LIST_SCHEMA)


def test_store_response_keys_are_exactly_the_table_columns(client: TestClient) -> None:
    body = client.get("/stores").json()
    for row in body:
        assert set(row) == STORE_KEYS


def test_empty_store_set_lists_nothing() -> None:
    client = TestClient(create_app(Datastore()))
    assert client.get("/stores").json() == []


# -- GET /stores/{id} ----------------------------------------------------------


def test_get_store_detail(client: TestClient) -> None:
    body = client.get("/stores/1").json()
    assert body["store_name"] == "Sultan_salmiyah"
    assert set(body) == STORE_KEYS
    jsonschema.validate(body, STORE_RECORD_SCHEMA)


def test_get_unknown_store_is_404(client: TestClient) -> None:
    assert client.get("/stores/999").status_code == 404


def test_store_detail_reflects_a_telemetry_push(client: TestClient) -> None:
    response = client.post("/telemetry", json=telemetry_body())
    assert response.status_code == 204
    body = client.get("/stores/1").json()
    assert body["store_parking_available"] == 1
    assert body["avg_traffic"] == 3


# -- GET /stores/{id}/inventory ---------------------------------------------------


def test_store_inventory_has_six_items_with_three_decimal_prices(client: TestClient) -> None:
    body = client.get("/stores/1/inventory").json()
    assert len(body) == 6
    assert body[0]["price"] == "2.000"
    assert {row["price"] for row in body} == {"2.000", "0.100", "1.000", "5.000", "6.000"}
    jsonschema.validate(body, INVENTORY_LIST_SCHEMA)


def test_inventory_for_unknown_store_is_404(client: TestClient) -> None:
    assert client.get("/stores/999/inventory").status_code == 404


# -- GET /products -----------------------------------------------------------------


def test_products_cross_store_matrix(client: TestClient) -> None:
    body = client.get("/products", params={"category": "dairy"}).json()
    jsonschema.validate(body, AVAILABILITY_TABLE_SCHEMA)
    cells = {(row["product_id"], row["store_id"]): row["availability_in_store"] for row in body}
    assert cells[(1, 1)] == 5
    assert cells[(1, 2)] == 0
    assert cells[(3, 1)] == 1
    assert cells[(3, 2)] == 0


def test_products_without_category_param_is_400(client: TestClient) -> None:
    assert client.get("/products").status_code == 400


def test_products_unknown_category_is_200_empty(client: TestClient) -> None:
    response = client.get("/products", params={"category": "fireworks"})
    assert response.status_code == 200
    assert response.json() == []


# -- POST /telemetry ------------------------------------------------------------------


def test_telemetry_write_then_read(client: TestClient) -> None:
    assert client.post("/telemetry", json=telemetry_body(epoch_id=2)).status_code == 204
    assert client.get("/stores/1").json()["store_parking_available"] == 1


def test_stale_epoch_is_409(client: TestClient) -> None:
    assert client.post("/telemetry", json=telemetry_body(epoch_id=5)).status_code == 204
    assert client.post("/telemetry", json=telemetry_body(epoch_id=4)).status_code == 409
    assert client.post("/telemetry", json=telemetry_body(epoch_id=5)).status_code == 409


def test_availability_over_total_is_400(client: TestClient) -> None:
    body = telemetry_body(parking_available=4, parking_total=3)
    assert client.post("/telemetry", json=body).status_code == 400


def test_telemetry_unknown_store_is_404(client: TestClient) -> None:
    assert client.post("/telemetry", json=telemetry_body(store_id=77)).status_code == 404


# -- GET /recommend --------------------------------------------------------------------


def test_perfect_store_scores_one() -> None:
    record = StoreRecord(1, "x", 0.0, 0.0, 10, 10, 1)
    scored = score_store(record, stocked_count=3, requested_count=3, weights=ScoreWeights())
    assert scored["total"] == pytest.approx(1.0)


def test_recommend_scores_the_fixture_by_hand(client: TestClient) -> None:
    body = client.get("/recommend", params={"product_ids": "1"}).json()
    jsonschema.validate(body, RECOMMENDATION_SCHEMA)
    assert [row["store_id"] for row in body] == [1, 2]
    top = body[0]
    assert top["product_score"] == pytest.approx(1.0)
    assert top["parking_score"] == pytest.approx(2 / 3)
    assert top["traffic_score"] == pytest.approx(0.5)
    assert top["total"] == pytest.approx((1.0 + 2 / 3 + 0.5) / 3)
    assert top["total"] == pytest.approx(0.7222, abs=5e-5)
    assert body[1]["total"] == pytest.approx((0.0 + 1.0 + 0.0) / 3)


def test_recommend_requires_product_ids(client: TestClient) -> None:
    assert client.get("/recommend").status_code == 400
    assert client.get("/recommend", params={"product_ids": ""}).status_code == 400
    assert client.get("/recommend", params={"product_ids": "a,b"}).status_code == 400


def test_ranking_is_invariant_under_store_insertion_order(chain_snapshot_path) -> None:
    forward = Datastore.load(chain_snapshot_path)
    reversed_store = Datastore()
    for record in reversed(forward.list_stores()):
        reversed_store.add_store(record)
    for pid in (1, 2, 3, 4, 5, 6):
        product = next(p for p in (forward.get_store_inventory(1)) if p[1].product_id == pid)[0]
        reversed_store.add_product(product)
    for _, inv in forward.get_store_inventory(1):
        reversed_store.add_inventory(inv)
    a = TestClient(create_app(forward)).get("/recommend", params={"product_ids": "1,3"}).json()
    b = TestClient(create_app(reversed_store)).get("/recommend", params={"product_ids": "1,3"}).json()
    assert a == b


def test_tied_totals_order_by_store_id() -> None:
    store = Datastore()
    store.add_store(StoreRecord(2, "b", 0.0, 0.0, 4, 2, 2))
    store.add_store(StoreRecord(1, "a", 0.0, 0.0, 4, 2, 2))
    client = TestClient(create_app(store))
    body = client.get("/recommend", params={"product_ids": "9"}).json()
    assert [row["store_id"] for row in body] == [1, 2]
    assert body[0]["total"] == body[1]["total"]


def test_ranking_is_invariant_under_weight_rescaling(chain_store: Datastore) -> None:
    base = TestClient(create_app(chain_store, ScoreWeights(1, 1, 1)))
    scaled = TestClient(create_app(chain_store, ScoreWeights(3, 3, 3)))
    a = base.get("/recommend", params={"product_ids": "1,2"}).json()
    b = scaled.get("/recommend", params={"product_ids": "1,2"}).json()
    assert [row["store_id"] for row in a] == [row["store_id"] for row in b]
    for row_a, row_b in zip(a, b):
        assert row_a["total"] == pytest.approx(row_b["total"])


def test_component_scores_stay_in_unit_range(chain_store: Datastore) -> None:
    client = TestClient(create_app(chain_store))
    body = client.get("/recommend", params={"product_ids": "1,2,3,4,5,6"}).json()
    for row in body:
        for key in ("product_score", "parking_score", "traffic_score", "total"):
            assert 0.0 <= row[key] <= 1.0
