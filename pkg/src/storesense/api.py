"""HTTP/JSON boundary between the sensing fabric, the datastore, and the
customer client, including the store-recommendation ranking.

All reads are idempotent; the only mutation is the telemetry ingest,
which is idempotent per (store_id, epoch_id).  Field names on the wire
are the datastore column names, lowercased.
"""

from __future__ import annotations

from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .coordinator import TelemetryUpdate
from .datastore import (
    Datastore,
    InventoryRecord,
    ProductRecord,
    StaleEpochError,
    StoreNotFoundError,
    StoreRecord,
    price_text,
)


@dataclass(frozen=True)
class ScoreWeights:
    """Relative weights of the three recommendation criteria."""

    product: float = 1.0
    parking: float = 1.0
    traffic: float = 1.0

    def __post_init__(self):
        if min(self.product, self.parking, self.traffic) < 0:
            raise ValueError("weights must be non-negative")
        if self.product + self.parking + self.traffic == 0:
            raise ValueError("at least one weight must be positive")


def store_to_json(record: StoreRecord) -> dict:
    return {
        "store_id": record.store_id,
        "store_name": record.store_name,
        "store_long": record.store_long,
        "store_lat": record.store_lat,
        "store_parking_total": record.store_parking_total,
        "store_parking_available": record.store_parking_available,
        "avg_traffic": record.avg_traffic,
    }


def inventory_to_json(product: ProductRecord, inv: InventoryRecord) -> dict:
    return {
        "store_id": inv.store_id,
        "product_id": inv.product_id,
        "name": product.name,
        "category": product.category,
        "product_location": inv.product_location,
        "availability_in_store": inv.availability_in_store,
        "price": price_text(inv.price_milli),
    }


def score_store(
    record: StoreRecord,
    stocked_count: int,
    requested_count: int,
    weights: ScoreWeights,
) -> dict:
    """Score one store on product coverage, parking headroom, and traffic.

    Each component is normalized to [0, 1]; the total is the weighted
    mean, so rescaling all weights by the same factor never changes the
    ranking.
    """
    product_score = stocked_count / requested_count if requested_count else 0.0
    parking_score = (
        record.store_parking_available / record.store_parking_total
        if record.store_parking_total
        else 0.0
    )
    traffic_score = (3 - record.avg_traffic) / 2
    weight_sum = weights.product + weights.parking + weights.traffic
    total = (
        weights.product * product_score
        + weights.parking * parking_score
        + weights.traffic * traffic_score
    ) / weight_sum
    return {
        "store_id": record.store_id,
        "store_name": record.store_name,
        "product_score": product_score,
        "parking_score": parking_score,
        "traffic_score": traffic_score,
        "total": total,
    }


class TelemetryBody(BaseModel):
    store_id: int
    epoch_id: int
    parking_available: int
    parking_total: int
    avg_traffic: int
    stale_nodes: list[int] = []


def create_app(store: Datastore, weights: ScoreWeights | None = None) -> FastAPI:
    """Build the service around a datastore instance.

    The datastore may be fed concurrently by a live simulation; every
    handler goes through its serialized-writer contract.
    """
    weights = weights or ScoreWeights()
    app = FastAPI(title="storesense", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET", "POST"], allow_headers=["*"]
    )

    @app.get("/stores")
    def list_stores() -> list[dict]:
        return [store_to_json(record) for record in store.list_stores()]

    @app.get("/stores/{store_id}")
    def get_store(store_id: int) -> dict:
        try:
            return store_to_json(store.get_store(store_id))
        except StoreNotFoundError:
            raise HTTPException(status_code=404, detail=f"no store with id {store_id}")

    @app.get("/stores/{store_id}/inventory")
    def get_store_inventory(store_id: int) -> list[dict]:
        try:
            rows = store.get_store_inventory(store_id)
        except StoreNotFoundError:
            raise HTTPException(status_code=404, detail=f"no store with id {store_id}")
        return [inventory_to_json(product, inv) for product, inv in rows]

    @app.get("/products")
    def search_products(category: str | None = Query(default=None)) -> list[dict]:
        if category is None:
            raise HTTPException(status_code=400, detail="missing required query param 'category'")
        return [
            {
                "product_id": row.product_id,
                "name": row.product_name,
                "store_id": row.store_id,
                "store_name": row.store_name,
                "availability_in_store": row.availability_in_store,
            }
            for row in store.search_products(category)
        ]

    @app.post("/telemetry", status_code=204)
    def post_telemetry(body: TelemetryBody) -> Response:
        if body.parking_available > body.parking_total or body.parking_available < 0:
            raise HTTPException(status_code=400, detail="parking_available outside [0, total]")
        if not 1 <= body.avg_traffic <= 3:
            raise HTTPException(status_code=400, detail="avg_traffic must be a level 1-3")
        update = TelemetryUpdate(
            store_id=body.store_id,
            epoch_id=body.epoch_id,
            parking_available=body.parking_available,
            parking_total=body.parking_total,
            avg_traffic=body.avg_traffic,
            stale_nodes=tuple(body.stale_nodes),
            emitted_at=0,
        )
        try:
            store.update_telemetry(update)
        except StoreNotFoundError:
            raise HTTPException(status_code=404, detail=f"no store with id {body.store_id}")
        except StaleEpochError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return Response(status_code=204)

    @app.get("/recommend")
    def recommend(product_ids: str | None = Query(default=None)) -> list[dict]:
        if not product_ids:
            raise HTTPException(status_code=400, detail="product_ids must list at least one id")
        try:
            requested = [int(part) for part in product_ids.split(",") if part.strip()]
        except ValueError:
            raise HTTPException(status_code=400, detail="product_ids must be comma-separated integers")
        if not requested:
            raise HTTPException(status_code=400, detail="product_ids must list at least one id")
        scored = []
        for record in store.list_stores():
            on_shelf = {
                inv.product_id: inv.availability_in_store
                for _, inv in store.get_store_inventory(record.store_id)
            }
            stocked = sum(1 for pid in requested if on_shelf.get(pid, 0) > 0)
            scored.append(score_store(record, stocked, len(requested), weights))
        scored.sort(key=lambda row: (-row["total"], row["store_id"]))
        return scored

    return app
