"""Chain-wide datastore: store rows, product catalog, and per-store
inventory, with telemetry upserts and the query operations behind the
customer API.

Storage field names are the canonical database column names, lowercased
(store_parking_available, availability_in_store, ...), so the table
schema is the contract end to end.  Prices are integer thousandths of a
currency unit to keep the 3-decimal convention exact.  Snapshots are
line-delimited TSV sections, one entity kind per section, diffable by
humans.
"""

from __future__ import annotations

import os
import tempfile
import threading
from dataclasses import dataclass, replace

from .coordinator import TelemetryUpdate

STORE_COLUMNS = (
    "store_id",
    "store_name",
    "store_long",
    "store_lat",
    "store_parking_total",
    "store_parking_available",
    "avg_traffic",
)
PRODUCT_COLUMNS = ("product_id", "name", "category")
INVENTORY_COLUMNS = (
    "store_id",
    "product_id",
    "product_location",
    "availability_in_store",
    "price",
)


class StoreNotFoundError(KeyError):
    def __init__(self, store_id: int):
        super().__init__(f"no store with id {store_id}")
        self.store_id = store_id


class StaleEpochError(ValueError):
    """A telemetry update arrived for an epoch at or before the stored one."""

    def __init__(self, store_id: int, epoch_id: int, stored_epoch: int):
        super().__init__(
            f"store {store_id}: epoch {epoch_id} is not newer than stored epoch {stored_epoch}"
        )
        self.store_id = store_id
        self.epoch_id = epoch_id
        self.stored_epoch = stored_epoch


class SnapshotFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def price_text(price_milli: int) -> str:
    """Render integer thousandths as the 3-decimal price string."""
    if price_milli < 0:
        raise ValueError("price must be non-negative")
    return f"{price_milli // 1000}.{price_milli % 1000:03d}"


def parse_price(text: str) -> int:
    whole, _, frac = text.partition(".")
    if len(frac) != 3 or not whole.isdigit() or not frac.isdigit():
        raise ValueError(f"price {text!r} is not a 3-decimal amount")
    return int(whole) * 1000 + int(frac)


@dataclass(frozen=True)
class StoreRecord:
    store_id: int
    store_name: str
    store_long: float
    store_lat: float
    store_parking_total: int
    store_parking_available: int
    avg_traffic: int

    def __post_init__(self):
        if self.store_id <= 0:
            raise ValueError("store_id must be positive")
        if not 0 <= self.store_parking_available <= self.store_parking_total:
            raise ValueError("parking availability outside [0, total]")
        if not 1 <= self.avg_traffic <= 3:
            raise ValueError("avg_traffic must be a level 1-3")


@dataclass(frozen=True)
class ProductRecord:
    product_id: int
    name: str
    category: str


@dataclass(frozen=True)
class InventoryRecord:
    store_id: int
    product_id: int
    product_location: int
    availability_in_store: int
    price_milli: int

    def __post_init__(self):
        if self.availability_in_store < 0:
            raise ValueError("availability must be non-negative")
        if self.price_milli < 0:
            raise ValueError("price must be non-negative")


@dataclass(frozen=True)
class AvailabilityRow:
    """One cell of the cross-store availability table."""

    product_id: int
    product_name: str
    store_id: int
    store_name: str
    availability_in_store: int


class Datastore:
    """In-memory chain database: many readers, serialized writers.

    Telemetry is applied as an atomic row replacement and only for
    epochs strictly newer than the last accepted one per store.
    """

    def __init__(self):
        self._lock = threading.RLock()
        self._stores: dict[int, StoreRecord] = {}
        self._products: dict[int, ProductRecord] = {}
        self._inventory: dict[tuple[int, int], InventoryRecord] = {}
        self._applied_epoch: dict[int, int] = {}

    # -- mutation --------------------------------------------------------

    def add_store(self, record: StoreRecord) -> None:
        with self._lock:
            if record.store_id in self._stores:
                raise ValueError(f"duplicate store id {record.store_id}")
            self._stores[record.store_id] = record

    def add_product(self, record: ProductRecord) -> None:
        with self._lock:
            if record.product_id in self._products:
                raise ValueError(f"duplicate product id {record.product_id}")
            self._products[record.product_id] = record

    def add_inventory(self, record: InventoryRecord) -> None:
        with self._lock:
            if record.store_id not in self._stores:
                raise StoreNotFoundError(record.store_id)
            if record.product_id not in self._products:
                raise ValueError(f"inventory references unknown product {record.product_id}")
            key = (record.store_id, record.product_id)
            if key in self._inventory:
                raise ValueError(f"duplicate inventory row {key}")
            self._inventory[key] = record

    def update_telemetry(self, update: TelemetryUpdate) -> StoreRecord:
        with self._lock:
            current = self._stores.get(update.store_id)
            if current is None:
                raise StoreNotFoundError(update.store_id)
            stored_epoch = self._applied_epoch.get(update.store_id)
            if stored_epoch is not None and update.epoch_id <= stored_epoch:
                raise StaleEpochError(update.store_id, update.epoch_id, stored_epoch)
            if update.parking_available > current.store_parking_total:
                raise ValueError(
                    f"store {update.store_id}: availability {update.parking_available} "
                    f"exceeds registered total {current.store_parking_total}"
                )
            updated = replace(
                current,
                store_parking_available=update.parking_available,
                avg_traffic=update.avg_traffic,
            )
            self._stores[update.store_id] = updated
            self._applied_epoch[update.store_id] = update.epoch_id
            return updated

    def register_parking_capacity(self, store_id: int, parking_total: int) -> StoreRecord:
        """Align a store row with a deployed slot count (a deployment
        property, distinct from the telemetry path)."""
        with self._lock:
            current = self.get_store(store_id)
            updated = replace(
                current,
                store_parking_total=parking_total,
                store_parking_available=min(current.store_parking_available, parking_total),
            )
            self._stores[store_id] = updated
            return updated

    # -- queries ---------------------------------------------------------

    def list_stores(self) -> list[StoreRecord]:
        with self._lock:
            return [self._stores[sid] for sid in sorted(self._stores)]

    def get_store(self, store_id: int) -> StoreRecord:
        with self._lock:
            try:
                return self._stores[store_id]
            except KeyError:
                raise StoreNotFoundError(store_id) from None

    def get_store_inventory(self, store_id: int) -> list[tuple[ProductRecord, InventoryRecord]]:
        with self._lock:
            if store_id not in self._stores:
                raise StoreNotFoundError(store_id)
            rows = [
                (self._products[pid], self._inventory[(sid, pid)])
                for (sid, pid) in sorted(self._inventory)
                if sid == store_id
            ]
            return rows

    def search_products(self, category: str) -> list[AvailabilityRow]:
        """Cross-store availability for every catalog product in a category.

        Stores without a matching inventory row contribute a zero cell;
        an unknown category is an empty result, not an error.
        """
        with self._lock:
            products = [
                self._products[pid]
                for pid in sorted(self._products)
                if self._products[pid].category == category
            ]
            stores = self.list_stores()
            rows = []
            for product in products:
                for store in stores:
                    inv = self._inventory.get((store.store_id, product.product_id))
                    rows.append(
                        AvailabilityRow(
                            product_id=product.product_id,
                            product_name=product.name,
                            store_id=store.store_id,
                            store_name=store.store_name,
                            availability_in_store=inv.availability_in_store if inv else 0,
                        )
                    )
            return rows

    def applied_epoch(self, store_id: int) -> int | None:
        with self._lock:
            return self._applied_epoch.get(store_id)

    # -- persistence -----------------------------------------------------

    def save(self, path: str | os.PathLike) -> None:
        """Write a snapshot atomically (temp file + rename)."""
        with self._lock:
            text = self._render_snapshot()
        directory = os.path.dirname(os.path.abspath(path)) or "."
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".snapshot-", text=True)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _render_snapshot(self) -> str:
        lines = ["[stores]", "\t".join(STORE_COLUMNS)]
        for store in self.list_stores():
            lines.append(
                "\t".join(
                    [
                        str(store.store_id),
                        store.store_name,
                        f"{store.store_long:.8f}",
                        f"{store.store_lat:.8f}",
                        str(store.store_parking_total),
                        str(store.store_parking_available),
                        str(store.avg_traffic),
                    ]
                )
            )
        lines += ["[products]", "\t".join(PRODUCT_COLUMNS)]
        for pid in sorted(self._products):
            product = self._products[pid]
            lines.append("\t".join([str(product.product_id), product.name, product.category]))
        lines += ["[inventory]", "\t".join(INVENTORY_COLUMNS)]
        for key in sorted(self._inventory):
            inv = self._inventory[key]
            lines.append(
                "\t".join(
                    [
                        str(inv.store_id),
                        str(inv.product_id),
                        str(inv.product_location),
                        str(inv.availability_in_store),
                        price_text(inv.price_milli),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Datastore":
        with open(path, encoding="utf-8") as handle:
            return cls.loads(handle.read())

    @classmethod
    def loads(cls, text: str) -> "Datastore":
        store = cls()
        section: str | None = None
        columns: list[str] | None = None
        required = {
            "stores": STORE_COLUMNS,
            "products": PRODUCT_COLUMNS,
            "inventory": INVENTORY_COLUMNS,
        }
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                if section not in required:
                    raise SnapshotFormatError(line_no, f"unknown section {section!r}")
                columns = None
                continue
            if section is None:
                raise SnapshotFormatError(line_no, "data before any section header")
            fields = line.split("\t")
            if columns is None:
                columns = fields
                for name in required[section]:
                    if name not in columns:
                        raise SnapshotFormatError(line_no, f"missing column {name!r}")
                continue
            if len(fields) != len(columns):
                raise SnapshotFormatError(
                    line_no, f"expected {len(columns)} fields, got {len(fields)}"
                )
            row = dict(zip(columns, fields))
            try:
                if section == "stores":
                    store.add_store(
                        StoreRecord(
                            store_id=int(row["store_id"]),
                            store_name=row["store_name"],
                            store_long=float(row["store_long"]),
                            store_lat=float(row["store_lat"]),
                            store_parking_total=int(row["store_parking_total"]),
                            store_parking_available=int(row["store_parking_available"]),
                            avg_traffic=int(row["avg_traffic"]),
                        )
                    )
                elif section == "products":
                    store.add_product(
                        ProductRecord(
                            product_id=int(row["product_id"]),
                            name=row["name"],
                            category=row["category"],
                        )
                    )
                else:
                    store.add_inventory(
                        InventoryRecord(
                            store_id=int(row["store_id"]),
                            product_id=int(row["product_id"]),
                            product_location=int(row["product_location"]),
                            availability_in_store=int(row["availability_in_store"]),
                            price_milli=parse_price(row["price"]),
                        )
                    )
            except (ValueError, KeyError) as exc:
                if isinstance(exc, SnapshotFormatError):
                    raise
                raise SnapshotFormatError(line_no, str(exc)) from exc
        return store

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Datastore):
            return NotImplemented
        return (
            self._stores == other._stores
            and self._products == other._products
            and self._inventory == other._inventory
        )
