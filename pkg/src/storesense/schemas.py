"""Published JSON schemas for the HTTP API responses.

The store and inventory shapes mirror the datastore column names
exactly; clients may validate any response body against these.
"""

STORE_RECORD_SCHEMA = {
    "type": "object",
    "properties": {
        "store_id": {"type": "integer", "minimum": 1},
        "store_name": {"type": "string"},
        "store_long": {"type": "number"},
        "store_lat": {"type": "number"},
        "store_parking_total": {"type": "integer", "minimum": 0},
        "store_parking_available": {"type": "integer", "minimum": 0},
        "avg_traffic": {"type": "integer", "minimum": 1, "maximum": 3},
    },
    "required": [
        "store_id",
        "store_name",
        "store_long",
        "store_lat",
        "store_parking_total",
        "store_parking_available",
        "avg_traffic",
    ],
    "additionalProperties": False,
}

STORE_LIST_SCHEMA = {"type": "array", "items": STORE_RECORD_SCHEMA}

INVENTORY_ITEM_SCHEMA = {
    "type": "object",
    "properties": {
        "store_id": {"type": "integer", "minimum": 1},
        "product_id": {"type": "integer", "minimum": 1},
        "name": {"type": "string"},
        "category": {"type": "string"},
        "product_location": {"type": "integer", "minimum": 0},
        "availability_in_store": {"type": "integer", "minimum": 0},
        "price": {"type": "string", "pattern": r"^\d+\.\d{3}$"},
    },
    "required": [
        "store_id",
        "product_id",
        "name",
        "category",
        "product_location",
        "availability_in_store",
        "price",
    ],
    "additionalProperties": False,
}

INVENTORY_LIST_SCHEMA = {"type": "array", "items": INVENTORY_ITEM_SCHEMA}

AVAILABILITY_ROW_SCHEMA = {
    "type": "object",
    "properties": {
        "product_id": {"type": "integer", "minimum": 1},
        "name": {"type": "string"},
        "store_id": {"type": "integer", "minimum": 1},
        "store_name": {"type": "string"},
        "availability_in_store": {"type": "integer", "minimum": 0},
    },
    "required": ["product_id", "name", "store_id", "store_name", "availability_in_store"],
    "additionalProperties": False,
}

AVAILABILITY_TABLE_SCHEMA = {"type": "array", "items": AVAILABILITY_ROW_SCHEMA}

RECOMMENDATION_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {
            "store_id": {"type": "integer", "minimum": 1},
            "store_name": {"type": "string"},
            "product_score": {"type": "number", "minimum": 0, "maximum": 1},
            "parking_score": {"type": "number", "minimum": 0, "maximum": 1},
            "traffic_score": {"type": "number", "minimum": 0, "maximum": 1},
            "total": {"type": "number", "minimum": 0, "maximum": 1},
        },
        "required": [
            "store_id",
            "store_name",
            "product_score",
            "parking_score",
            "traffic_score",
            "total",
        ],
        "additionalProperties": False,
    },
}
