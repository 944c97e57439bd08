"""Deterministic sensing-mesh simulator and availability services for a
connected supermarket chain: parking/traffic field nodes on a short-range
radio mesh, per-store aggregation coordinators, a chain datastore with a
query API, and deployment cost/power planning."""

__version__ = "0.1.0"
