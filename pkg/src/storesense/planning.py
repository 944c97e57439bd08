"""Deployment planning: bill-of-materials cost sheets, node/coordinator
power budgets, and battery life.

Money is handled as integer cents so a cost sheet reproduces its source
quantities to the cent.  The reference deployment is a single large
branch flanked by two streets: 90 parking sensors (a 70-car lot plus a
20-car lot), 8 traffic sensors (4 per street, 2 per direction), and 2
collection coordinators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .coordinator import CoordinatorPower
from .nodes import PowerProfile
from .radio import DATA_RATE_BPS, FRAME_WIRE_BYTES, airtime

# Component unit costs in cents.  Order matters: cost sheets list lines
# in this canonical order.
UNIT_COST_CENTS: dict[str, int] = {
    "Arduino Fio": 35_00,
    "Xbee Series 2": 23_00,
    "Ultrasonic Sensor": 2_00,
    "Battery": 13_00,
    "Solar Panel": 6_00,
    "Raspberry Pi 3": 35_00,
    "Software": 1_000_00,
    "Maintenance/year": 1_500_00,
    "Arduino UNO": 25_00,
}

SULTAN_CENTER_PARKING_SLOTS = 90  # 70-car lot + 20-car lot
SULTAN_CENTER_TRAFFIC_NODES = 8  # 4 per street, 2 per direction
SULTAN_CENTER_COORDINATORS = 2

DEFAULT_BATTERY_WH = 3.7  # 1000 mAh at 3.7 V nominal


@dataclass(frozen=True)
class DeploymentSpec:
    """Node/coordinator counts plus the unit price card."""

    parking_slots: int
    traffic_nodes: int
    coordinators: int
    unit_cost_cents: dict[str, int] = field(default_factory=lambda: dict(UNIT_COST_CENTS))
    maintenance_years: int = 1

    def __post_init__(self):
        for name, value in (
            ("parking_slots", self.parking_slots),
            ("traffic_nodes", self.traffic_nodes),
            ("coordinators", self.coordinators),
            ("maintenance_years", self.maintenance_years),
        ):
            if value < 0:
                raise ValueError(f"{name} must be non-negative")
        for component, cents in self.unit_cost_cents.items():
            if cents < 0:
                raise ValueError(f"negative unit cost for {component!r}")

    @property
    def node_count(self) -> int:
        return self.parking_slots + self.traffic_nodes

    @property
    def radio_modules(self) -> int:
        # every node and every coordinator carries one radio
        return self.node_count + self.coordinators


@dataclass(frozen=True)
class CostLine:
    component: str
    unit_cost_cents: int
    qty: int

    @property
    def cost_cents(self) -> int:
        return self.unit_cost_cents * self.qty


@dataclass(frozen=True)
class CostSheet:
    lines: tuple[CostLine, ...]

    @property
    def total_cents(self) -> int:
        return sum(line.cost_cents for line in self.lines)

    def line(self, component: str) -> CostLine:
        for entry in self.lines:
            if entry.component == component:
                return entry
        raise KeyError(component)

    def format_table(self) -> str:
        """Aligned text table, dollars with thousands separators."""
        rows = [("", "Cost/Unit", "Qty", "Cost")]
        for entry in self.lines:
            rows.append(
                (
                    entry.component,
                    format_usd(entry.unit_cost_cents),
                    str(entry.qty),
                    format_usd(entry.cost_cents),
                )
            )
        rows.append(("Total", "", "", format_usd(self.total_cents)))
        widths = [max(len(row[i]) for row in rows) for i in range(4)]
        out = []
        for row in rows:
            out.append(
                "  ".join(
                    cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
                    for i, cell in enumerate(row)
                ).rstrip()
            )
        return "\n".join(out)

    def to_csv_rows(self) -> list[list[str]]:
        """Rows for the cost CSV: component, unit_cost_usd, qty, cost_usd."""
        rows = [["component", "unit_cost_usd", "qty", "cost_usd"]]
        for entry in self.lines:
            rows.append(
                [
                    entry.component,
                    f"{entry.unit_cost_cents / 100:.2f}",
                    str(entry.qty),
                    f"{entry.cost_cents / 100:.2f}",
                ]
            )
        rows.append(["total", "", "", f"{self.total_cents / 100:.2f}"])
        return rows


def format_usd(cents: int) -> str:
    dollars, rem = divmod(cents, 100)
    if rem:
        return f"${dollars:,}.{rem:02d}"
    return f"${dollars:,}"


def sultan_center_sizing() -> DeploymentSpec:
    """The reference branch: 90 parking + 8 traffic nodes, 2 coordinators."""
    return DeploymentSpec(
        parking_slots=SULTAN_CENTER_PARKING_SLOTS,
        traffic_nodes=SULTAN_CENTER_TRAFFIC_NODES,
        coordinators=SULTAN_CENTER_COORDINATORS,
    )


def cost_estimate(spec: DeploymentSpec) -> CostSheet:
    """Itemized bill of materials: qty x unit cost per component.

    Every node (parking or traffic) carries an interface board, an
    ultrasonic sensor, a battery, and a solar panel; radios are one per
    node plus one per coordinator; coordinators add a host board and a
    collector board each; software is a one-off and maintenance is a
    per-year line.
    """
    quantities = {
        "Arduino Fio": spec.node_count,
        "Xbee Series 2": spec.radio_modules,
        "Ultrasonic Sensor": spec.node_count,
        "Battery": spec.node_count,
        "Solar Panel": spec.node_count,
        "Raspberry Pi 3": spec.coordinators,
        "Software": 1,
        "Maintenance/year": spec.maintenance_years,
        "Arduino UNO": spec.coordinators,
    }
    lines = tuple(
        CostLine(component=name, unit_cost_cents=spec.unit_cost_cents[name], qty=quantities[name])
        for name in UNIT_COST_CENTS
    )
    return CostSheet(lines=lines)


@dataclass(frozen=True)
class PowerBudget:
    """The fixed power figures plus the duty-cycle dependent node average."""

    node_profile: PowerProfile = PowerProfile()
    coordinator: CoordinatorPower = CoordinatorPower()

    @property
    def node_active_mw(self) -> float:
        return self.node_profile.active_mw

    @property
    def node_idle_mw(self) -> float:
        return self.node_profile.idle_mw

    @property
    def coordinator_mw(self) -> float:
        return self.coordinator.total_mw

    def node_average_mw(self, hops: int = 1) -> float:
        return node_average_power(self.node_profile, hops)


def node_average_power(
    profile: PowerProfile, hops: int, frame_airtime_us: int | None = None
) -> float:
    """Duty-cycle average power in mW for a node whose frames travel
    `hops` hops: active for sensing plus path airtime, idle otherwise.

    Computed directly from the power figures so it can cross-check the
    simulator's integrated energy accumulator.
    """
    if hops < 1:
        raise ValueError("hops must be >= 1")
    if frame_airtime_us is None:
        frame_airtime_us = airtime(FRAME_WIRE_BYTES, DATA_RATE_BPS)
    t_active_ms = profile.sense_duration_ms + hops * frame_airtime_us / 1000.0
    t_idle_ms = profile.report_period_ms - t_active_ms
    return (
        profile.active_mw * t_active_ms + profile.idle_mw * t_idle_ms
    ) / profile.report_period_ms


def battery_life_hours(capacity_wh: float, average_mw: float) -> float:
    """Hours of operation for a battery of the given capacity."""
    if capacity_wh <= 0:
        raise ValueError("battery capacity must be positive")
    if average_mw <= 0:
        raise ValueError("average power must be positive")
    return capacity_wh * 1000.0 / average_mw
