"""Gas estimation and fiat cost comparison across networks.

Cost of storing n payload bytes is ``base + per_byte * n`` gas units;
fiat conversion uses per-network gas price (gwei) and token price (USD).
All money arithmetic is Decimal; USD values are rendered to 4 decimal
places but compared unrounded.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal, getcontext
from importlib import resources
from pathlib import Path

getcontext().prec = 28

GWEI = Decimal("1e-9")


class InvalidInput(ValueError):
    """Empty network/size lists or malformed pricing config."""


@dataclass(frozen=True)
class GasSchedule:
    base: int = 20_000
    per_byte: int = 16

    def __post_init__(self) -> None:
        if self.base < 0 or self.per_byte < 0:
            raise InvalidInput("gas schedule values must be non-negative")


@dataclass(frozen=True)
class NetworkPricing:
    name: str
    gas_price_gwei: Decimal
    token_usd: Decimal

    def __post_init__(self) -> None:
        if self.gas_price_gwei < 0 or self.token_usd < 0:
            raise InvalidInput("prices must not be negative")


@dataclass(frozen=True)
class GasQuote:
    network: str
    n_bytes: int
    gas_units: int
    native_cost: Decimal  # in the network's native token
    usd_cost: Decimal

    @property
    def usd_display(self) -> str:
        return f"{self.usd_cost:.4f}"


def estimate_gas(schedule: GasSchedule, n_bytes: int) -> int:
    """Exact integer gas units for an n-byte payload."""
    if n_bytes < 0:
        raise InvalidInput("n_bytes must be non-negative")
    return schedule.base + schedule.per_byte * n_bytes


def quote_usd(schedule: GasSchedule, pricing: NetworkPricing, n_bytes: int) -> GasQuote:
    gas_units = estimate_gas(schedule, n_bytes)
    native = Decimal(gas_units) * pricing.gas_price_gwei * GWEI
    return GasQuote(
        network=pricing.name,
        n_bytes=n_bytes,
        gas_units=gas_units,
        native_cost=native,
        usd_cost=native * pricing.token_usd,
    )


def batch_projection(
    schedule: GasSchedule, pricing: NetworkPricing, record_count: int, n_bytes: int
) -> Decimal:
    """Total USD cost of storing ``record_count`` records of ``n_bytes`` each."""
    if record_count < 0:
        raise InvalidInput("record_count must be non-negative")
    return record_count * quote_usd(schedule, pricing, n_bytes).usd_cost


@dataclass(frozen=True)
class SizeComparison:
    n_bytes: int
    quotes: tuple[GasQuote, ...]
    savings_percent: Decimal  # cheapest vs most expensive network


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[SizeComparison, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["size_bytes", "network", "gas_units", "native_cost", "usd_cost"])
        for row in self.rows:
            for q in row.quotes:
                writer.writerow(
                    [q.n_bytes, q.network, q.gas_units, str(q.native_cost), q.usd_display]
                )
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "sizes": [
                {
                    "size_bytes": row.n_bytes,
                    "savings_percent": float(row.savings_percent),
                    "quotes": [
                        {
                            "network": q.network,
                            "gas_units": q.gas_units,
                            "native_cost": str(q.native_cost),
                            "usd_cost": q.usd_display,
                        }
                        for q in row.quotes
                    ],
                }
                for row in self.rows
            ]
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def compare(
    schedule: GasSchedule, networks: list[NetworkPricing], sizes: list[int]
) -> ComparisonReport:
    """Per-size quotes for every network plus cheapest-vs-dearest savings."""
    if len(networks) < 2:
        raise InvalidInput("need at least two networks to compare")
    if not sizes:
        raise InvalidInput("need at least one size")
    rows = []
    for size in sizes:
        quotes = tuple(quote_usd(schedule, p, size) for p in networks)
        costs = [q.usd_cost for q in quotes]
        hi = max(costs)
        savings = Decimal(0) if hi == 0 else 100 * (1 - min(costs) / hi)
        rows.append(SizeComparison(n_bytes=size, quotes=quotes, savings_percent=savings))
    return ComparisonReport(rows=tuple(rows))


def _parse_pricing(doc: dict) -> tuple[GasSchedule, list[NetworkPricing]]:
    try:
        sched = doc.get("schedule", {})
        schedule = GasSchedule(
            base=int(sched.get("base", 20_000)),
            per_byte=int(sched.get("per_byte", 16)),
        )
        networks = [
            NetworkPricing(
                name=str(n["name"]),
                gas_price_gwei=Decimal(str(n["gas_price_gwei"])),
                token_usd=Decimal(str(n["token_usd"])),
            )
            for n in doc["networks"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed pricing config: {exc}") from exc
    if not networks:
        raise InvalidInput("pricing config lists no networks")
    return schedule, networks


def load_pricing(path: str | Path | None = None) -> tuple[GasSchedule, list[NetworkPricing]]:
    """Load {schedule, networks} from a JSON file, or the bundled default."""
    if path is None:
        text = resources.files("ledgerseal").joinpath("pricing_default.json").read_text()
    else:
        text = Path(path).read_text()
    return _parse_pricing(json.loads(text))
