"""Snapshot/restore of the simulated backend for embedded CLI runs.

The simulator is in-memory; single-shot CLI commands (save, get,
verify) persist it to a JSON file between invocations so entry indexes
and receipts survive.  The server never uses this: it keeps the backend
live for its whole lifetime.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import gas as gas_model
from .chain import BackendConfig, SimulatedBackend, TxReceipt, _Accepted
from .ledger import (
    Address,
    ContractEvent,
    OwnershipTransferred,
    TextAdded,
    TextEntry,
    restore,
)


def dump_backend(backend: SimulatedBackend) -> dict:
    state = backend.state
    events = []
    for ev in state.events:
        if isinstance(ev, TextAdded):
            events.append({"kind": "TextAdded", "seq": ev.seq, "index": ev.index, "uid": ev.uid})
        else:
            events.append(
                {
                    "kind": "OwnershipTransferred",
                    "seq": ev.seq,
                    "previous_owner": str(ev.previous_owner),
                    "new_owner": str(ev.new_owner),
                }
            )
    with backend._lock:
        txs = [
            {
                "hash": h,
                "status": backend._txs[h].receipt.status,
                "block_number": backend._txs[h].receipt.block_number,
                "gas_used": backend._txs[h].receipt.gas_used,
                "failure_reason": backend._txs[h].receipt.failure_reason,
                "sealed": backend._txs[h].sealed,
            }
            for h in backend._order
        ]
        nonces = {str(addr): n for addr, n in backend._nonces.items()}
    return {
        "owner": str(state.owner),
        "entries": [{"text": e.text, "uid": e.uid} for e in state.entries],
        "events": events,
        "nonces": nonces,
        "txs": txs,
    }


def restore_backend(
    doc: dict, config: BackendConfig, schedule: gas_model.GasSchedule
) -> SimulatedBackend:
    events: list[ContractEvent] = []
    for ev in doc.get("events", []):
        if ev["kind"] == "TextAdded":
            events.append(TextAdded(seq=ev["seq"], index=ev["index"], uid=ev["uid"]))
        else:
            events.append(
                OwnershipTransferred(
                    seq=ev["seq"],
                    previous_owner=Address.from_hex(ev["previous_owner"]),
                    new_owner=Address.from_hex(ev["new_owner"]),
                )
            )
    state = restore(
        owner=Address.from_hex(doc["owner"]),
        entries=[TextEntry(text=e["text"], uid=e["uid"]) for e in doc.get("entries", [])],
        events=events,
    )
    backend = SimulatedBackend(config, state, schedule=schedule)
    for tx in doc.get("txs", []):
        receipt = TxReceipt(
            tx_hash=tx["hash"],
            status=tx["status"],
            block_number=tx["block_number"],
            gas_used=tx["gas_used"],
            failure_reason=tx.get("failure_reason"),
        )
        backend._txs[tx["hash"]] = _Accepted(signed=None, receipt=receipt, sealed=tx["sealed"])  # type: ignore[arg-type]
        backend._order.append(tx["hash"])
    backend._nonces = {
        Address.from_hex(addr): n for addr, n in doc.get("nonces", {}).items()
    }
    return backend


def save_backend(backend: SimulatedBackend, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dump_backend(backend), indent=2), "utf-8")


def load_backend(
    path: str | Path, config: BackendConfig, schedule: gas_model.GasSchedule
) -> SimulatedBackend | None:
    p = Path(path)
    if not p.exists():
        return None
    return restore_backend(json.loads(p.read_text("utf-8")), config, schedule)
