"""In-process ledger with the semantics of the TextStorage contract.

An append-only list of (sealed token, uid) entries with owner-restricted
writes and an event log.  Mutations are serialized through an internal
lock so a state instance can be shared across threads; reads never block
reads.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

MAX_TEXT_BYTES = 1 << 20  # 1 MiB cap on a single stored entry
MAX_UID_BYTES = 256


class LedgerError(Exception):
    """Base class for ledger failures."""


class Unauthorized(LedgerError):
    """Caller is not the contract owner (models the onlyOwner revert)."""


class InvalidInput(LedgerError):
    """Empty or oversized text/uid."""


class IndexOutOfRange(LedgerError):
    """Read past the end of the entry list."""


@dataclass(frozen=True)
class Address:
    """20-byte account identifier, rendered as 0x-prefixed lowercase hex."""

    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != 20:
            raise ValueError("address must be exactly 20 bytes")

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        s = text.lower()
        if s.startswith("0x"):
            s = s[2:]
        if len(s) != 40:
            raise ValueError(f"address hex must be 40 chars, got {len(s)}")
        return cls(bytes.fromhex(s))

    def __str__(self) -> str:
        return "0x" + self.value.hex()


@dataclass(frozen=True)
class TextEntry:
    """One stored record: sealed-token string plus its opaque uid."""

    text: str
    uid: str


@dataclass(frozen=True)
class TextAdded:
    seq: int
    index: int
    uid: str


@dataclass(frozen=True)
class OwnershipTransferred:
    seq: int
    previous_owner: Address
    new_owner: Address


ContractEvent = TextAdded | OwnershipTransferred


class ContractState:
    """Deterministic single-contract state: owner, entries, event log.

    Entries are append-only and immutable once stored; every mutation
    appends exactly one event with a gapless sequence number.
    """

    def __init__(self, owner: Address) -> None:
        self._owner = owner
        self._entries: list[TextEntry] = []
        self._events: list[ContractEvent] = []
        self._lock = threading.Lock()

    @property
    def owner(self) -> Address:
        return self._owner

    def save_text(self, caller: Address, text: str, uid: str) -> int:
        """Append a new entry; returns its 0-based index.

        Only the owner may write.  Rejects empty text/uid and payloads
        over MAX_TEXT_BYTES / MAX_UID_BYTES.
        """
        with self._lock:
            if caller != self._owner:
                raise Unauthorized(f"caller {caller} is not owner {self._owner}")
            if not text:
                raise InvalidInput("text must be non-empty")
            if not uid:
                raise InvalidInput("uid must be non-empty")
            if len(text.encode("utf-8")) > MAX_TEXT_BYTES:
                raise InvalidInput("text exceeds 1 MiB limit")
            if len(uid.encode("utf-8")) > MAX_UID_BYTES:
                raise InvalidInput("uid exceeds 256 byte limit")
            index = len(self._entries)
            self._entries.append(TextEntry(text=text, uid=uid))
            self._events.append(TextAdded(seq=len(self._events), index=index, uid=uid))
            return index

    def get_text(self, index: int) -> TextEntry:
        """Read the entry at ``index``; publicly callable."""
        entries = self._entries
        if not isinstance(index, int) or index < 0 or index >= len(entries):
            raise IndexOutOfRange(f"index {index} out of range (total {len(entries)})")
        return entries[index]

    def get_total_texts(self) -> int:
        return len(self._entries)

    def transfer_ownership(self, caller: Address, new_owner: Address) -> None:
        with self._lock:
            if caller != self._owner:
                raise Unauthorized(f"caller {caller} is not owner {self._owner}")
            previous = self._owner
            self._owner = new_owner
            self._events.append(
                OwnershipTransferred(
                    seq=len(self._events), previous_owner=previous, new_owner=new_owner
                )
            )

    @property
    def events(self) -> tuple[ContractEvent, ...]:
        return tuple(self._events)

    @property
    def entries(self) -> tuple[TextEntry, ...]:
        return tuple(self._entries)


def deploy(deployer: Address) -> ContractState:
    """Fresh contract state owned by the deploying address."""
    return ContractState(owner=deployer)


def restore(
    owner: Address,
    entries: list[TextEntry],
    events: list[ContractEvent],
) -> ContractState:
    """Rebuild a state snapshot (embedded-CLI persistence)."""
    state = ContractState(owner=owner)
    state._entries = list(entries)
    state._events = list(events)
    return state


def replay_events(
    deployer: Address, events: tuple[ContractEvent, ...]
) -> tuple[Address, list[str]]:
    """Rebuild (owner, uid-per-index) from a fresh deploy plus the event log.

    Used by tests to check event-log completeness.
    """
    owner = deployer
    uids: list[str] = []
    for ev in events:
        if isinstance(ev, TextAdded):
            assert ev.index == len(uids), "event index out of order"
            uids.append(ev.uid)
        else:
            owner = ev.new_owner
    return owner, uids
