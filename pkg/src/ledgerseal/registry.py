"""Local UID registry plus the integrity-check verdict logic.

The registry is an append-only JSON-lines file (one record per line,
fsync on append) mapping each uid to its chain coordinates and a
SHA-256 digest of the original plaintext.  Verification decrypts the
on-chain sealed record and compares: byte-for-byte against supplied
text, or digest-against-digest in bulk mode.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

from . import crypto
from .chain import BackendUnavailable
from .crypto import SymmetricKey
from .ledger import IndexOutOfRange

logger = logging.getLogger(__name__)

VERIFIED = "verified"
MISMATCH = "mismatch"
NOT_FOUND = "not_found"
CHAIN_UNAVAILABLE = "chain_unavailable"


class RegistryError(Exception):
    pass


class DuplicateUid(RegistryError):
    pass


class StorageFailure(RegistryError):
    pass


def _now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class RegistryRecord:
    uid: str
    entry_index: int
    tx_hash: str
    plaintext_digest: str
    created_at: str


@dataclass(frozen=True)
class IntegrityVerdict:
    status: str
    uid: str
    on_chain_digest: str | None
    local_digest: str | None
    checked_at: str
    reason: str | None = None


@dataclass(frozen=True)
class VerifySummary:
    total: int
    verified: int
    mismatched: int
    not_found: int
    unavailable: int


class RegistryStore:
    """Append-only JSONL store with an in-memory uid index.

    Duplicate uid lines found on load are kept out of the index and
    reported via ``corruption`` -- the file itself is never rewritten.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, RegistryRecord] = {}
        self._order: list[str] = []
        self._reserved: set[str] = set()
        self.corruption: list[str] = []
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        for lineno, line in enumerate(self.path.read_text("utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                rec = RegistryRecord(
                    uid=doc["uid"],
                    entry_index=int(doc["entry_index"]),
                    tx_hash=doc["tx_hash"],
                    plaintext_digest=doc["plaintext_digest"],
                    created_at=doc["created_at"],
                )
            except (ValueError, KeyError, TypeError) as exc:
                self.corruption.append(f"line {lineno}: unparseable record ({exc})")
                continue
            if rec.uid in self._records:
                self.corruption.append(f"line {lineno}: duplicate uid {rec.uid!r}")
                continue
            self._records[rec.uid] = rec
            self._order.append(rec.uid)
        if self.corruption:
            logger.warning(
                "registry %s: %d corrupt line(s): %s",
                self.path, len(self.corruption), "; ".join(self.corruption),
            )

    def reserve(self, uid: str) -> None:
        """Atomically claim a uid ahead of the chain write so concurrent
        saves of the same uid admit exactly one winner."""
        with self._lock:
            if uid in self._records or uid in self._reserved:
                raise DuplicateUid(uid)
            self._reserved.add(uid)

    def release(self, uid: str) -> None:
        with self._lock:
            self._reserved.discard(uid)

    def record_save(
        self,
        uid: str,
        entry_index: int,
        tx_hash: str,
        plaintext: bytes,
        created_at: str | None = None,
    ) -> RegistryRecord:
        """Durably append a record; returns after the line is fsynced.

        ``created_at`` is injectable for deterministic runs.
        """
        rec = RegistryRecord(
            uid=uid,
            entry_index=entry_index,
            tx_hash=tx_hash,
            plaintext_digest=sha256_hex(plaintext),
            created_at=created_at or _now_rfc3339(),
        )
        with self._lock:
            if uid in self._records:
                raise DuplicateUid(uid)
            line = json.dumps(asdict(rec), sort_keys=True) + "\n"
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc
            self._records[uid] = rec
            self._order.append(uid)
            self._reserved.discard(uid)
        return rec

    def lookup(self, uid: str) -> RegistryRecord | None:
        with self._lock:
            return self._records.get(uid)

    def snapshot(self) -> list[RegistryRecord]:
        with self._lock:
            return [self._records[u] for u in self._order]

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


def _fetch_on_chain_plaintext(backend, key: SymmetricKey, entry_index: int) -> bytes:
    """Read and unseal the ledger entry; lets chain/crypto errors escape."""
    entry = backend.get_text(entry_index)
    return crypto.unseal(entry.text, key)


def check_integrity(
    store: RegistryStore,
    backend,
    key: SymmetricKey,
    uid: str,
    local_text: bytes,
) -> IntegrityVerdict:
    """Compare supplied plaintext against the decrypted on-chain record.

    Total function: every outcome is a verdict, never an exception.
    Decryption failure counts as a mismatch (it proves divergence from
    the sealed original).
    """
    checked_at = _now_rfc3339()
    local_digest = sha256_hex(local_text)
    rec = store.lookup(uid)
    if rec is None:
        return IntegrityVerdict(NOT_FOUND, uid, None, local_digest, checked_at)
    try:
        on_chain = _fetch_on_chain_plaintext(backend, key, rec.entry_index)
    except (BackendUnavailable, StorageFailure) as exc:
        return IntegrityVerdict(
            CHAIN_UNAVAILABLE, uid, None, local_digest, checked_at, reason=str(exc)
        )
    except IndexOutOfRange:
        return IntegrityVerdict(NOT_FOUND, uid, None, local_digest, checked_at)
    except crypto.CryptoError as exc:
        return IntegrityVerdict(
            MISMATCH, uid, None, local_digest, checked_at,
            reason=f"decryption failed: {exc}",
        )
    on_chain_digest = sha256_hex(on_chain)
    status = VERIFIED if on_chain == local_text else MISMATCH
    return IntegrityVerdict(status, uid, on_chain_digest, local_digest, checked_at)


def check_integrity_by_digest(
    store: RegistryStore, backend, key: SymmetricKey, uid: str
) -> IntegrityVerdict:
    """Digest-comparison variant for bulk mode (no local plaintext)."""
    checked_at = _now_rfc3339()
    rec = store.lookup(uid)
    if rec is None:
        return IntegrityVerdict(NOT_FOUND, uid, None, None, checked_at)
    try:
        on_chain = _fetch_on_chain_plaintext(backend, key, rec.entry_index)
    except (BackendUnavailable, StorageFailure) as exc:
        return IntegrityVerdict(
            CHAIN_UNAVAILABLE, uid, None, rec.plaintext_digest, checked_at,
            reason=str(exc),
        )
    except IndexOutOfRange:
        return IntegrityVerdict(NOT_FOUND, uid, None, rec.plaintext_digest, checked_at)
    except crypto.CryptoError as exc:
        return IntegrityVerdict(
            MISMATCH, uid, None, rec.plaintext_digest, checked_at,
            reason=f"decryption failed: {exc}",
        )
    on_chain_digest = sha256_hex(on_chain)
    status = VERIFIED if on_chain_digest == rec.plaintext_digest else MISMATCH
    return IntegrityVerdict(status, uid, on_chain_digest, rec.plaintext_digest, checked_at)


def verify_all(
    store: RegistryStore, backend, key: SymmetricKey
) -> tuple[VerifySummary, list[IntegrityVerdict]]:
    """Digest-check every record (snapshot at start); for cron."""
    verdicts = [
        check_integrity_by_digest(store, backend, key, rec.uid)
        for rec in store.snapshot()
    ]
    counts = {VERIFIED: 0, MISMATCH: 0, NOT_FOUND: 0, CHAIN_UNAVAILABLE: 0}
    for v in verdicts:
        counts[v.status] += 1
    summary = VerifySummary(
        total=len(verdicts),
        verified=counts[VERIFIED],
        mismatched=counts[MISMATCH],
        not_found=counts[NOT_FOUND],
        unavailable=counts[CHAIN_UNAVAILABLE],
    )
    return summary, verdicts
