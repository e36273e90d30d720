"""Transaction lifecycle over a pluggable backend.

Two backends: a deterministic embedded simulator wrapping the ledger
state machine, and a receipt-only JSON-RPC client for external EVM
chains.  Signing uses an HMAC scheme (not secp256k1): good enough for
deterministic desk-scale verification, not for real networks.

Canonical tx serialization: version byte 0x01, sender (20 bytes), nonce
(8-byte big-endian), call tag (0x01 SaveText / 0x02 TransferOwnership),
then each field as 4-byte big-endian length prefix + bytes, in declared
order.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import os
import random
import struct
import threading
from dataclasses import dataclass, field

import httpx

from . import gas as gas_model
from . import ledger
from .ledger import Address, ContractState, TextEntry

logger = logging.getLogger(__name__)

_TX_VERSION = 0x01
_TAG_SAVE_TEXT = 0x01
_TAG_TRANSFER_OWNERSHIP = 0x02


class ChainError(Exception):
    """Base class for backend failures."""


class SenderKeyMismatch(ChainError):
    """Signing key does not belong to the tx sender."""


class NonceMismatch(ChainError):
    """Submitted nonce is not the sender's next expected nonce."""


class DuplicateTransaction(ChainError):
    """A transaction with this hash was already submitted."""


class BackendUnavailable(ChainError):
    """Transport failure talking to a remote chain."""


class InvalidInput(ChainError):
    """Call fields fail basic validation."""


@dataclass(frozen=True)
class WalletKey:
    """Simulator wallet: address = last 20 bytes of SHA-256(private key)."""

    private: bytes

    def __post_init__(self) -> None:
        if len(self.private) != 32:
            raise ValueError("private key must be exactly 32 bytes")

    @property
    def address(self) -> Address:
        return Address(hashlib.sha256(self.private).digest()[-20:])

    @classmethod
    def generate(cls) -> "WalletKey":
        return cls(os.urandom(32))

    @classmethod
    def from_hex(cls, text: str) -> "WalletKey":
        s = text[2:] if text.lower().startswith("0x") else text
        return cls(bytes.fromhex(s))

    def to_hex(self) -> str:
        return "0x" + self.private.hex()


@dataclass(frozen=True)
class SaveText:
    token: str
    uid: str


@dataclass(frozen=True)
class TransferOwnership:
    new_owner: Address


Call = SaveText | TransferOwnership


def _frame(*fields: bytes) -> bytes:
    return b"".join(struct.pack(">I", len(f)) + f for f in fields)


def serialize_call(call: Call) -> bytes:
    if isinstance(call, SaveText):
        return bytes([_TAG_SAVE_TEXT]) + _frame(
            call.token.encode("utf-8"), call.uid.encode("utf-8")
        )
    return bytes([_TAG_TRANSFER_OWNERSHIP]) + _frame(call.new_owner.value)


@dataclass(frozen=True)
class Transaction:
    sender: Address
    nonce: int
    call: Call

    def serialize(self) -> bytes:
        return (
            bytes([_TX_VERSION])
            + self.sender.value
            + struct.pack(">Q", self.nonce)
            + serialize_call(self.call)
        )

    @property
    def payload_bytes(self) -> int:
        """Byte length of the canonical call serialization (gas is
        charged on this, not on the whole envelope)."""
        return len(serialize_call(self.call))


def build_tx(sender: Address, nonce: int, call: Call) -> Transaction:
    if isinstance(call, SaveText) and (not call.token or not call.uid):
        raise InvalidInput("SaveText requires non-empty token and uid")
    if nonce < 0:
        raise InvalidInput("nonce must be non-negative")
    return Transaction(sender=sender, nonce=nonce, call=call)


@dataclass(frozen=True)
class SignedTransaction:
    tx: Transaction
    signature: bytes
    hash: str  # "0x" + 64 hex chars

    def verify(self, key: WalletKey) -> bool:
        expected = hmac.new(key.private, self.tx.serialize(), hashlib.sha256).digest()
        return hmac.compare_digest(expected, self.signature)


def sign_tx(tx: Transaction, key: WalletKey) -> SignedTransaction:
    if key.address != tx.sender:
        raise SenderKeyMismatch(f"key address {key.address} != sender {tx.sender}")
    body = tx.serialize()
    signature = hmac.new(key.private, body, hashlib.sha256).digest()
    tx_hash = "0x" + hashlib.sha256(body + signature).hexdigest()
    return SignedTransaction(tx=tx, signature=signature, hash=tx_hash)


# Receipt statuses
PENDING = "pending"
SUCCESS = "success"
FAILED = "failed"


@dataclass
class TxReceipt:
    tx_hash: str
    status: str
    block_number: int | None = None
    gas_used: int | None = None
    failure_reason: str | None = None


@dataclass
class SubmissionResult:
    """Synchronous acceptance outcome returned to the submitter; the
    public receipt stays pending until the containing block seals."""

    tx_hash: str
    accepted: bool
    entry_index: int | None = None
    gas_used: int | None = None
    failure_reason: str | None = None


@dataclass
class BackendConfig:
    mode: str = "simulated"  # "simulated" | "remote"
    block_size: int = 4
    failure_rate: float = 0.0
    rpc_url: str = ""
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ValueError("failure_rate must be in [0, 1]")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")


@dataclass
class _Accepted:
    signed: SignedTransaction
    receipt: TxReceipt
    sealed: bool = False


class SimulatedBackend:
    """Deterministic embedded chain: applies calls to the contract state
    at submission, seals receipts in fixed-size blocks."""

    def __init__(
        self,
        config: BackendConfig,
        state: ContractState,
        schedule: gas_model.GasSchedule | None = None,
    ) -> None:
        self.config = config
        self.state = state
        self.schedule = schedule or gas_model.GasSchedule()
        self._lock = threading.Lock()
        self._txs: dict[str, _Accepted] = {}
        self._order: list[str] = []
        self._nonces: dict[Address, int] = {}
        self._rng = random.Random(config.seed)

    def next_nonce(self, sender: Address) -> int:
        with self._lock:
            return self._nonces.get(sender, 0)

    def submit(self, signed: SignedTransaction) -> SubmissionResult:
        tx = signed.tx
        with self._lock:
            if signed.hash in self._txs:
                raise DuplicateTransaction(signed.hash)
            expected = self._nonces.get(tx.sender, 0)
            if tx.nonce != expected:
                raise NonceMismatch(f"expected nonce {expected}, got {tx.nonce}")
            self._nonces[tx.sender] = expected + 1

            entry_index: int | None = None
            reason: str | None = None
            if self.config.failure_rate > 0 and self._rng.random() < self.config.failure_rate:
                reason = "Injected"
            else:
                try:
                    if isinstance(tx.call, SaveText):
                        entry_index = self.state.save_text(
                            tx.sender, tx.call.token, tx.call.uid
                        )
                    else:
                        self.state.transfer_ownership(tx.sender, tx.call.new_owner)
                except ledger.LedgerError as exc:
                    reason = type(exc).__name__

            if reason is None:
                receipt = TxReceipt(
                    tx_hash=signed.hash,
                    status=SUCCESS,
                    gas_used=gas_model.estimate_gas(self.schedule, tx.payload_bytes),
                )
            else:
                receipt = TxReceipt(
                    tx_hash=signed.hash, status=FAILED, gas_used=0, failure_reason=reason
                )
            receipt.block_number = len(self._order) // self.config.block_size
            self._txs[signed.hash] = _Accepted(signed=signed, receipt=receipt)
            self._order.append(signed.hash)
            self._seal_full_blocks_locked()
            return SubmissionResult(
                tx_hash=signed.hash,
                accepted=reason is None,
                entry_index=entry_index,
                gas_used=receipt.gas_used,
                failure_reason=reason,
            )

    def _seal_full_blocks_locked(self) -> None:
        full = (len(self._order) // self.config.block_size) * self.config.block_size
        for h in self._order[:full]:
            self._txs[h].sealed = True

    def seal_block(self) -> int:
        """Finalize all pending txs; returns the current block number."""
        with self._lock:
            for h in self._order:
                self._txs[h].sealed = True
            return max(0, (len(self._order) - 1)) // self.config.block_size

    def get_receipt(self, tx_hash: str) -> TxReceipt | None:
        with self._lock:
            acc = self._txs.get(tx_hash)
            if acc is None:
                return None
            if not acc.sealed:
                return TxReceipt(tx_hash=tx_hash, status=PENDING)
            r = acc.receipt
            return TxReceipt(
                tx_hash=r.tx_hash,
                status=r.status,
                block_number=r.block_number,
                gas_used=r.gas_used,
                failure_reason=r.failure_reason,
            )

    def get_text(self, index: int) -> TextEntry:
        return self.state.get_text(index)

    def get_total_texts(self) -> int:
        return self.state.get_total_texts()


class RemoteReceiptClient:
    """Minimal JSON-RPC 2.0 client: receipt queries only, no submission."""

    def __init__(self, rpc_url: str, timeout: float = 10.0) -> None:
        self.rpc_url = rpc_url
        self.timeout = timeout
        self._id = 0

    def get_receipt(self, tx_hash: str) -> TxReceipt | None:
        self._id += 1
        request = {
            "jsonrpc": "2.0",
            "id": self._id,
            "method": "eth_getTransactionReceipt",
            "params": [tx_hash],
        }
        logger.debug("rpc request: %s", request)
        try:
            resp = httpx.post(self.rpc_url, json=request, timeout=self.timeout)
            resp.raise_for_status()
            doc = resp.json()
        except Exception as exc:
            raise BackendUnavailable(f"rpc transport failure: {exc}") from exc
        logger.debug("rpc response: %s", doc)
        result = doc.get("result")
        if result is None:
            return None
        status = SUCCESS if result.get("status") == "0x1" else FAILED
        return TxReceipt(
            tx_hash=tx_hash,
            status=status,
            block_number=int(result.get("blockNumber", "0x0"), 16),
            gas_used=int(result.get("gasUsed", "0x0"), 16),
        )
