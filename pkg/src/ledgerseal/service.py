"""HTTP facade: save / retrieve / verify / tx-status / gas-report
endpoints plus a health probe.

All error responses use the envelope {"error": {"code", "message"}}.
Integrity verdicts are returned with HTTP 200 regardless of outcome --
cron and dashboard clients need a total response, so verdicts are data,
not transport errors.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import crypto, gas as gas_model, registry as registry_mod
from .chain import (
    BackendUnavailable,
    SaveText,
    SimulatedBackend,
    RemoteReceiptClient,
    build_tx,
    sign_tx,
    PENDING,
)
from .config import ServiceConfig
from .ledger import Address, deploy
from .registry import RegistryStore, DuplicateUid

logger = logging.getLogger(__name__)

DEFAULT_REPORT_SIZES = [500, 1000, 2000, 5000]


class ApiError(Exception):
    def __init__(self, http_status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.http_status = http_status
        self.code = code
        self.message = message


class ReviewIn(BaseModel):
    uid: str
    text: str


@dataclass
class ServiceState:
    config: ServiceConfig
    backend: SimulatedBackend | None
    remote: RemoteReceiptClient | None
    store: RegistryStore
    schedule: gas_model.GasSchedule
    networks: list[gas_model.NetworkPricing]
    created_at_provider: Callable[[], str] | None = None
    submit_lock: threading.Lock = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.submit_lock = threading.Lock()


def build_state(
    config: ServiceConfig,
    backend: SimulatedBackend | None = None,
    store: RegistryStore | None = None,
    created_at_provider: Callable[[], str] | None = None,
) -> ServiceState:
    """Wire service components from config; pre-built backend/store may
    be injected (tests, embedded CLI mode)."""
    config.require_keys()
    config.check_pin()
    schedule, networks = gas_model.load_pricing(config.pricing_path)
    remote = None
    if config.backend.mode == "remote":
        remote = RemoteReceiptClient(config.backend.rpc_url)
    elif backend is None and config.enabled:
        assert config.wallet is not None
        state = deploy(config.wallet.address)
        backend = SimulatedBackend(config.backend, state, schedule=schedule)
    if store is None:
        store = RegistryStore(config.registry_path)
    return ServiceState(
        config=config,
        backend=backend,
        remote=remote,
        store=store,
        schedule=schedule,
        networks=networks,
        created_at_provider=created_at_provider,
    )


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="ledgerseal", version="0.1.0")
    cfg = state.config

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "invalid_input", "message": str(exc)}},
        )

    def require_enabled() -> None:
        if not cfg.enabled:
            raise ApiError(503, "service_disabled", "blockchain component is detached")

    def require_simulated() -> SimulatedBackend:
        if state.backend is None:
            raise ApiError(
                502, "chain_unavailable", "backend is receipt-only; cannot serve this request"
            )
        return state.backend

    @app.post("/api/v1/reviews", status_code=201)
    def save_review(body: ReviewIn):
        require_enabled()
        if not body.uid or not body.text:
            raise ApiError(400, "invalid_input", "uid and text must be non-empty")
        backend = require_simulated()
        assert cfg.fernet_key is not None and cfg.wallet is not None
        try:
            state.store.reserve(body.uid)
        except DuplicateUid:
            raise ApiError(409, "duplicate_uid", f"uid {body.uid!r} already recorded")
        try:
            plaintext = body.text.encode("utf-8")
            token = crypto.seal(plaintext, cfg.fernet_key)
            with state.submit_lock:
                nonce = backend.next_nonce(cfg.wallet.address)
                tx = build_tx(cfg.wallet.address, nonce, SaveText(token=token, uid=body.uid))
                result = backend.submit(sign_tx(tx, cfg.wallet))
            if not result.accepted:
                raise ApiError(
                    502, "tx_failed", f"transaction failed: {result.failure_reason}"
                )
            created_at = (
                state.created_at_provider() if state.created_at_provider else None
            )
            record = state.store.record_save(
                body.uid, result.entry_index, result.tx_hash, plaintext,
                created_at=created_at,
            )
        except ApiError:
            state.store.release(body.uid)
            raise
        except BackendUnavailable as exc:
            state.store.release(body.uid)
            raise ApiError(502, "chain_unavailable", str(exc))
        except Exception:
            state.store.release(body.uid)
            raise
        return {
            "uid": record.uid,
            "tx_hash": record.tx_hash,
            "entry_index": record.entry_index,
            "gas_used": result.gas_used,
        }

    @app.get("/api/v1/reviews/{uid}")
    def get_review(uid: str):
        require_enabled()
        record = state.store.lookup(uid)
        if record is None:
            raise ApiError(404, "not_found", f"uid {uid!r} not in registry")
        backend = require_simulated()
        assert cfg.fernet_key is not None
        try:
            entry = backend.get_text(record.entry_index)
        except BackendUnavailable as exc:
            raise ApiError(502, "chain_unavailable", str(exc))
        try:
            text = crypto.unseal(entry.text, cfg.fernet_key).decode("utf-8")
        except crypto.CryptoError as exc:
            raise ApiError(500, "decryption_failed", str(exc))
        return {
            "uid": uid,
            "text": text,
            "tx_hash": record.tx_hash,
            "entry_index": record.entry_index,
        }

    @app.post("/api/v1/reviews/{uid}/verify")
    async def verify_review(uid: str, request: Request):
        require_enabled()
        backend = require_simulated()
        assert cfg.fernet_key is not None
        raw = await request.body()
        local_text: bytes | None = None
        if raw:
            try:
                doc = json.loads(raw)
            except ValueError:
                raise ApiError(400, "invalid_input", "body must be JSON")
            if doc is not None:
                if not isinstance(doc, dict) or not isinstance(doc.get("text"), str):
                    raise ApiError(400, "invalid_input", 'body must be {"text": string}')
                local_text = doc["text"].encode("utf-8")
        if local_text is not None:
            verdict = registry_mod.check_integrity(
                state.store, backend, cfg.fernet_key, uid, local_text
            )
        else:
            verdict = registry_mod.check_integrity_by_digest(
                state.store, backend, cfg.fernet_key, uid
            )
        return {
            "status": verdict.status,
            "uid": verdict.uid,
            "on_chain_digest": verdict.on_chain_digest,
            "local_digest": verdict.local_digest,
            "checked_at": verdict.checked_at,
        }

    @app.get("/api/v1/transactions/{tx_hash}")
    def get_transaction(tx_hash: str):
        require_enabled()
        source = state.backend or state.remote
        if source is None:
            raise ApiError(502, "chain_unavailable", "no receipt source configured")
        try:
            receipt = source.get_receipt(tx_hash)
        except BackendUnavailable as exc:
            raise ApiError(502, "chain_unavailable", str(exc))
        if receipt is None:
            raise ApiError(404, "not_found", f"unknown transaction {tx_hash}")
        body = {"tx_hash": receipt.tx_hash, "status": receipt.status}
        if receipt.status != PENDING:
            body["block_number"] = receipt.block_number
            body["gas_used"] = receipt.gas_used
            if receipt.failure_reason:
                body["failure_reason"] = receipt.failure_reason
        return body

    @app.get("/api/v1/gas/report")
    def gas_report(sizes: str | None = None):
        if sizes is None:
            parsed = list(DEFAULT_REPORT_SIZES)
        else:
            try:
                parsed = [int(s) for s in sizes.split(",") if s.strip()]
            except ValueError:
                raise ApiError(400, "invalid_input", "sizes must be comma-separated integers")
            if not parsed or any(s <= 0 for s in parsed):
                raise ApiError(400, "invalid_input", "sizes must be positive integers")
        report = gas_model.compare(state.schedule, state.networks, parsed)
        return json.loads(report.to_json())

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "enabled": cfg.enabled,
            "backend": cfg.backend.mode,
        }

    return app
