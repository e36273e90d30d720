"""Operator command line.

Exit codes: 0 success, 1 verdict failure (mismatch / duplicate found),
2 usage error, 3 runtime error.  Machine-readable JSON goes to stdout;
human commentary goes to stderr so cron pipelines stay parseable.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import crypto, gas as gas_model, registry as registry_mod, statefile
from .chain import SaveText, SimulatedBackend, WalletKey, build_tx, sign_tx
from .config import ConfigError, load_config
from .ledger import deploy
from .registry import DuplicateUid, RegistryStore

EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _fail(message: str, code: int) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _load_cfg(env_file: str | None):
    try:
        return load_config(env_file=env_file)
    except ConfigError as exc:
        _fail(f"configuration error: {exc}", EXIT_RUNTIME)


class _Embedded:
    """In-process service components for single-shot commands."""

    def __init__(self, env_file: str | None) -> None:
        self.cfg = _load_cfg(env_file)
        try:
            self.cfg.require_keys()
            self.cfg.check_pin()
        except ConfigError as exc:
            _fail(f"configuration error: {exc}", EXIT_RUNTIME)
        self.schedule, self.networks = gas_model.load_pricing(self.cfg.pricing_path)
        backend = statefile.load_backend(
            self.cfg.chain_path, self.cfg.backend, self.schedule
        )
        if backend is None:
            backend = SimulatedBackend(
                self.cfg.backend, deploy(self.cfg.wallet.address), schedule=self.schedule
            )
        self.backend = backend
        self.store = RegistryStore(self.cfg.registry_path)

    def persist(self) -> None:
        statefile.save_backend(self.backend, self.cfg.chain_path)


def _read_text(text: str | None, file: str | None) -> str:
    if (text is None) == (file is None):
        raise click.UsageError("provide exactly one of --text or --file")
    if text is not None:
        return text
    return Path(file).read_text("utf-8")


@click.group()
def main() -> None:
    """Seal review text, commit it to the ledger, verify it later."""


@main.command()
@click.option("--port", type=int, default=None, help="Override LEDGERSEAL_PORT.")
@click.option("--env-file", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(port: int | None, env_file: str | None, host: str) -> None:
    """Run the HTTP service until terminated."""
    import uvicorn
    from .service import build_state, create_app

    cfg = _load_cfg(env_file)
    try:
        state = build_state(cfg)
    except ConfigError as exc:
        _fail(f"configuration error: {exc}", EXIT_RUNTIME)
    uvicorn.run(create_app(state), host=host, port=port or cfg.listen_port)


@main.command()
def keygen() -> None:
    """Print a fresh Fernet key and wallet key/address pair."""
    try:
        key = crypto.generate_key()
        wallet = WalletKey.generate()
    except crypto.EntropyUnavailable as exc:  # pragma: no cover
        _fail(f"entropy failure: {exc}", EXIT_RUNTIME)
    click.echo(
        json.dumps(
            {
                "fernet_key": key.to_base64(),
                "wallet_private_key": wallet.to_hex(),
                "wallet_address": str(wallet.address),
            }
        )
    )


@main.command()
@click.option("--uid", required=True)
@click.option("--text", default=None)
@click.option("--file", "file_", type=click.Path(exists=True), default=None)
@click.option("--env-file", type=click.Path(exists=True), default=None)
def save(uid: str, text: str | None, file_: str | None, env_file: str | None) -> None:
    """Seal text and commit it under UID (embedded simulated backend)."""
    body = _read_text(text, file_)
    svc = _Embedded(env_file)
    try:
        svc.store.reserve(uid)
    except DuplicateUid:
        _fail(f"uid {uid!r} already recorded", EXIT_VERDICT)
    plaintext = body.encode("utf-8")
    token = crypto.seal(plaintext, svc.cfg.fernet_key)
    wallet = svc.cfg.wallet
    tx = build_tx(wallet.address, svc.backend.next_nonce(wallet.address),
                  SaveText(token=token, uid=uid))
    result = svc.backend.submit(sign_tx(tx, wallet))
    if not result.accepted:
        svc.store.release(uid)
        _fail(f"transaction failed: {result.failure_reason}", EXIT_RUNTIME)
    svc.backend.seal_block()
    record = svc.store.record_save(uid, result.entry_index, result.tx_hash, plaintext)
    svc.persist()
    click.echo(
        json.dumps(
            {
                "uid": record.uid,
                "tx_hash": record.tx_hash,
                "entry_index": record.entry_index,
                "gas_used": result.gas_used,
            }
        )
    )


@main.command()
@click.option("--uid", required=True)
@click.option("--env-file", type=click.Path(exists=True), default=None)
def get(uid: str, env_file: str | None) -> None:
    """Fetch and unseal the on-chain text for UID."""
    svc = _Embedded(env_file)
    record = svc.store.lookup(uid)
    if record is None:
        _fail(f"uid {uid!r} not in registry", EXIT_VERDICT)
    entry = svc.backend.get_text(record.entry_index)
    body = crypto.unseal(entry.text, svc.cfg.fernet_key).decode("utf-8")
    click.echo(
        json.dumps(
            {
                "uid": uid,
                "text": body,
                "tx_hash": record.tx_hash,
                "entry_index": record.entry_index,
            }
        )
    )


@main.command()
@click.option("--uid", required=True)
@click.option("--text", default=None)
@click.option("--file", "file_", type=click.Path(exists=True), default=None)
@click.option("--env-file", type=click.Path(exists=True), default=None)
def verify(uid: str, text: str | None, file_: str | None, env_file: str | None) -> None:
    """Check UID's local data against the sealed on-chain record."""
    svc = _Embedded(env_file)
    if text is None and file_ is None:
        verdict = registry_mod.check_integrity_by_digest(
            svc.store, svc.backend, svc.cfg.fernet_key, uid
        )
    else:
        body = _read_text(text, file_)
        verdict = registry_mod.check_integrity(
            svc.store, svc.backend, svc.cfg.fernet_key, uid, body.encode("utf-8")
        )
    click.echo(
        json.dumps(
            {
                "status": verdict.status,
                "uid": verdict.uid,
                "on_chain_digest": verdict.on_chain_digest,
                "local_digest": verdict.local_digest,
                "checked_at": verdict.checked_at,
            }
        )
    )
    if verdict.status == registry_mod.VERIFIED:
        return
    if verdict.status == registry_mod.CHAIN_UNAVAILABLE:
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_VERDICT)


@main.command(name="verify-all")
@click.option("--registry", type=click.Path(), default=None, help="Override registry path.")
@click.option("--env-file", type=click.Path(exists=True), default=None)
def verify_all_cmd(registry: str | None, env_file: str | None) -> None:
    """Bulk digest verification for cron; exit 1 on any mismatch."""
    svc = _Embedded(env_file)
    store = RegistryStore(registry) if registry else svc.store
    summary, verdicts = registry_mod.verify_all(store, svc.backend, svc.cfg.fernet_key)
    click.echo(
        json.dumps(
            {
                "total": summary.total,
                "verified": summary.verified,
                "mismatched": summary.mismatched,
                "not_found": summary.not_found,
                "unavailable": summary.unavailable,
                "verdicts": [{"uid": v.uid, "status": v.status} for v in verdicts],
            }
        )
    )
    if summary.mismatched or summary.not_found:
        sys.exit(EXIT_VERDICT)
    if summary.unavailable:
        sys.exit(EXIT_RUNTIME)


@main.command(name="gas-report")
@click.option("--sizes", default="500,1000,2000,5000", show_default=True)
@click.option("--pricing", type=click.Path(exists=True), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def gas_report(sizes: str, pricing: str | None, fmt: str) -> None:
    """Cost comparison report across configured networks."""
    try:
        parsed = [int(s) for s in sizes.split(",") if s.strip()]
        if not parsed or any(s <= 0 for s in parsed):
            raise ValueError("sizes must be positive")
    except ValueError as exc:
        raise click.UsageError(f"bad --sizes: {exc}")
    schedule, networks = gas_model.load_pricing(pricing)
    report = gas_model.compare(schedule, networks, parsed)
    click.echo(report.to_csv() if fmt == "csv" else report.to_json(), nl=False)
    click.echo()


@main.command(name="tamper-demo")
@click.option("--uid", required=True)
@click.option("--yes", is_flag=True, help="Confirm the destructive registry edit.")
@click.option("--env-file", type=click.Path(exists=True), default=None)
def tamper_demo(uid: str, yes: bool, env_file: str | None) -> None:
    """Corrupt UID's registry digest and show Verified -> Mismatch."""
    if not yes:
        _fail("tamper-demo rewrites the registry; pass --yes to confirm", EXIT_USAGE)
    svc = _Embedded(env_file)
    record = svc.store.lookup(uid)
    if record is None:
        _fail(f"uid {uid!r} not in registry", EXIT_USAGE)
    before = registry_mod.check_integrity_by_digest(
        svc.store, svc.backend, svc.cfg.fernet_key, uid
    )

    path = Path(svc.cfg.registry_path)
    lines = []
    for line in path.read_text("utf-8").splitlines():
        doc = json.loads(line)
        if doc.get("uid") == uid:
            digest = doc["plaintext_digest"]
            flipped = ("0" if digest[0] != "0" else "1") + digest[1:]
            doc["plaintext_digest"] = flipped
        lines.append(json.dumps(doc, sort_keys=True))
    path.write_text("\n".join(lines) + "\n", "utf-8")

    tampered = RegistryStore(path)
    after = registry_mod.check_integrity_by_digest(
        tampered, svc.backend, svc.cfg.fernet_key, uid
    )
    click.echo(json.dumps({"uid": uid, "before": before.status, "after": after.status}))


if __name__ == "__main__":
    main()
