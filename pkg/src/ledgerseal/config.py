"""Service configuration from LEDGERSEAL_* environment variables, with
optional dotenv-style file loading and contract-fingerprint pinning."""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from .chain import BackendConfig, WalletKey
from .crypto import SymmetricKey

logger = logging.getLogger(__name__)

ENV_PREFIX = "LEDGERSEAL_"


class ConfigError(Exception):
    """Missing or malformed configuration; message names the variable."""


def load_env_file(path: str | Path) -> dict[str, str]:
    """Parse KEY=VALUE lines; '#' comments and blank lines ignored."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip("'\"")
    return values


def _truthy(value: str) -> bool:
    return value.strip().lower() in {"1", "true", "yes", "on"}


@dataclass
class ServiceConfig:
    enabled: bool = True
    backend: BackendConfig = field(default_factory=BackendConfig)
    fernet_key: SymmetricKey | None = None
    wallet: WalletKey | None = None
    contract_address: str = ""
    pinned_fingerprint: str = ""
    registry_path: str = "registry.jsonl"
    chain_path: str = "chain_state.json"
    listen_port: int = 8570
    pricing_path: str | None = None

    def require_keys(self) -> None:
        """Keys are mandatory whenever the chain component is enabled."""
        if not self.enabled:
            return
        if self.fernet_key is None:
            raise ConfigError(f"{ENV_PREFIX}FERNET_KEY is required when enabled")
        if self.wallet is None:
            raise ConfigError(f"{ENV_PREFIX}PRIVATE_KEY is required when enabled")

    def fingerprint(self) -> str:
        """SHA-256(contract_address || owner address) — logged at startup
        and compared against the pinned value to detect address spoofing."""
        owner = str(self.wallet.address) if self.wallet else ""
        material = (self.contract_address + owner).encode("utf-8")
        return hashlib.sha256(material).hexdigest()

    def check_pin(self) -> None:
        fp = self.fingerprint()
        logger.info("contract fingerprint: %s", fp)
        if self.pinned_fingerprint and fp != self.pinned_fingerprint:
            raise ConfigError(
                "contract fingerprint mismatch: possible address spoofing "
                f"(expected {self.pinned_fingerprint}, got {fp})"
            )


def load_config(
    env: dict[str, str] | None = None, env_file: str | Path | None = None
) -> ServiceConfig:
    """Build a ServiceConfig from environment variables.

    Values from ``env_file`` fill in only variables absent from ``env``
    (process environment wins, twelve-factor style).
    """
    merged = dict(env if env is not None else os.environ)
    if env_file is not None:
        for key, value in load_env_file(env_file).items():
            merged.setdefault(key, value)

    def get(name: str, default: str = "") -> str:
        return merged.get(ENV_PREFIX + name, default)

    mode = get("BACKEND", "simulated").lower()
    if mode not in {"simulated", "remote"}:
        raise ConfigError(f"{ENV_PREFIX}BACKEND must be 'simulated' or 'remote'")
    try:
        backend = BackendConfig(
            mode=mode,
            block_size=int(get("BLOCK_SIZE", "1")),
            failure_rate=float(get("FAILURE_RATE", "0")),
            rpc_url=get("RPC_URL"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad backend settings: {exc}") from exc

    fernet_key = None
    if get("FERNET_KEY"):
        try:
            fernet_key = SymmetricKey.from_base64(get("FERNET_KEY"))
        except ValueError as exc:
            raise ConfigError(f"{ENV_PREFIX}FERNET_KEY: {exc}") from exc
    wallet = None
    if get("PRIVATE_KEY"):
        try:
            wallet = WalletKey.from_hex(get("PRIVATE_KEY"))
        except ValueError as exc:
            raise ConfigError(f"{ENV_PREFIX}PRIVATE_KEY: {exc}") from exc

    try:
        port = int(get("PORT", "8570"))
    except ValueError as exc:
        raise ConfigError(f"{ENV_PREFIX}PORT must be an integer") from exc

    return ServiceConfig(
        enabled=_truthy(get("ENABLED", "true")),
        backend=backend,
        fernet_key=fernet_key,
        wallet=wallet,
        contract_address=get("CONTRACT_ADDRESS"),
        pinned_fingerprint=get("PINNED_FINGERPRINT"),
        registry_path=get("REGISTRY_PATH", "registry.jsonl"),
        chain_path=get("CHAIN_PATH", "chain_state.json"),
        listen_port=port,
        pricing_path=get("PRICING_PATH") or None,
    )
