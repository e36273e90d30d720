from __future__ import annotations

import pytest

from ledgerseal import crypto
from ledgerseal.chain import BackendConfig, SimulatedBackend, WalletKey
from ledgerseal.config import load_config
from ledgerseal.ledger import deploy
from ledgerseal.registry import RegistryStore
from ledgerseal.service import build_state, create_app


@pytest.fixture
def key():
    return crypto.generate_key()


@pytest.fixture
def wallet():
    return WalletKey.generate()


@pytest.fixture
def backend(wallet):
    return SimulatedBackend(BackendConfig(block_size=1), deploy(wallet.address))


@pytest.fixture
def store(tmp_path):
    return RegistryStore(tmp_path / "registry.jsonl")


def make_service(tmp_path, key, wallet, extra_env=None, **state_kwargs):
    """Service state + TestClient over a fresh simulated chain."""
    from fastapi.testclient import TestClient

    env = {
        "LEDGERSEAL_FERNET_KEY": key.to_base64(),
        "LEDGERSEAL_PRIVATE_KEY": wallet.to_hex(),
        "LEDGERSEAL_REGISTRY_PATH": str(tmp_path / "registry.jsonl"),
    }
    if extra_env:
        env.update(extra_env)
    cfg = load_config(env=env)
    state = build_state(cfg, **state_kwargs)
    return state, TestClient(create_app(state))


@pytest.fixture
def service(tmp_path, key, wallet):
    return make_service(tmp_path, key, wallet)


@pytest.fixture
def client(service):
    return service[1]
