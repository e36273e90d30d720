from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor

import pytest

from conftest import make_service


def test_post_happy_path(client):
    r = client.post("/api/v1/reviews", json={"uid": "u1", "text": "a review"})
    assert r.status_code == 201
    body = r.json()
    assert body["uid"] == "u1"
    assert body["tx_hash"].startswith("0x") and len(body["tx_hash"]) == 66
    assert body["entry_index"] == 0
    assert body["gas_used"] > 20_000


def test_post_duplicate_uid(client):
    assert client.post("/api/v1/reviews", json={"uid": "u1", "text": "t"}).status_code == 201
    r = client.post("/api/v1/reviews", json={"uid": "u1", "text": "t"})
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "duplicate_uid"


def test_post_invalid_input(client):
    r = client.post("/api/v1/reviews", json={"uid": "", "text": "t"})
    assert r.status_code == 400
    assert r.json()["error"]["code"] == "invalid_input"
    assert client.post("/api/v1/reviews", json={"uid": "u"}).status_code == 400


def test_get_roundtrip(client):
    text = "Faust, eine Tragödie — review ✓"
    client.post("/api/v1/reviews", json={"uid": "u1", "text": text})
    r = client.get("/api/v1/reviews/u1")
    assert r.status_code == 200
    assert r.json()["text"] == text


def test_get_unknown_uid(client):
    r = client.get("/api/v1/reviews/ghost")
    assert r.status_code == 404
    assert r.json()["error"]["code"] == "not_found"


def test_verify_verdicts(client):
    client.post("/api/v1/reviews", json={"uid": "u1", "text": "original"})
    ok = client.post("/api/v1/reviews/u1/verify", json={"text": "original"})
    assert ok.status_code == 200 and ok.json()["status"] == "verified"
    bad = client.post("/api/v1/reviews/u1/verify", json={"text": "originaX"})
    assert bad.status_code == 200 and bad.json()["status"] == "mismatch"
    ghost = client.post("/api/v1/reviews/ghost/verify", json={"text": "x"})
    assert ghost.status_code == 200 and ghost.json()["status"] == "not_found"


def test_verify_digest_mode_without_body(client):
    client.post("/api/v1/reviews", json={"uid": "u1", "text": "original"})
    r = client.post("/api/v1/reviews/u1/verify")
    assert r.status_code == 200 and r.json()["status"] == "verified"


def test_verify_malformed_json(client):
    r = client.post(
        "/api/v1/reviews/u1/verify",
        content=b"{not json",
        headers={"Content-Type": "application/json"},
    )
    assert r.status_code == 400
    assert r.json()["error"]["code"] == "invalid_input"


def test_transaction_status(client):
    tx_hash = client.post(
        "/api/v1/reviews", json={"uid": "u1", "text": "t"}
    ).json()["tx_hash"]
    r = client.get(f"/api/v1/transactions/{tx_hash}")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "success"
    assert "block_number" in body and "gas_used" in body


def test_transaction_unknown(client):
    assert client.get("/api/v1/transactions/0x" + "00" * 32).status_code == 404


def test_transaction_pending_with_large_block(tmp_path, key, wallet):
    _, client = make_service(
        tmp_path, key, wallet, extra_env={"LEDGERSEAL_BLOCK_SIZE": "4"}
    )
    tx_hash = client.post(
        "/api/v1/reviews", json={"uid": "u1", "text": "t"}
    ).json()["tx_hash"]
    body = client.get(f"/api/v1/transactions/{tx_hash}").json()
    assert body["status"] == "pending"
    assert "block_number" not in body and "gas_used" not in body


def test_gas_report_default(client):
    body = client.get("/api/v1/gas/report").json()
    assert len(body["sizes"]) == 4
    for row in body["sizes"]:
        assert len(row["quotes"]) == 2
        assert row["savings_percent"] > 98


def test_gas_report_single_size(client):
    body = client.get("/api/v1/gas/report?sizes=1000").json()
    assert all(q["gas_units"] == 36_000 for q in body["sizes"][0]["quotes"])


def test_gas_report_invalid_sizes(client):
    assert client.get("/api/v1/gas/report?sizes=0").status_code == 400
    assert client.get("/api/v1/gas/report?sizes=abc").status_code == 400


def test_healthz(client):
    r = client.get("/healthz")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "enabled": True, "backend": "simulated"}


def test_healthz_latency(client):
    start = time.monotonic()
    client.get("/healthz")
    assert time.monotonic() - start < 0.05


def test_disabled_switch(tmp_path, key, wallet):
    _, client = make_service(
        tmp_path, key, wallet, extra_env={"LEDGERSEAL_ENABLED": "false"}
    )
    r = client.post("/api/v1/reviews", json={"uid": "u1", "text": "t"})
    assert r.status_code == 503
    assert r.json()["error"]["code"] == "service_disabled"
    assert client.post("/api/v1/reviews/u1/verify").status_code == 503
    health = client.get("/healthz")
    assert health.status_code == 200 and health.json()["enabled"] is False


def test_error_envelope_shape(client):
    for resp in [
        client.get("/api/v1/reviews/ghost"),
        client.post("/api/v1/reviews", json={"uid": "", "text": ""}),
        client.get("/api/v1/gas/report?sizes=-1"),
    ]:
        body = resp.json()
        assert set(body) == {"error"}
        assert set(body["error"]) == {"code", "message"}


def test_concurrent_distinct_uids(service):
    state, client = service
    n = 40

    def post(i):
        return client.post("/api/v1/reviews", json={"uid": f"c{i}", "text": f"text {i}"})

    with ThreadPoolExecutor(max_workers=16) as pool:
        responses = list(pool.map(post, range(n)))
    assert all(r.status_code == 201 for r in responses)
    indexes = {r.json()["entry_index"] for r in responses}
    assert indexes == set(range(n))
    assert state.backend.get_total_texts() == n
    for i in range(n):
        assert client.get(f"/api/v1/reviews/c{i}").json()["text"] == f"text {i}"


def test_duplicate_uid_race_single_winner(service):
    state, client = service

    def post(_):
        return client.post("/api/v1/reviews", json={"uid": "same", "text": "body"})

    with ThreadPoolExecutor(max_workers=16) as pool:
        responses = list(pool.map(post, range(20)))
    codes = sorted(r.status_code for r in responses)
    assert codes.count(201) == 1
    assert codes.count(409) == 19
    assert state.backend.get_total_texts() == 1


def test_failed_tx_leaves_no_record(tmp_path, key, wallet):
    state, client = make_service(
        tmp_path, key, wallet, extra_env={"LEDGERSEAL_FAILURE_RATE": "1.0"}
    )
    r = client.post("/api/v1/reviews", json={"uid": "u1", "text": "t"})
    assert r.status_code == 502
    assert r.json()["error"]["code"] == "tx_failed"
    assert state.store.lookup("u1") is None
    assert state.backend.get_total_texts() == 0
    # uid is released for a later retry
    state.config.backend.failure_rate = 0.0
    state.backend.config.failure_rate = 0.0
    assert client.post("/api/v1/reviews", json={"uid": "u1", "text": "t"}).status_code == 201
