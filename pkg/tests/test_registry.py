from __future__ import annotations

import json
import random

import pytest

from ledgerseal import crypto, registry as reg
from ledgerseal.chain import BackendUnavailable, SaveText, build_tx, sign_tx
from ledgerseal.registry import (
    CHAIN_UNAVAILABLE,
    DuplicateUid,
    MISMATCH,
    NOT_FOUND,
    RegistryStore,
    VERIFIED,
    check_integrity,
    check_integrity_by_digest,
    verify_all,
)


def save_review(backend, store, wallet, key, uid, text: bytes):
    token = crypto.seal(text, key)
    tx = build_tx(wallet.address, backend.next_nonce(wallet.address),
                  SaveText(token=token, uid=uid))
    result = backend.submit(sign_tx(tx, wallet))
    assert result.accepted
    return store.record_save(uid, result.entry_index, result.tx_hash, text)


# --- store ----------------------------------------------------------------

def test_record_save_and_lookup(store):
    rec = store.record_save("u1", 0, "0xabc", b"text")
    assert store.lookup("u1") == rec
    assert rec.plaintext_digest == reg.sha256_hex(b"text")


def test_duplicate_uid_rejected(store):
    store.record_save("u1", 0, "0xabc", b"text")
    with pytest.raises(DuplicateUid):
        store.record_save("u1", 1, "0xdef", b"other")


def test_unknown_uid(store):
    assert store.lookup("nope") is None


def test_reopen_preserves_records(tmp_path):
    path = tmp_path / "r.jsonl"
    store = RegistryStore(path)
    records = [store.record_save(f"u{i}", i, f"0x{i:02x}", f"t{i}".encode()) for i in range(10)]
    reopened = RegistryStore(path)
    assert len(reopened) == 10
    for rec in records:
        assert reopened.lookup(rec.uid) == rec
    assert reopened.corruption == []


def test_created_at_injectable(store):
    rec = store.record_save("u1", 0, "0xabc", b"t", created_at="2024-08-19T00:00:00Z")
    assert rec.created_at == "2024-08-19T00:00:00Z"


def test_duplicate_lines_reported_as_corruption(tmp_path):
    path = tmp_path / "r.jsonl"
    line = json.dumps(
        {"uid": "u1", "entry_index": 0, "tx_hash": "0xab",
         "plaintext_digest": "00", "created_at": "2024-01-01T00:00:00Z"}
    )
    path.write_text(line + "\n" + line + "\n" + "not json\n")
    store = RegistryStore(path)
    assert len(store) == 1
    assert len(store.corruption) == 2


def test_reservation_blocks_duplicates(store):
    store.reserve("u1")
    with pytest.raises(DuplicateUid):
        store.reserve("u1")
    store.release("u1")
    store.reserve("u1")  # released uid can be claimed again
    store.record_save("u1", 0, "0xab", b"t")
    with pytest.raises(DuplicateUid):
        store.reserve("u1")


# --- integrity verdicts -----------------------------------------------------

def test_verified_untampered(backend, store, wallet, key):
    save_review(backend, store, wallet, key, "u1", b"review body")
    v = check_integrity(store, backend, key, "u1", b"review body")
    assert v.status == VERIFIED
    assert v.on_chain_digest == v.local_digest


def test_mismatch_on_flipped_byte(backend, store, wallet, key):
    text = bytearray(b"review body")
    save_review(backend, store, wallet, key, "u1", bytes(text))
    text[3] ^= 0x01
    assert check_integrity(store, backend, key, "u1", bytes(text)).status == MISMATCH


def test_not_found_unknown_uid(backend, store, key):
    assert check_integrity(store, backend, key, "ghost", b"x").status == NOT_FOUND


def test_wrong_key_maps_to_mismatch(backend, store, wallet, key):
    save_review(backend, store, wallet, key, "u1", b"review")
    v = check_integrity(store, backend, crypto.generate_key(), "u1", b"review")
    assert v.status == MISMATCH
    assert "decryption failed" in v.reason


def test_chain_unavailable_verdict(store, key):
    class DownBackend:
        def get_text(self, index):
            raise BackendUnavailable("transport down")

    store.record_save("u1", 0, "0xab", b"t")
    v = check_integrity(store, DownBackend(), key, "u1", b"t")
    assert v.status == CHAIN_UNAVAILABLE


def test_dangling_entry_index_not_found(backend, store, key):
    store.record_save("u1", 99, "0xab", b"t")
    assert check_integrity(store, backend, key, "u1", b"t").status == NOT_FOUND


def test_single_byte_tamper_sweep(backend, store, wallet, key):
    text = bytes(range(256))[:200]
    save_review(backend, store, wallet, key, "sweep", text)
    for pos in range(len(text)):
        mutated = bytearray(text)
        mutated[pos] ^= 0x01
        assert check_integrity(store, backend, key, "sweep", bytes(mutated)).status == MISMATCH


def test_soundness_random_sequences(backend, store, wallet, key):
    rng = random.Random(11)
    saved: dict[str, bytes] = {}
    for i in range(50):
        if saved and rng.random() < 0.5:
            uid = rng.choice(list(saved))
            assert check_integrity(store, backend, key, uid, saved[uid]).status == VERIFIED
        else:
            uid = f"u{i}"
            body = rng.randbytes(rng.randrange(1, 300))
            save_review(backend, store, wallet, key, uid, body)
            saved[uid] = body


# --- verify_all --------------------------------------------------------------

def test_verify_all_empty(backend, store, key):
    summary, verdicts = verify_all(store, backend, key)
    assert summary == reg.VerifySummary(0, 0, 0, 0, 0)
    assert verdicts == []


def test_verify_all_clean(backend, store, wallet, key):
    for i in range(8):
        save_review(backend, store, wallet, key, f"u{i}", f"body {i}".encode())
    summary, _ = verify_all(store, backend, key)
    assert summary.total == summary.verified == 8


@pytest.mark.parametrize("k", [0, 1, 5, 12])
def test_verify_all_tamper_counts(tmp_path, backend, wallet, key, k):
    n = 12
    path = tmp_path / "r.jsonl"
    store = RegistryStore(path)
    for i in range(n):
        save_review(backend, store, wallet, key, f"u{i}", f"body {i}".encode())
    # tamper k digests directly in the file, then reload
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    for doc in lines[:k]:
        doc["plaintext_digest"] = "0" * 64
    path.write_text("\n".join(json.dumps(d) for d in lines) + "\n")
    tampered = RegistryStore(path)
    summary, verdicts = verify_all(tampered, backend, key)
    assert (summary.total, summary.mismatched, summary.verified) == (n, k, n - k)
    # pointwise agreement with the single-uid digest check
    for v in verdicts:
        assert v.status == check_integrity_by_digest(tampered, backend, key, v.uid).status
