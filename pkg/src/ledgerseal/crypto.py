"""Seal/unseal pipeline: gzip compression followed by Fernet-format
authenticated encryption.

The token writer/reader here is a from-scratch implementation of the
public Fernet wire format (version 0x80, big-endian timestamp, 16-byte
IV, AES-128-CBC body, HMAC-SHA256 trailer) so its bytes interoperate
with any conforming library.  Compression emits a fixed gzip header
(mtime=0, OS=255) so compressed output is reproducible.
"""

from __future__ import annotations

import base64
import hmac
import hashlib
import os
import struct
import time
import zlib
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

_GZIP_HEADER = b"\x1f\x8b\x08\x00\x00\x00\x00\x00\x00\xff"
_FERNET_VERSION = 0x80
# version(1) + timestamp(8) + iv(16) + at least one AES block + hmac(32)
_MIN_TOKEN_LEN = 1 + 8 + 16 + 16 + 32


class CryptoError(Exception):
    """Base class for seal/unseal failures."""


class CorruptStream(CryptoError):
    """Gzip stream failed to decompress (bad magic, CRC, truncation)."""


class MalformedToken(CryptoError):
    """Token is not valid base64url / wrong version byte / too short."""


class AuthenticationFailed(CryptoError):
    """HMAC or padding check failed: wrong key or tampered ciphertext."""


class EntropyUnavailable(CryptoError):
    """The OS entropy source could not be read."""


@dataclass(frozen=True)
class SymmetricKey:
    """32-byte Fernet key: first half signs, second half encrypts."""

    raw: bytes

    def __post_init__(self) -> None:
        if len(self.raw) != 32:
            raise ValueError("key must be exactly 32 bytes")

    @property
    def signing_key(self) -> bytes:
        return self.raw[:16]

    @property
    def encryption_key(self) -> bytes:
        return self.raw[16:]

    @classmethod
    def from_base64(cls, text: str | bytes) -> "SymmetricKey":
        if isinstance(text, str):
            text = text.encode("ascii")
        try:
            raw = base64.urlsafe_b64decode(text)
        except Exception as exc:
            raise ValueError(f"key is not valid base64url: {exc}") from exc
        return cls(raw)

    def to_base64(self) -> str:
        return base64.urlsafe_b64encode(self.raw).decode("ascii")


def generate_key() -> SymmetricKey:
    try:
        raw = os.urandom(32)
    except OSError as exc:  # pragma: no cover - OS entropy failure
        raise EntropyUnavailable(str(exc)) from exc
    return SymmetricKey(raw)


def compress(data: bytes, level: int = 6) -> bytes:
    """Gzip ``data`` with a fixed header (mtime=0, XFL=0, OS=255)."""
    compressor = zlib.compressobj(level, zlib.DEFLATED, -zlib.MAX_WBITS)
    body = compressor.compress(data) + compressor.flush()
    trailer = struct.pack("<II", zlib.crc32(data) & 0xFFFFFFFF, len(data) & 0xFFFFFFFF)
    return _GZIP_HEADER + body + trailer


def decompress(stream: bytes) -> bytes:
    """Inverse of :func:`compress`; accepts any RFC 1952 gzip member."""
    if len(stream) < 18 or stream[:2] != b"\x1f\x8b":
        raise CorruptStream("not a gzip stream")
    try:
        data = zlib.decompress(stream, wbits=16 + zlib.MAX_WBITS)
    except zlib.error as exc:
        raise CorruptStream(str(exc)) from exc
    # zlib already verified CRC32; double-check length word for truncated tails
    (isize,) = struct.unpack("<I", stream[-4:])
    if isize != len(data) & 0xFFFFFFFF:
        raise CorruptStream("length trailer mismatch")
    return data


def _pkcs7_pad(data: bytes) -> bytes:
    pad = 16 - (len(data) % 16)
    return data + bytes([pad]) * pad


def _pkcs7_unpad(data: bytes) -> bytes:
    if not data or len(data) % 16 != 0:
        raise AuthenticationFailed("invalid ciphertext length")
    pad = data[-1]
    if pad < 1 or pad > 16 or data[-pad:] != bytes([pad]) * pad:
        raise AuthenticationFailed("invalid padding")
    return data[:-pad]


def encrypt_token(
    compressed: bytes,
    key: SymmetricKey,
    timestamp: int | None = None,
    iv: bytes | None = None,
) -> str:
    """Build a Fernet token over ``compressed``.

    ``timestamp`` and ``iv`` are injectable for deterministic tests;
    production callers leave them None for current time and a fresh
    random IV.
    """
    if timestamp is None:
        timestamp = int(time.time())
    if timestamp < 0:
        raise ValueError("timestamp must be non-negative")
    if iv is None:
        iv = os.urandom(16)
    if len(iv) != 16:
        raise ValueError("iv must be exactly 16 bytes")
    encryptor = Cipher(algorithms.AES(key.encryption_key), modes.CBC(iv)).encryptor()
    ciphertext = encryptor.update(_pkcs7_pad(compressed)) + encryptor.finalize()
    body = struct.pack(">BQ", _FERNET_VERSION, timestamp) + iv + ciphertext
    tag = hmac.new(key.signing_key, body, hashlib.sha256).digest()
    return base64.urlsafe_b64encode(body + tag).decode("ascii")


def decrypt_token(token: str | bytes, key: SymmetricKey) -> bytes:
    """Verify and open a Fernet token; returns the embedded compressed
    message.  Tokens never expire (no TTL enforcement)."""
    if isinstance(token, str):
        token = token.encode("ascii", errors="replace")
    try:
        raw = base64.urlsafe_b64decode(token)
    except Exception as exc:
        raise MalformedToken(f"invalid base64url: {exc}") from exc
    if len(raw) < _MIN_TOKEN_LEN:
        raise MalformedToken("token too short")
    if raw[0] != _FERNET_VERSION:
        raise MalformedToken(f"unexpected version byte 0x{raw[0]:02x}")
    body, tag = raw[:-32], raw[-32:]
    expected = hmac.new(key.signing_key, body, hashlib.sha256).digest()
    if not hmac.compare_digest(tag, expected):
        raise AuthenticationFailed("HMAC mismatch")
    iv = body[9:25]
    ciphertext = body[25:]
    if len(ciphertext) % 16 != 0:
        raise MalformedToken("ciphertext not block-aligned")
    decryptor = Cipher(algorithms.AES(key.encryption_key), modes.CBC(iv)).decryptor()
    padded = decryptor.update(ciphertext) + decryptor.finalize()
    return _pkcs7_unpad(padded)


def seal(
    message: bytes,
    key: SymmetricKey,
    timestamp: int | None = None,
    iv: bytes | None = None,
) -> str:
    """Compress then encrypt: the full sealing transform."""
    return encrypt_token(compress(message), key, timestamp=timestamp, iv=iv)


def unseal(token: str | bytes, key: SymmetricKey) -> bytes:
    """Decrypt then decompress: inverse of :func:`seal`."""
    return decompress(decrypt_token(token, key))
