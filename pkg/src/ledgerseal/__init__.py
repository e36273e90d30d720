"""Tamper-evidence toolkit: seal review text, commit it to an append-only
ledger, and verify later that local copies still match the sealed record."""

__version__ = "0.1.0"
