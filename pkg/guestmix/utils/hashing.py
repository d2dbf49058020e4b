"""Content hashes: sentence ids, subword buckets, and artifact fingerprints."""

from __future__ import annotations

import hashlib
import unicodedata

import regex

_WHITESPACE = regex.compile(r"\s+")

FNV1A_64_OFFSET = 0xCBF29CE484222325
FNV1A_64_PRIME = 0x100000001B3
_MASK_64 = 0xFFFFFFFFFFFFFFFF


def normalize_text(text: str) -> str:
    """NFC, case-fold, collapse whitespace, strip."""
    folded = unicodedata.normalize("NFC", text).casefold()
    return _WHITESPACE.sub(" ", folded).strip()


def sentence_id(text: str) -> str:
    """64-bit BLAKE2b digest of the normalized text as 16 hex characters."""
    return hashlib.blake2b(normalize_text(text).encode("utf-8"), digest_size=8).hexdigest()


def fnv1a_64(data: bytes) -> int:
    h = FNV1A_64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV1A_64_PRIME) & _MASK_64
    return h


def sha256_file(path: str, chunk_size: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
