"""Append-only event log: length-prefixed, checksummed JSON records.

Record line format: `<payload-bytes> <crc32-hex> <payload-json>\\n`.
The payload is the full event envelope {sequence, timestamp, payload}.
A torn or corrupted tail is detected by length/checksum mismatch; recovery
truncates back to the last intact record.
"""

from __future__ import annotations

import json
import os
import zlib
from pathlib import Path
from typing import Iterator, Optional

from ..errors import CorruptLog


def _encode(envelope: dict) -> bytes:
    body = json.dumps(envelope, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return b"%d %08x " % (len(body), crc) + body + b"\n"


class EventLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._sequence = 0
        if self.path.exists():
            for envelope in self.iter_records(strict=False):
                self._sequence = envelope["sequence"]

    @property
    def last_sequence(self) -> int:
        return self._sequence

    def append(self, payload: dict, timestamp: float) -> dict:
        self._sequence += 1
        envelope = {"sequence": self._sequence, "timestamp": timestamp, "payload": payload}
        with open(self.path, "ab") as handle:
            handle.write(_encode(envelope))
            handle.flush()
            os.fsync(handle.fileno())
        return envelope

    def iter_records(self, strict: bool = True) -> Iterator[dict]:
        """Yield envelopes in order; on a bad record either raise (strict)
        or stop at the last good one."""
        if not self.path.exists():
            return
        with open(self.path, "rb") as handle:
            data = handle.read()
        offset = 0
        sequence = 0
        while offset < len(data):
            envelope, consumed = self._parse_one(data, offset, sequence + 1, strict)
            if envelope is None:
                return
            sequence = envelope["sequence"]
            offset += consumed
            yield envelope

    @staticmethod
    def _parse_one(
        data: bytes, offset: int, expected_sequence: int, strict: bool
    ) -> tuple[Optional[dict], int]:
        def fail(message: str):
            if strict:
                raise CorruptLog(expected_sequence, message)
            return None, 0

        head_end = data.find(b" ", offset)
        if head_end < 0:
            return fail("truncated length prefix")
        try:
            length = int(data[offset:head_end])
        except ValueError:
            return fail("bad length prefix")
        crc_end = data.find(b" ", head_end + 1)
        if crc_end < 0:
            return fail("truncated checksum")
        crc_text = data[head_end + 1 : crc_end]
        body_start = crc_end + 1
        body_end = body_start + length
        if body_end + 1 > len(data):
            return fail("truncated record body")
        body = data[body_start:body_end]
        if data[body_end : body_end + 1] != b"\n":
            return fail("missing record terminator")
        try:
            expected_crc = int(crc_text, 16)
        except ValueError:
            return fail("bad checksum text")
        if (zlib.crc32(body) & 0xFFFFFFFF) != expected_crc:
            return fail("checksum mismatch")
        try:
            envelope = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return fail("unparseable body")
        if envelope.get("sequence") != expected_sequence:
            return fail(
                f"sequence {envelope.get('sequence')} where {expected_sequence} expected"
            )
        return envelope, (body_end + 1) - offset

    def read_all(self) -> list[dict]:
        return list(self.iter_records(strict=True))

    def recover(self) -> list[dict]:
        """Read the intact prefix and truncate any torn tail off the file."""
        good: list[dict] = []
        consumed = 0
        if not self.path.exists():
            return good
        with open(self.path, "rb") as handle:
            data = handle.read()
        offset = 0
        while offset < len(data):
            envelope, used = self._parse_one(data, offset, len(good) + 1, strict=False)
            if envelope is None:
                break
            good.append(envelope)
            offset += used
            consumed = offset
        if consumed < len(data):
            with open(self.path, "r+b") as handle:
                handle.truncate(consumed)
        self._sequence = good[-1]["sequence"] if good else 0
        return good
