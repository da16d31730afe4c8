#!/usr/bin/env python3
"""FLAC codec seam for lmz.

Reads framed requests on stdin and answers on stdout until EOF.

    request:  op (1 byte, 'c' or 'd') | length (u64 LE) | payload
    response: status (1 byte, 0 = ok) | length (u64 LE) | payload

'c' compresses raw bytes as 8-bit mono PCM at 16 kHz (sample = byte - 128),
'd' reverses it. On failure the payload is a UTF-8 error message.
"""

import io
import struct
import sys

import numpy as np
import soundfile as sf

RATE = 16000


def compress(raw: bytes) -> bytes:
    samples = (np.frombuffer(raw, dtype=np.uint8).astype(np.int16) - 128).astype(np.int16)
    out = io.BytesIO()
    # libsndfile refuses zero-frame files, so empty input is one silent frame.
    frames = samples if samples.size else np.zeros(1, dtype=np.int16)
    sf.write(out, frames << 8, RATE, format="FLAC", subtype="PCM_S8")
    return out.getvalue()


def decompress(blob: bytes) -> bytes:
    data, _ = sf.read(io.BytesIO(blob), dtype="int16")
    return ((data.astype(np.int32) >> 8) + 128).astype(np.uint8).tobytes()


def read_exact(stream, n):
    buf = bytearray()
    while len(buf) < n:
        part = stream.read(n - len(buf))
        if not part:
            return None
        buf.extend(part)
    return bytes(buf)


def main() -> int:
    stdin, stdout = sys.stdin.buffer, sys.stdout.buffer
    while True:
        head = read_exact(stdin, 9)
        if head is None:
            return 0
        op, length = head[:1], struct.unpack("<Q", head[1:])[0]
        payload = read_exact(stdin, length)
        if payload is None:
            return 1
        try:
            if op == b"c":
                body, status = compress(payload), 0
            elif op == b"d":
                body, status = decompress(payload), 0
            else:
                body, status = b"unknown op", 1
        except Exception as exc:  # reported to the caller, never fatal
            body, status = str(exc).encode(), 1
        stdout.write(bytes([status]) + struct.pack("<Q", len(body)) + body)
        stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
