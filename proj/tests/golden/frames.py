#!/usr/bin/env python3
"""Writes protocol_frames.txt: one complete wire frame per line as name|hex.

Packed with struct from the written framing rules, independently of the
C++ encoder. Run from this directory.
"""

import struct


def leb128(n):
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        out.append(b | 0x80 if n else b)
        if not n:
            return bytes(out)


def s16(text):
    raw = text.encode()
    return struct.pack("<H", len(raw)) + raw


def frame(opcode, body):
    return struct.pack("<IB", len(body) + 1, opcode) + body


def u32s(values):
    return b"".join(struct.pack("<I", v) for v in values)


def queries(items):
    body = leb128(len(items))
    for ctx, value in items:
        body += leb128(len(ctx)) + u32s(ctx) + struct.pack("<I", value)
    return body


FRAMES = {
    "hello_req": frame(0, b"\x01"),
    "hello_rsp": frame(0, struct.pack("<I", 50257) + s16("gpt2") + s16("svc-1.0") + struct.pack("<I", 64)),
    "tokenize_req": frame(1, b"hi"),
    "tokenize_rsp": frame(1, leb128(2) + u32s([104, 105])),
    "detokenize_req": frame(2, leb128(2) + u32s([104, 105])),
    "detokenize_rsp": frame(2, b"hi"),
    "ranks_req": frame(3, queries([([], 5), ([1, 2], 300)])),
    "ranks_rsp": frame(3, u32s([0, 7])),
    "tokens_at_req": frame(4, queries([([], 0), ([1, 2], 7)])),
    "tokens_at_rsp": frame(4, u32s([5, 300])),
    "dists_req": frame(5, leb128(2) + leb128(0) + leb128(1) + u32s([3])),
    "dists_rsp": frame(5, struct.pack("<4H", 16384, 16384, 16384, 16384) + struct.pack("<4H", 65533, 1, 1, 1)),
    "memorize_req": frame(6, struct.pack("<Q", 3) + b"abc" + struct.pack("<I", 2)),
    "memorize_rsp": frame(6, s16("ad-1") + struct.pack("<I", 3) + b"\x01\x02\x03"),
    "load_adapter_req": frame(7, s16("ad-1") + struct.pack("<I", 3) + b"\x01\x02\x03"),
    "load_adapter_rsp": frame(7, b""),
    "error_rsp": frame(255, s16("boom")),
}

if __name__ == "__main__":
    with open("protocol_frames.txt", "w") as f:
        f.write("# name|frame hex\n")
        for name, data in FRAMES.items():
            f.write(f"{name}|{data.hex()}\n")
