#!/usr/bin/env python3
"""Reference oracle for the golden vectors used by the C++ tests.

Everything here is computed independently of the C++ code:
  * the interpolated context model with exact Fractions,
  * largest-remainder quantization on the 65536 grid,
  * the range coder as one unbounded integer (no carry handling needed).

Run from this directory to regenerate the *.txt files:
    python3 oracle.py
"""

import random
from collections import Counter, defaultdict
from fractions import Fraction
from math import floor

T = 65536


def fit(tokens, k):
    tables = [defaultdict(Counter) for _ in range(k + 1)]
    for j, t in enumerate(tokens):
        for o in range(k + 1):
            if j >= o:
                tables[o][tuple(tokens[j - o:j])][t] += 1
    return tables


def probabilities(tables, k, V, context):
    p = [Fraction(1, V)] * V
    if tables is None:
        return p
    usable = min(len(context), k)
    for o in range(usable + 1):
        ctx = tuple(context[len(context) - o:]) if o else ()
        c = tables[o].get(ctx)
        if not c:
            continue
        n = sum(c.values())
        p = [(c.get(t, 0) + p[t]) / (n + 1) for t in range(V)]
    return p


def quantize(p):
    V = len(p)
    spread = T - V
    q = [1 + floor(spread * x) for x in p]
    rem = [spread * x - floor(spread * x) for x in p]
    left = T - sum(q)
    for t in sorted(range(V), key=lambda t: (-rem[t], t))[:left]:
        q[t] += 1
    return q


def rank_of(q, t):
    return sum(1 for u in range(len(q)) if q[u] > q[t] or (q[u] == q[t] and u < t))


class BigRangeEncoder:
    """Same arithmetic as the 32-bit coder, but `low` never overflows."""

    def __init__(self):
        self.low = 0
        self.range = 0xFFFFFFFF
        self.shifts = 0

    def encode(self, cum, freq, total):
        r = self.range // total
        self.low += r * cum
        self.range = r * freq
        while self.range < (1 << 24):
            self.range <<= 8
            self.low <<= 8
            self.shifts += 1

    def finish(self):
        n = self.shifts + 5
        return self.low.to_bytes(n, "big")


def leb128(n):
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def context_of(tokens, j, mode, W):
    if mode == "dynamic":
        return tokens[(j // W) * W:j]
    return tokens[max(0, j - W):j]


def code(tokens, V, k, memorize, mode, W):
    tables = fit(tokens, k) if memorize and tokens else None
    ranks = []
    segments = []
    enc = None
    for j, t in enumerate(tokens):
        if enc is None or (mode == "dynamic" and j % W == 0):
            if enc is not None:
                segments.append(enc.finish())
            enc = BigRangeEncoder()
        q = quantize(probabilities(tables, k, V, context_of(tokens, j, mode, W)))
        ranks.append(rank_of(q, t))
        enc.encode(sum(q[:t]), q[t], T)
    if enc is not None:
        segments.append(enc.finish())
    payload = leb128(len(segments))
    for s in segments:
        payload += leb128(len(s)) + s
    return ranks, payload


def main():
    rng = random.Random(20241015)
    lines = []
    cases = [
        ("alternating", [1, 2] * 20, 1, True, "dynamic", 16),
        ("hand-example", [1, 2, 1, 2, 1], 1, True, "dynamic", 512),
        ("empty-sliding", [], 3, True, "sliding", 8),
        ("empty-dynamic", [], 3, True, "dynamic", 8),
        ("single", [5], 3, True, "dynamic", 8),
        ("text-dyn", list(b"the cat sat on the mat and the cat ate the rat"), 3, True, "dynamic", 16),
        ("text-sld", list(b"the cat sat on the mat and the cat ate the rat"), 3, True, "sliding", 16),
        ("text-unfitted", list(b"abracadabra abracadabra"), 3, False, "dynamic", 8),
        ("order2-sld", list(b"mississippi river mississippi"), 2, True, "sliding", 4),
    ]
    for i in range(6):
        n = rng.randint(1, 64)
        alphabet = rng.choice([2, 4, 16, 256])
        toks = [rng.randrange(alphabet) for _ in range(n)]
        mode = rng.choice(["dynamic", "sliding"])
        cases.append((f"random{i}", toks, rng.choice([0, 1, 2, 3]), rng.random() < 0.7, mode, rng.choice([1, 3, 7, 32])))
    for name, toks, k, mem, mode, W in cases:
        ranks, payload = code(toks, 256, k, mem, mode, W)
        lines.append("|".join([
            name, mode, str(W), str(k), "1" if mem else "0",
            ",".join(map(str, toks)), payload.hex(), ",".join(map(str, ranks)),
        ]))
    with open("ac_vectors.txt", "w") as f:
        f.write("# name|mode|window|order|memorize|tokens|payload hex|ranks\n")
        f.write("\n".join(lines) + "\n")

    # Raw coder sequences, including runs that force long carry chains.
    rc_lines = []
    seqs = [
        [(0, 1, 2)] * 40,
        [(1, 1, 2)] * 40,
        [(65535, 1, 65536)] * 30,
        [(0, 1, 65536)] * 30,
        [(65534, 1, 65535)] * 25 + [(0, 1, 65535)] * 25,
    ]
    for _ in range(10):
        seq = []
        for _ in range(rng.randint(1, 64)):
            total = rng.choice([2, 3, 256, 4096, 65535, 65536])
            freq = rng.randint(1, max(1, total // rng.choice([1, 2, 64, total])))
            cum = rng.randint(0, total - freq)
            seq.append((cum, freq, total))
        seqs.append(seq)
    for seq in seqs:
        enc = BigRangeEncoder()
        for c in seq:
            enc.encode(*c)
        rc_lines.append(";".join(f"{c}:{f}:{t}" for c, f, t in seq) + "|" + enc.finish().hex())
    with open("range_coder_vectors.txt", "w") as f:
        f.write("# cum:freq:total;...|encoded hex\n")
        f.write("\n".join(rc_lines) + "\n")

    # Quantized distributions for a few fitted states and contexts.
    dist_lines = []
    corpus = list(b"she sells sea shells by the sea shore")
    tables = fit(corpus, 3)
    for ctx in [b"", b"s", b"se", b"sea", b" sh", b"zzz", b"e s"]:
        q = quantize(probabilities(tables, 3, 256, list(ctx)))
        dist_lines.append(ctx.hex() + "|" + ",".join(map(str, q)))
    with open("model_dists.txt", "w") as f:
        f.write("# corpus: she sells sea shells by the sea shore, order 3\n")
        f.write("# context hex|q[0..255]\n")
        f.write("\n".join(dist_lines) + "\n")


if __name__ == "__main__":
    main()
