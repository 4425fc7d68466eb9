#!/usr/bin/env python3
"""Independent reference computations whose outputs are frozen into the C++ tests.

Run: python3 tests/oracles/oracles.py
Nothing here imports project code; the fixture facts are enumerated by hand.
"""
import json
import math
import re
from fractions import Fraction
from pathlib import Path

M64 = (1 << 64) - 1
HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent / "fixtures"


# -- PRNG: 64-bit xorshift*, shifts 12/25/27, multiplier 0x2545F4914F6CDD1D
class XorShiftStar:
    def __init__(self, seed):
        self.s = seed if seed else 0x9E3779B97F4A7C15

    def next(self):
        x = self.s
        x ^= x >> 12
        x ^= (x << 25) & M64
        x ^= x >> 27
        self.s = x
        return (x * 0x2545F4914F6CDD1D) & M64

    def below(self, bound):
        threshold = ((1 << 64) - bound) % bound
        while True:
            r = self.next()
            if r >= threshold:
                return r % bound


def sample(ids, k, seed):
    ids = sorted(ids)
    rng = XorShiftStar(seed)
    n = len(ids)
    for i in range(k):
        j = i + rng.below(n - i)
        ids[i], ids[j] = ids[j], ids[i]
    return ids[:k]


# -- hashing embedder
def fnv1a64(data: bytes):
    h = 0xcbf29ce484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001b3) & M64
    return h


def tokens(text):
    return [t.lower() for t in re.findall(r"[A-Za-z0-9]+", text)]


def embed(text, dim=256):
    acc = [0.0] * dim
    toks = tokens(text)
    feats = list(toks) + [toks[i] + " " + toks[i + 1] for i in range(len(toks) - 1)]
    for f in feats:
        h = fnv1a64(f.encode())
        acc[h % dim] += 1.0 if (h >> 63) == 0 else -1.0
    n = math.sqrt(sum(v * v for v in acc))
    return [v / n for v in acc]


def cos(a, b):
    return sum(x * y for x, y in zip(a, b))


def token_f1(cand, ref):
    from collections import Counter
    c, r = Counter(tokens(cand)), Counter(tokens(ref))
    common = sum((c & r).values())
    if common == 0:
        return 0.0
    p, q = common / sum(c.values()), common / sum(r.values())
    return 2 * p * q / (p + q)


# -- fixture triplets, enumerated by hand
S = {n: f"§117.{n}" for n in (257, 260, 264, 267)}
SUBPART = "PART 117 SUBPART E"
FIXTURE_TRIPLETS = {
    ("PART 117", "partOf", "SUBCHAPTER B"): {"Part117"},
    ("SUBCHAPTER B", "partOf", "CHAPTER I"): {"SubchapterB"},
    (SUBPART, "partOf", "PART 117"): {"Part117/SubpartE"},
    (S[257], "inSubpart", SUBPART): {"117.257"},
    (S[260], "inSubpart", SUBPART): {"117.260"},
    (S[264], "inSubpart", SUBPART): {"117.264"},
    (S[267], "inSubpart", SUBPART): {"117.267"},
    (S[257], "references", S[264]): {"117.257"},
    (S[260], "references", S[267]): {"117.260"},
    (S[267], "references", S[264]): {"117.267"},
    (S[264], "hasTimeframe", "15 days to appeal the order"): {"117.264"},
}


def nav_fixture():
    """Sample {117.257, 117.264}, shared_or_linked, mentions as one-hop
    reference-or-shared-entity neighbours."""
    T = {}
    for key, secs in FIXTURE_TRIPLETS.items():
        for s in secs:
            T.setdefault(s, set()).add(key)
    leaf = ["117.257", "117.260", "117.264", "117.267"]
    ent = {s: "§" + s for s in leaf}
    hier = re.compile(r"^(TITLE|CHAPTER|SUBCHAPTER|PART|SUBPART)\b")

    def ents(s):
        out = set()
        for (a, _, b) in T.get(s, ()):
            out |= {a, b}
        return {e for e in out if not hier.match(e)}

    def mentions(s):
        m = set()
        for o in leaf:
            if o == s:
                continue
            linked = any(k[1] == "references" and {k[0], k[2]} == {ent[s], ent[o]}
                         for k in FIXTURE_TRIPLETS)
            if linked or ents(s) & ents(o):
                m.add(o)
        return m

    def linked_count(a, b, shared):
        return sum(1 for k in (T[a] | T[b]) - shared
                   if {k[0], k[2]} == {ent[a], ent[b]})

    total = Fraction(0)
    sample_ids = ["117.257", "117.264"]
    for s in sample_ids:
        num = den = 0
        for m in sorted(mentions(s)):
            shared = T[s] & T[m]
            num += len(shared) + linked_count(s, m, shared)
            den += len(T[s] | T[m])
        total += Fraction(num, den) if den else 0
    return {s: sorted(mentions(s)) for s in leaf}, total / len(sample_ids)


def section_bodies():
    out = {}
    for line in (FIXTURES / "mini_ecfr.jsonl").read_text().splitlines():
        rec = json.loads(line)
        cid = rec["citation"]
        if cid.startswith("§"):
            out[cid.replace("§ ", "")] = rec["body"]
    return out


def main():
    r = XorShiftStar(1)
    print("xorshift seed=1 first3:", [hex(r.next()) for _ in range(3)])
    r0 = XorShiftStar(0)
    print("xorshift seed=0 first:", hex(r0.next()))
    leaf = ["117.257", "117.260", "117.264", "117.267", "doc1#p1"]
    print("sample seed=1 k=2 fixture:", sample(leaf[:4], 2, 1))

    print("fnv1a64('') =", hex(fnv1a64(b"")))
    print("fnv1a64('a') =", hex(fnv1a64(b"a")))
    print("fnv1a64('fda') =", hex(fnv1a64(b"fda")))

    v = embed("FDA requires submission within 15 days")
    nz = [(i, round(x, 12)) for i, x in enumerate(v) if x != 0.0]
    print("embed golden nonzero buckets:", nz)
    a = embed("FDA requires submission within 15 days")
    print("cos(sub, partial) =", cos(a, embed("FDA requires submission")))
    print("cos(sub, chapter) =", cos(a, embed("CHAPTER I partOf SUBCHAPTER B")))

    bodies = section_bodies()
    ids = sorted(bodies)
    vec = {i: embed(bodies[i]) for i in ids}
    mn = min(cos(vec[x], vec[y]) for x in ids for y in ids)
    print("fixture pairwise cosine min =", mn)

    print("token_f1 example =", token_f1("appeal within 15 days", "you must appeal within 15 days"))

    m, nav = nav_fixture()
    print("mentions:", m)
    print("nav shared_or_linked {257,264} =", nav, float(nav))

    q = "how long to appeal"
    qv = embed(q)
    best = []
    for i in ids:
        for sent in re.split(r"(?<=[.!?])\s+|\n", bodies[i]):
            if sent.strip():
                best.append((cos(qv, embed(sent)), i, sent))
    best.sort(key=lambda t: -t[0])
    print("extractive ranking top3:")
    for row in best[:3]:
        print("  ", row)
    for line in (FIXTURES / "mini_ecfr.jsonl").read_text().splitlines():
        rec = json.loads(line)
        if not rec["citation"].startswith("§"):
            print("  hierarchy", rec["citation"], cos(qv, embed(rec["body"])))


if __name__ == "__main__":
    main()
