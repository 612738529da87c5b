"""Slow, independent reference implementations used to check the library.

Nothing here imports the code under test except plain data types.
"""

from __future__ import annotations

import math
from fractions import Fraction

# Frozen values, computed once with 50-digit arithmetic (mpmath) from the
# defining formulas, not from the library.
C41_K80 = 12.947908197323402650946910664486  # depth of class 41, K=80, [2, 80]
INDEX_12_95_K80 = 41.003459542352578052  # continuous index of 12.95 m, same bins
INDEX_12_K80 = 39.37181448451972  # continuous index of 12 m, same bins
DELTA_K80_C8_D4 = 14.844244152019498641670997  # 79 * log_40(2)
C32_K64_EXP = 12.284153354093126038371
C32_K64_LIN = 40.380952380952380952
FOCAL_P03 = 0.147486668529927159096  # p=0.3, y=1, gamma=2, alpha=0.25
MARGIN_PI_4 = 1.94454364826300569210232  # w=1.6, l=3.9, theta=pi/4

MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------- random streams


class RefXoshiro:
    """Straight transcription of the public-domain C reference
    (xoshiro256starstar.c and splitmix64.c)."""

    def __init__(self, seed):
        x = seed & MASK64
        self.s = []
        for _ in range(4):
            x = (x + 0x9E3779B97F4A7C15) & MASK64
            z = x
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
            self.s.append(z ^ (z >> 31))

    @staticmethod
    def rotl(x, k):
        return ((x << k) & MASK64) | (x >> (64 - k))

    def next(self):
        s = self.s
        result = (self.rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = self.rotl(s[3], 45)
        return result

    def double(self):
        return (self.next() >> 11) / 9007199254740992.0

    def gauss(self):
        u1, u2 = self.double(), self.double()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


# ---------------------------------------------------------------- mask assembly


def pixel_in_box(row, col, bbox, scale):
    """A map pixel spans [col*s, (col+1)*s) in the full image; it belongs to
    the crop when that span meets the open box interval on both axes."""
    s = Fraction(scale)
    left, top, right, bottom = (Fraction(c) for c in bbox)
    return (col + 1) * s > left and col * s < right and (row + 1) * s > top and row * s < bottom


def class_index(d, k, d_min, d_max):
    d = min(max(d, d_min), d_max)
    return 1 + (k - 1) * math.log(d / d_min) / math.log(d_max / d_min)


def threshold(k, d_min, d_max, center, w, l, theta):
    margin = 0.5 * w * abs(math.cos(theta)) + 0.5 * l * abs(math.sin(theta))
    return (k - 1) * math.log(center / (center - margin)) / math.log(d_max / d_min)


def brute_assemble(grid, scale, dets, k, d_min, d_max, quant=0.5):
    """Per-pixel loop over every detection. ``dets`` are
    ``(id, bbox, center_depth, w, l, theta)`` tuples. Returns ``{id: set of
    (row, col)}``."""
    owner = {}
    for r, line in enumerate(grid):
        for c, x in enumerate(line):
            if x < 1:
                continue
            best = None
            for ident, bbox, depth, w, l, theta in dets:
                if not pixel_in_box(r, c, bbox, scale):
                    continue
                s_k = class_index(depth, k, d_min, d_max)
                dist = abs(x - s_k)
                if dist >= threshold(k, d_min, d_max, depth, w, l, theta) + quant:
                    continue
                key = (dist, depth, ident)
                if best is None or key < best:
                    best = key
            if best is not None:
                owner[(r, c)] = best[2]
    out = {d[0]: set() for d in dets}
    for px, ident in owner.items():
        out[ident].add(px)
    return out


# ---------------------------------------------------------------- evaluation


def iou_fraction(a, b):
    """Exact IoU of two nested-list / array bitmaps by pixel loop."""
    inter = union = 0
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            inter += bool(x) and bool(y)
            union += bool(x) or bool(y)
    return Fraction(inter, union) if union else Fraction(0)


def brute_ap(preds, gts, threshold):
    """AP from an explicitly enumerated precision/recall curve.

    ``preds``: ``(score, image_id, id, bitmap)``; ``gts``: ``(image_id,
    bitmap)``. The threshold is read as the decimal it prints as. Exact
    rational arithmetic throughout. Returns None when there is no ground
    truth.
    """
    if not gts:
        return None
    thr = Fraction(repr(float(threshold)))
    ranked = sorted(preds, key=lambda p: (-p[0], p[1], p[2]))
    taken = set()
    curve = []
    tp = 0
    for n, (_, img, _, bm) in enumerate(ranked, start=1):
        best, best_j = None, None
        for j, (g_img, g_bm) in enumerate(gts):
            if g_img != img or j in taken:
                continue
            v = iou_fraction(bm, g_bm)
            if v >= thr and (best is None or v > best):
                best, best_j = v, j
        if best_j is not None:
            taken.add(best_j)
            tp += 1
        curve.append((Fraction(tp, len(gts)), Fraction(tp, n)))
    # interpolated precision at each distinct recall level reached
    total = Fraction(0)
    prev = Fraction(0)
    for level in sorted({r for r, _ in curve}):
        if level == 0:
            continue
        interp = max(p for r, p in curve if r >= level)
        total += (level - prev) * interp
        prev = level
    return total


def random_eval_case(rnd, max_preds=5, max_gts=5):
    """Small random case: disjoint ground-truth masks on a tiny grid (one or
    two images), predictions that are noisy copies of them or random blobs,
    and scores from a short list so ties occur.

    Returns ``(preds, gts)`` in the :func:`brute_ap` layout.
    """
    h, w = rnd.randint(2, 6), rnd.randint(2, 6)
    n_img = rnd.choice([1, 1, 2])
    n_gt = rnd.randint(0, max_gts)
    gts = []
    for j in range(n_gt):
        img = rnd.randrange(n_img)
        gts.append((img, [[False] * w for _ in range(h)]))
    # disjoint ground truth: every pixel of each image goes to at most one mask
    for img in range(n_img):
        mine = [g for g in gts if g[0] == img]
        if not mine:
            continue
        for r in range(h):
            for c in range(w):
                k = rnd.randrange(len(mine) + 1)
                if k < len(mine):
                    mine[k][1][r][c] = True
    preds = []
    for n in range(rnd.randint(0, max_preds)):
        if gts and rnd.random() < 0.7:
            img, src = rnd.choice(gts)
            flip = rnd.choice([0.0, 0.1, 0.3])
            bm = [[x != (rnd.random() < flip) for x in row] for row in src]
        else:
            img = rnd.randrange(n_img)
            bm = [[rnd.random() < 0.3 for _ in range(w)] for _ in range(h)]
        score = rnd.choice([0.1, 0.25, 0.5, 0.5, 0.9, 1.0])
        preds.append((score, img, n + 1, bm))
    return preds, gts
