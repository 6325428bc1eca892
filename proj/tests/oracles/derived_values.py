"""Independent derivations of the frozen expected values used by the C++ tests.

Run with `python3 tests/oracles/derived_values.py`. Nothing here imports the
library; every value comes from direct enumeration or closed-form arithmetic.
"""
import itertools
import math


def H(ps):
    return -sum(p * math.log2(p) for p in ps if p > 0)


def brute_force(bins, K, tau):
    N = len(bins)
    best = None
    for inner in itertools.combinations(range(1, N), K - 1):
        d = (0,) + inner + (N,)
        if any(not (1 <= d[k + 1] - d[k] <= tau) for k in range(K)):
            continue
        e = H([sum(bins[d[k]:d[k + 1]]) for k in range(K)])
        if best is None or e > best[0] + 1e-12:
            best = (e, d)
    return best


def histogram(depths, N):
    lo, hi = min(depths), max(depths)
    w = (hi - lo) / N if hi > lo else 1.0
    counts = [0] * N
    for z in depths:
        counts[min(int(math.floor((z - lo) / w)), N - 1)] += 1
    return [c / len(depths) for c in counts]


print("entropy [0.7,0.1,0.1,0.1]      ", round(H([0.7, 0.1, 0.1, 0.1]), 10))
print("edge weight P=0.3              ", round(-0.3 * math.log2(0.3), 10))
print("solve [.7,.1,.1,.1] K=2 tau=3  ", brute_force([0.7, 0.1, 0.1, 0.1], 2, 3))
print("solve uniform N=6 K=3 tau=3    ", brute_force([1 / 6] * 6, 3, 3))
print("histogram 0..15 N=4            ", histogram(list(range(16)), 4))
print("histogram 0..15 N=16 bins      ", [int(math.floor(z / (15 / 16))) for z in range(16)])
counts = [0, 0, 0]
for b in [min(int(math.floor(z / (15 / 16))), 15) for z in range(16)]:
    counts[0 if b < 8 else 1 if b < 12 else 2] += 1
print("levels F={0,8,12,16}           ", counts)
# HE on [0.9, 0.1/3, 0.1/3, 0.1/3], K=2: first level whose preceding mass >= 1/2
cum = [0, 0.9, 0.9 + 0.1 / 3, 0.9 + 0.2 / 3, 1.0]
print("HE d_1                         ", next(i for i, c in enumerate(cum) if c >= 0.5))
# anchor: 1000 depths, one 0 and 999 tens, percentile 0.002
depths = sorted([0.0] + [10.0] * 999)
print("anchor p=0.002                 ", depths[int(math.floor(0.002 * 999))])
# projected-area fraction of a sphere cap cut at depth d from the apex
R, d = 80.0, 60.0
print("masked hemisphere fraction     ", ((R - d) / R) ** 2)
# peak crop box: 7x7 map peak (3,3), input 224, crop 96
c = (3 + 0.5) * 224 / 7
print("crop x0                        ", c - 48)
