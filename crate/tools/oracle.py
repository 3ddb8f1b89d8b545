#!/usr/bin/env python3
"""Reference constants for the Rust test suite, computed with mpmath.

Every pinned numeric literal in the Rust tests that is not trivially
hand-checkable comes from this script. Run it and diff the output against
the constants frozen in the tests when touching the quantizer or bounds
math. Precision is 50 decimal digits so the printed 17-digit values are
exact at f64 resolution.
"""

import mpmath as mp

mp.mp.dps = 50


def phi(t):
    """t*ln(t) + (1-t)*ln(1-t) with the 0*ln(0) = 0 convention."""
    t = mp.mpf(t)
    acc = mp.mpf(0)
    if t > 0:
        acc += t * mp.log(t)
    if t < 1:
        acc += (1 - t) * mp.log(1 - t)
    return acc


def log_spacing_ratio(p, delta):
    """log of the likelihood-ratio spacing function f(p; delta)."""
    p, delta = mp.mpf(p), mp.mpf(delta)
    return (phi(p) - phi(p + delta)) / delta


def spacing_ratio(p, delta):
    return mp.exp(log_spacing_ratio(p, delta))


def nn_threshold(p, delta):
    """Bernoulli-domain nearest-neighbor threshold 1 / (1 + f(p; delta))."""
    return 1 / (1 + spacing_ratio(p, delta))


def build_quantizer(k, x_inf=-1, x_sup=1):
    """Boundary tables: returns (delta, P[0..k-1], S[0..k], t[1..k-1]).

    P_j = arccos(x_inf)/pi - j*delta, uniformly spaced in the Bernoulli
    domain. S_0 = x_inf, S_k = x_sup, and interior S_j = cos(pi * t_j)
    where t_j is the nearest-neighbor threshold at P_j.
    """
    x_inf, x_sup = mp.mpf(x_inf), mp.mpf(x_sup)
    p_hi = mp.acos(x_inf) / mp.pi
    p_lo = mp.acos(x_sup) / mp.pi
    delta = (p_hi - p_lo) / (k - 1)
    P = [p_hi - j * delta for j in range(k)]
    t = [nn_threshold(P[j], delta) for j in range(1, k)]
    S = [x_inf] + [mp.cos(mp.pi * tj) for tj in t] + [x_sup]
    return delta, P, S, t


def kl(p, q):
    """Bernoulli KL divergence D(p || q), natural log, extended reals."""
    p, q = mp.mpf(p), mp.mpf(q)
    acc = mp.mpf(0)
    if p > 0:
        if q == 0:
            return mp.inf
        acc += p * mp.log(p / q)
    if p < 1:
        if q == 1:
            return mp.inf
        acc += (1 - p) * mp.log((1 - p) / (1 - q))
    return acc


def p17(label, value):
    print(f"{label} = {mp.nstr(mp.mpf(value), 17, strip_zeros=False)}")


print("== spacing ratio f ==")
p17("f(0.4, 0.1)", spacing_ratio(mp.mpf(2) / 5, mp.mpf(1) / 10))
p17("log f(0.4, 0.1)", log_spacing_ratio(mp.mpf(2) / 5, mp.mpf(1) / 10))
p17("f(0.0, 0.5)", spacing_ratio(0, mp.mpf(1) / 2))
p17("f(0.5, 0.5)", spacing_ratio(mp.mpf(1) / 2, mp.mpf(1) / 2))
p17("f(0.0, 1.0)", spacing_ratio(0, 1))

print()
print("== k = 3 boundaries on [-1, 1] ==")
_, P3, S3, t3 = build_quantizer(3)
for j, v in enumerate(S3):
    p17(f"S[{j}]", v)
p17("-cos(pi/5)", -mp.cos(mp.pi / 5))

print()
print("== k = 8 boundaries on [-1, 1] ==")
d8, P8, S8, t8 = build_quantizer(8)
p17("delta", d8)
for j, v in enumerate(P8):
    p17(f"P[{j}]", v)
for j, v in enumerate(S8):
    p17(f"S[{j}]", v)
for j, v in enumerate(t8, start=1):
    p17(f"t[{j}]", v)

print()
print("== k = 4 boundaries on [-0.9, 0.8] (regression pin) ==")
d4, P4, S4, t4 = build_quantizer(4, mp.mpf(-9) / 10, mp.mpf(4) / 5)
p17("delta", d4)
for j, v in enumerate(P4):
    p17(f"P[{j}]", v)
for j, v in enumerate(S4):
    p17(f"S[{j}]", v)

print()
print("== k = 50 interior width spread on [-1, 1] ==")
_, _, S50, _ = build_quantizer(50)
widths = [S50[j + 1] - S50[j] for j in range(1, 49)]
p17("max interior width", max(widths))
p17("min interior width", min(widths))
p17("max/min ratio", max(widths) / min(widths))

print()
print("== KL values ==")
p17("KL(0.5 || 0.25)", kl(mp.mpf(1) / 2, mp.mpf(1) / 4))
p17("0.5*ln(4/3)", mp.log(mp.mpf(4) / 3) / 2)

print()
print("== sign-consistency bound g and tail ==")
p17("g(1, 1)", mp.mpf(1) / (2 * mp.sqrt(2)))
p17("g(0.1, 1)", mp.mpf("0.1") / (2 * mp.sqrt(1 + mp.mpf("0.01"))))
p17("g(0.5, 1)", mp.mpf("0.5") / (2 * mp.sqrt(1 + mp.mpf("0.25"))))
p17("tail(gamma=0.1, m=500)", mp.exp(-2 * 500 * mp.mpf("0.01")))

print()
print("== per-dimension measurement counts ==")
# ceil(ln(1/(2*eta)) / (2*delta_sq)) for the single-coordinate form.
v = mp.log(1 / (2 * mp.mpf("0.05"))) / (2 * mp.mpf("0.01"))
p17("count(delta_sq=0.01, eta=0.05) raw", v)
print("ceil =", int(mp.ceil(v)))

print()
print("== sparse-embedding measurement count ==")
K, n, eps, mu = 10, 1000, mp.mpf("0.1"), mp.mpf("0.05")
raw = (4 / eps**2) * (K * mp.log(n) + 2 * K * mp.log(50 / eps) + mp.log(2 / mu))
p17("count(K=10, n=1000, eps=0.1, mu=0.05) raw", raw)
print("ceil =", int(mp.ceil(raw)))

print()
print("== wrong-interval tail bounds, k = 8 on [-1, 1] ==")
# For each interval q (1-based), midpoint x, the two adjacent-candidate
# bounds 0.5*exp(-2*m*margin^2) where the margin is the Bernoulli-domain
# distance from arccos(x)/pi to the nearest-neighbor threshold between
# interval q and the adjacent candidate.
for m in (2000, 50000):
    print(f"-- m = {m}")
    for q in range(1, 9):
        lo, hi = S8[q - 1], S8[q]
        mid = (lo + hi) / 2
        p = mp.acos(mid) / mp.pi
        total = mp.mpf(0)
        parts = []
        # candidates below the true interval use threshold t_{q-1},
        # candidates above use t_q (1-based threshold index into t8).
        if q >= 2:
            margin = t8[q - 2] - p  # t_{q-1}
            parts.append(("below", mp.mpf(0.5) * mp.exp(-2 * m * margin**2)))
        if q <= 7:
            margin = p - t8[q - 1]  # t_q
            parts.append(("above", mp.mpf(0.5) * mp.exp(-2 * m * margin**2)))
        total = sum(b for _, b in parts)
        desc = " ".join(f"{side}={mp.nstr(b, 6)}" for side, b in parts)
        print(f"q={q} mid={mp.nstr(mid, 8)} total={mp.nstr(total, 8)} ({desc})")

print()
print("== per-coordinate counts at k = 8 midpoints, eta = 0.1 ==")
for q in range(1, 9):
    lo, hi = S8[q - 1], S8[q]
    mid = (lo + hi) / 2
    p = mp.acos(mid) / mp.pi
    margins = []
    if q >= 2:
        margins.append(t8[q - 2] - p)
    if q <= 7:
        margins.append(p - t8[q - 1])
    delta_sq = min(mg**2 for mg in margins)
    raw = mp.log(1 / (2 * mp.mpf("0.1"))) / (2 * delta_sq)
    print(f"q={q} delta_sq={mp.nstr(delta_sq, 8)} raw={mp.nstr(raw, 10)} m={int(mp.ceil(raw))}")

print()
print("== per-candidate wrong-interval bounds, k = 8, true q = 3 midpoint, m = 2000 ==")
q = 3
mid = (S8[q - 1] + S8[q]) / 2
p = mp.acos(mid) / mp.pi
p17("midpoint", mid)
p17("rate p", p)
for cand in range(1, 9):
    if cand == q:
        continue
    if cand < q:
        margin = t8[cand - 1] - p  # threshold t_{q*}
    else:
        margin = p - t8[cand - 2]  # threshold t_{q*-1}
    bound = mp.mpf(1) / 2 * mp.exp(-2 * 2000 * margin**2)
    print(
        f"cand={cand} margin={mp.nstr(margin, 17, strip_zeros=False)} "
        f"bound={mp.nstr(bound, 17, strip_zeros=False)}"
    )

print()
print("== whole-signal count, n = 4, eta = 0.1 ==")
# Unit-norm signal: coordinates at the k = 8 midpoints of intervals 2 and
# 4, plus two equal positive pads soaking up the leftover energy.
mid2 = (S8[1] + S8[2]) / 2
mid4 = (S8[3] + S8[4]) / 2
pad = mp.sqrt((1 - mid2**2 - mid4**2) / 2)
p17("mid2", mid2)
p17("mid4", mid4)
p17("pad", pad)
delta_sqs = []
for x in (mid2, mid4, pad, pad):
    p = mp.acos(x) / mp.pi
    # locate the interval: count S boundaries <= x (half-open intervals)
    q = sum(1 for b in S8[1:-1] if b <= x) + 1
    margins = []
    if q >= 2:
        margins.append(t8[q - 2] - p)
    if q <= 7:
        margins.append(p - t8[q - 1])
    delta_sqs.append(min(mg**2 for mg in margins))
    print(f"x={mp.nstr(x, 8)} q={q} delta_sq={mp.nstr(delta_sqs[-1], 8)}")
raw = mp.log(4 / (2 * mp.mpf("0.1"))) / (2 * min(delta_sqs))
p17("raw", raw)
print("ceil =", int(mp.ceil(raw)))
