"""Word-parallel kernels over chains packed into uint64 words.

Site ``i`` of a chain lives in bit ``i & 63`` of word ``i >> 6``. Bits at
positions ``>= n`` in the last word are kept at zero, which doubles as the
fixed resting boundary: shifting a word array pulls in zeros at both ends.
"""

import numpy as np
from numba import njit

_ONE = np.uint64(1)
_S1 = np.uint64(1)
_S63 = np.uint64(63)
_ZERO = np.uint64(0)


def n_words(n):
    return (n + 63) >> 6


def top_mask(n):
    r = n & 63
    return np.uint64((1 << r) - 1) if r else np.uint64(0xFFFFFFFFFFFFFFFF)


def pack(bits):
    """Pack a (..., n) array of 0/1 into (..., n_words(n)) uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    nb = n_words(n) * 64
    padded = np.zeros(bits.shape[:-1] + (nb,), dtype=np.uint8)
    padded[..., :n] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack(words, n):
    """Inverse of :func:`pack`."""
    words = np.ascontiguousarray(np.asarray(words, dtype="<u8"))
    raw = words.view(np.uint8)
    return np.unpackbits(raw, axis=-1, bitorder="little")[..., :n]


@njit(cache=True, inline="always")
def _popcount(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (v * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True, inline="always")
def _ctz(v):
    # v != 0
    return _popcount((v & (~v + _ONE)) - _ONE)


@njit(cache=True, inline="always")
def _bit_length(v):
    n = 0
    while v:
        v >>= _S1
        n += 1
    return n


@njit(cache=True, inline="always")
def _apply(s, a, b, c, d, m0, m1):
    # bit-sliced sum a+b+c+d -> (b2 b1 b0), then select by sigma
    s1 = a ^ b
    c1 = a & b
    s2 = c ^ d
    c2 = c & d
    b0 = s1 ^ s2
    k = s1 & s2
    b1 = c1 ^ c2 ^ k
    b2 = (c1 & c2) | (k & (c1 | c2))
    nb0 = ~b0
    nb1 = ~b1
    nb2 = ~b2
    eq0 = nb0 & nb1 & nb2
    eq1 = b0 & nb1 & nb2
    eq2 = nb0 & b1 & nb2
    eq3 = b0 & b1 & nb2
    eq4 = b2
    sel0 = _ZERO
    sel1 = _ZERO
    if m0 & 16:
        sel0 |= eq0
    if m0 & 8:
        sel0 |= eq1
    if m0 & 4:
        sel0 |= eq2
    if m0 & 2:
        sel0 |= eq3
    if m0 & 1:
        sel0 |= eq4
    if m1 & 16:
        sel1 |= eq0
    if m1 & 8:
        sel1 |= eq1
    if m1 & 4:
        sel1 |= eq2
    if m1 & 2:
        sel1 |= eq3
    if m1 & 1:
        sel1 |= eq4
    return (~s & sel0) | (s & sel1)


@njit(cache=True)
def step_words(x, y, nx, ny, code0, code1, tmask):
    """One synchronous update; writes the new chains into ``nx``/``ny``."""
    W = x.shape[0]
    for w in range(W):
        xw = x[w]
        yw = y[w]
        x_lo = x[w - 1] >> _S63 if w > 0 else _ZERO
        y_lo = y[w - 1] >> _S63 if w > 0 else _ZERO
        x_hi = x[w + 1] << _S63 if w + 1 < W else _ZERO
        y_hi = y[w + 1] << _S63 if w + 1 < W else _ZERO
        x_prev = (xw << _S1) | x_lo  # x[i-1]
        x_next = (xw >> _S1) | x_hi  # x[i+1]
        y_prev = (yw << _S1) | y_lo  # y[i-1]
        y_next = (yw >> _S1) | y_hi  # y[i+1]
        nx[w] = _apply(xw, x_prev, x_next, yw, y_prev, code0, code1)
        ny[w] = _apply(yw, y_prev, y_next, xw, x_next, code0, code1)
    nx[W - 1] &= tmask
    ny[W - 1] &= tmask


@njit(cache=True)
def run_words(x0, y0, code0, code1, tau, tmask):
    """Evolve ``tau`` steps; returns (tau+1, W) word histories for x and y."""
    W = x0.shape[0]
    hx = np.zeros((tau + 1, W), dtype=np.uint64)
    hy = np.zeros((tau + 1, W), dtype=np.uint64)
    hx[0, :] = x0
    hy[0, :] = y0
    for t in range(tau):
        step_words(hx[t], hy[t], hx[t + 1], hy[t + 1], code0, code1, tmask)
    return hx, hy


@njit(cache=True, inline="always")
def _count(a):
    c = 0
    for w in range(a.shape[0]):
        c += _popcount(a[w])
    return c


@njit(cache=True)
def _lowest(a):
    for w in range(a.shape[0]):
        if a[w]:
            return w * 64 + _ctz(a[w])
    return -1


@njit(cache=True)
def _highest(a):
    for w in range(a.shape[0] - 1, -1, -1):
        if a[w]:
            return w * 64 + _bit_length(a[w]) - 1
    return -1


@njit(cache=True)
def _shift_into(src, d, dst):
    """dst[i] = src[i - d] bitwise (zeros shifted in, overflow dropped)."""
    W = src.shape[0]
    q = d // 64 if d >= 0 else -((-d + 63) // 64)
    r = d - q * 64
    for w in range(W):
        v = _ZERO
        s = w - q
        if 0 <= s < W:
            v = src[s] << np.uint64(r) if r else src[s]
        if r and 0 <= s - 1 < W:
            v |= src[s - 1] >> np.uint64(64 - r)
        dst[w] = v


@njit(cache=True)
def _shift_equal(ax, ay, bx, by, d, tmp):
    """True when (bx, by) equals (ax, ay) shifted right by d sites."""
    _shift_into(ax, d, tmp)
    for w in range(tmp.shape[0]):
        if tmp[w] != bx[w]:
            return False
    _shift_into(ay, d, tmp)
    for w in range(tmp.shape[0]):
        if tmp[w] != by[w]:
            return False
    return True


KIND_NONE = 0
KIND_STATIONARY = 1
KIND_TRAVELLING = 2


@njit(cache=True)
def _periodicity(hx, hy, t0, tau, p_max, tmp, both):
    """Smallest (period, drift) with config(t+p) == config(t) moved by drift
    for all t0 <= t <= tau - p; (-1, 0) when there is none."""
    H = hx.shape[0]
    W = hx.shape[1]
    for p in range(1, min(p_max, tau - t0) + 1):
        a = t0 % H
        b = (t0 + p) % H
        for w in range(W):
            both[w] = hx[a, w] | hy[a, w]
        la = _lowest(both)
        for w in range(W):
            both[w] = hx[b, w] | hy[b, w]
        lb = _lowest(both)
        if la < 0 or lb < 0:
            continue
        d = lb - la
        if d > p or -d > p:
            continue
        ok = True
        for t in range(t0, tau - p + 1):
            if not _shift_equal(hx[t % H], hy[t % H], hx[(t + p) % H], hy[(t + p) % H], d, tmp):
                ok = False
                break
        if ok:
            return p, d
    return -1, 0


@njit(cache=True)
def classify_seeds(code0, code1, n, tau, start, sx, sy, act_lo, act_hi,
                   w_s, w_t, c_max, p_max, window, require_persist, allow_absorbed):
    """Run every seed in (sx, sy) and classify the outcome.

    Returns a (S, 9) int64 table with columns kind, total activity, span,
    persisted, period (-1 if none), drift, peak per-step count, last excited
    step, and whether excitation ever reached a chain end.
    """
    S = sx.shape[0]
    W = (n + 63) >> 6
    r = n & 63
    tmask = (_ONE << np.uint64(r)) - _ONE if r else ~_ZERO
    window = min(window, tau)
    H = window + 1
    out = np.zeros((S, 9), dtype=np.int64)
    quiet = (code0 & 16) == 0  # a resting lattice stays resting

    hx = np.zeros((H, W), dtype=np.uint64)
    hy = np.zeros((H, W), dtype=np.uint64)
    union = np.zeros(W, dtype=np.uint64)
    both = np.zeros(W, dtype=np.uint64)
    tmp = np.zeros(W, dtype=np.uint64)
    x = np.zeros(W, dtype=np.uint64)
    y = np.zeros(W, dtype=np.uint64)
    nx = np.zeros(W, dtype=np.uint64)
    ny = np.zeros(W, dtype=np.uint64)

    for s in range(S):
        x[:] = _ZERO
        y[:] = _ZERO
        union[:] = _ZERO
        for j in range(5):
            pos = start + j
            bit = _ONE << np.uint64(pos & 63)
            if (sx[s] >> (4 - j)) & 1:
                x[pos >> 6] |= bit
            if (sy[s] >> (4 - j)) & 1:
                y[pos >> 6] |= bit

        acc = 0
        peak = 0
        last = -1
        flooded = False
        gap = False
        for t in range(tau + 1):
            c = _count(x) + _count(y)
            if c == 0:
                gap = True
                if quiet:
                    break
            else:
                last = t
            acc += c
            if c > peak:
                peak = c
            if acc > act_hi:
                flooded = True
                break
            for w in range(W):
                union[w] |= x[w] | y[w]
            slot = t % H
            hx[slot, :] = x
            hy[slot, :] = y
            if t < tau:
                step_words(x, y, nx, ny, code0, code1, tmask)
                x, nx = nx, x
                y, ny = ny, y

        lo = _lowest(union)
        hi = _highest(union)
        span = 0 if lo < 0 else hi - lo + 1
        touched = lo == 0 or hi == n - 1
        alive = last == tau and not flooded and not gap
        row = out[s]
        row[1] = acc
        row[2] = span
        row[3] = 1 if alive else 0
        row[4] = -1
        row[6] = peak
        row[7] = last
        row[8] = 1 if touched else 0

        if flooded or acc < act_lo:
            continue
        if not alive:
            if allow_absorbed and touched and span > w_t and peak <= c_max:
                row[0] = KIND_TRAVELLING
            elif not require_persist and span <= w_s:
                row[0] = KIND_STATIONARY
            elif not require_persist and span > w_t and peak <= c_max:
                row[0] = KIND_TRAVELLING
            continue

        if span <= w_s:
            row[0] = KIND_STATIONARY
            continue
        if span > w_t and peak <= c_max:
            row[0] = KIND_TRAVELLING
            continue
        p, d = _periodicity(hx, hy, tau - window, tau, p_max, tmp, both)
        if p > 0:
            row[4] = p
            row[5] = d
            row[0] = KIND_STATIONARY if d == 0 else KIND_TRAVELLING
    return out
