"""Compiled Metropolis chain for within-session swap moves.

State: ``grp[s, f]`` is the group of fellow ``f`` in session ``s``; the member
lists, pair co-membership counts and per-group attribute tallies are kept in
sync so each proposal is scored from the two groups it touches.

Weights vector: (repeat, prior_knowledge, homogeneity, hard, reward,
min_interest, reward_interest).
"""

import math

import numpy as np
from numba import njit

W_REPEAT, W_K0, W_DIV, W_HARD, W_REWARD, MIN_INT, REWARD_INT = range(7)


@njit(cache=True)
def _rep(c):
    return c - 1 if c > 1 else 0


@njit(cache=True)
def _interest(f, t, interest, w):
    """(soft energy, hard count) for fellow f in a group with topic t."""
    if t < 0:
        return 0.0, 0
    r = interest[f, t]
    if r == 0:
        return 0.0, 0
    e = 0.0
    h = 0
    if r < w[MIN_INT]:
        h = 1
    if r >= w[REWARD_INT]:
        e -= w[W_REWARD]
    return e, h


@njit(cache=True)
def _build(grp, gsize, n_attr, n_vals, attrs):
    S, nf = grp.shape
    G = gsize.shape[1]
    cap = 1
    for s in range(S):
        for g in range(G):
            cap = max(cap, gsize[s, g])
    members = -np.ones((S, G, cap), dtype=np.int64)
    pos = np.zeros((S, nf), dtype=np.int64)
    fill = np.zeros((S, G), dtype=np.int64)
    cnt = np.zeros((nf, nf), dtype=np.int64)
    acnt = np.zeros((S, G, max(n_attr, 1), max(n_vals, 1)), dtype=np.int64)
    for s in range(S):
        for f in range(nf):
            g = grp[s, f]
            members[s, g, fill[s, g]] = f
            pos[s, f] = fill[s, g]
            fill[s, g] += 1
            for a in range(n_attr):
                v = attrs[f, a]
                if v >= 0:
                    acnt[s, g, a, v] += 1
        for g in range(G):
            for i in range(fill[s, g]):
                for j in range(i + 1, fill[s, g]):
                    x, y = members[s, g, i], members[s, g, j]
                    cnt[x, y] += 1
                    cnt[y, x] += 1
    return members, pos, fill, cnt, acnt


@njit(cache=True)
def _energy(grp, fill, members, cnt, acnt, topics, k0pos, interest, use_k0, w):
    """(energy used by the chain, hard-violation count)."""
    S, nf = grp.shape
    e = 0.0
    hard = 0
    for x in range(nf):
        for y in range(x + 1, nf):
            e += w[W_REPEAT] * _rep(cnt[x, y])
    for s in range(S):
        for g in range(fill.shape[1]):
            n = fill[s, g]
            if use_k0:
                for i in range(n):
                    for j in range(i + 1, n):
                        if k0pos[members[s, g, i], members[s, g, j]]:
                            e += w[W_K0]
            for a in range(acnt.shape[2]):
                for v in range(acnt.shape[3]):
                    c = acnt[s, g, a, v]
                    e += w[W_DIV] * c * (c - 1) / 2
        for f in range(nf):
            de, dh = _interest(f, topics[s, grp[s, f]], interest, w)
            e += de
            hard += dh
    return e + w[W_HARD] * hard, hard


@njit(cache=True)
def _delta(s, x, y, grp, fill, members, cnt, acnt, attrs, topics, k0pos, interest, use_k0, w):
    A = grp[s, x]
    B = grp[s, y]
    d = 0.0
    for i in range(fill[s, A]):
        m = members[s, A, i]
        if m == x:
            continue
        c = cnt[x, m]
        d += w[W_REPEAT] * (_rep(c - 1) - _rep(c))
        c = cnt[y, m]
        d += w[W_REPEAT] * (_rep(c + 1) - _rep(c))
        if use_k0:
            d += w[W_K0] * (int(k0pos[y, m]) - int(k0pos[x, m]))
    for i in range(fill[s, B]):
        m = members[s, B, i]
        if m == y:
            continue
        c = cnt[y, m]
        d += w[W_REPEAT] * (_rep(c - 1) - _rep(c))
        c = cnt[x, m]
        d += w[W_REPEAT] * (_rep(c + 1) - _rep(c))
        if use_k0:
            d += w[W_K0] * (int(k0pos[x, m]) - int(k0pos[y, m]))
    for a in range(attrs.shape[1]):
        vx = attrs[x, a]
        vy = attrs[y, a]
        if vx == vy:
            continue
        if vx >= 0:
            d += w[W_DIV] * (-(acnt[s, A, a, vx] - 1) + acnt[s, B, a, vx])
        if vy >= 0:
            d += w[W_DIV] * (acnt[s, A, a, vy] - (acnt[s, B, a, vy] - 1))
    tA = topics[s, A]
    tB = topics[s, B]
    e1, h1 = _interest(x, tB, interest, w)
    e2, h2 = _interest(x, tA, interest, w)
    e3, h3 = _interest(y, tA, interest, w)
    e4, h4 = _interest(y, tB, interest, w)
    dh = h1 - h2 + h3 - h4
    d += e1 - e2 + e3 - e4 + w[W_HARD] * dh
    return d, dh


@njit(cache=True)
def _apply(s, x, y, grp, fill, members, pos, cnt, acnt, attrs):
    A = grp[s, x]
    B = grp[s, y]
    for i in range(fill[s, A]):
        m = members[s, A, i]
        if m != x:
            cnt[x, m] -= 1
            cnt[m, x] -= 1
            cnt[y, m] += 1
            cnt[m, y] += 1
    for i in range(fill[s, B]):
        m = members[s, B, i]
        if m != y:
            cnt[y, m] -= 1
            cnt[m, y] -= 1
            cnt[x, m] += 1
            cnt[m, x] += 1
    for a in range(attrs.shape[1]):
        vx = attrs[x, a]
        vy = attrs[y, a]
        if vx >= 0:
            acnt[s, A, a, vx] -= 1
            acnt[s, B, a, vx] += 1
        if vy >= 0:
            acnt[s, B, a, vy] -= 1
            acnt[s, A, a, vy] += 1
    px = pos[s, x]
    py = pos[s, y]
    members[s, A, px] = y
    members[s, B, py] = x
    pos[s, x] = py
    pos[s, y] = px
    grp[s, x] = B
    grp[s, y] = A


@njit(cache=True)
def run_chain(grp, gsize, topics, k0pos, attrs, n_vals, interest, use_k0, w,
              T0, cooling, n_sweeps, moves_per_sweep, seed, n_probe):
    """Anneal ``grp`` in place; returns (best feasible grp, its energy, found, T0 used)."""
    np.random.seed(seed)
    S, nf = grp.shape
    members, pos, fill, cnt, acnt = _build(grp, gsize, attrs.shape[1], n_vals, attrs)
    E, H = _energy(grp, fill, members, cnt, acnt, topics, k0pos, interest, use_k0, w)

    if T0 <= 0.0:
        # aim for ~80% initial acceptance of uphill probe moves
        tot = 0.0
        k = 0
        for _ in range(n_probe):
            s = np.random.randint(S)
            x = np.random.randint(nf)
            y = np.random.randint(nf)
            if grp[s, x] == grp[s, y]:
                continue
            d, dh = _delta(s, x, y, grp, fill, members, cnt, acnt, attrs, topics, k0pos, interest, use_k0, w)
            if d > 0:
                tot += d
                k += 1
        T0 = (tot / k) / -math.log(0.8) if k > 0 else 1.0

    best = grp.copy()
    bestE = E
    found = H == 0
    if not found:
        bestE = math.inf
    T = T0
    for _ in range(n_sweeps):
        for _ in range(moves_per_sweep):
            s = np.random.randint(S)
            x = np.random.randint(nf)
            y = np.random.randint(nf)
            if grp[s, x] == grp[s, y]:
                continue
            d, dh = _delta(s, x, y, grp, fill, members, cnt, acnt, attrs, topics, k0pos, interest, use_k0, w)
            if d <= 0.0 or np.random.random() < math.exp(-d / T):
                _apply(s, x, y, grp, fill, members, pos, cnt, acnt, attrs)
                E += d
                H += dh
                if H == 0 and E < bestE - 1e-9:
                    bestE = E
                    best[:, :] = grp
                    found = True
        T *= cooling
    return best, bestE, found, T0
