"""Pure-Python kernel implementations.

These are the reference semantics for the compiled module: the Cython
twin mirrors the arithmetic operation-for-operation so both backends
produce bit-identical results.  Any change here must be replicated in
_speedups.pyx.
"""

from math import log2


def pegasos_epoch(X, y, order, lam, w, wsum, b, bsum, t):
    """One epoch of subgradient updates over a fixed visiting order.

    Mutates w and wsum in place; returns the updated (b, bsum, t).
    Step size is 1/(lam*t) with t the global update counter; wsum/bsum
    accumulate post-update iterates for averaging.
    """
    X_rows = X.tolist()
    y_list = y.tolist()
    w_list = w.tolist()
    wsum_list = wsum.tolist()
    d = len(w_list)
    for i in order.tolist():
        row = X_rows[i]
        t += 1
        eta = 1.0 / (lam * t)
        dot = 0.0
        for j in range(d):
            dot += w_list[j] * row[j]
        yi = y_list[i]
        margin = yi * (dot + b)
        scale = 1.0 - eta * lam
        for j in range(d):
            w_list[j] = w_list[j] * scale
        if margin < 1.0:
            for j in range(d):
                w_list[j] = w_list[j] + eta * yi * row[j]
            b = b + eta * yi
        for j in range(d):
            wsum_list[j] = wsum_list[j] + w_list[j]
        bsum = bsum + b
    w[:] = w_list
    wsum[:] = wsum_list
    return b, bsum, t


def hinge_objective(X, y, w, b, lam):
    """L2-regularized mean hinge loss: lam/2*|w|^2 + mean(max(0, 1-y*f))."""
    X_rows = X.tolist()
    y_list = y.tolist()
    w_list = w.tolist()
    d = len(w_list)
    reg = 0.0
    for j in range(d):
        reg += w_list[j] * w_list[j]
    reg = 0.5 * lam * reg
    total = 0.0
    n = len(X_rows)
    for i in range(n):
        row = X_rows[i]
        dot = 0.0
        for j in range(d):
            dot += w_list[j] * row[j]
        h = 1.0 - y_list[i] * (dot + b)
        if h > 0.0:
            total += h
    return reg + total / n


def _h2(a, b):
    # binary entropy in bits from two counts; empty sides contribute 0
    if a <= 0.0 or b <= 0.0:
        return 0.0
    t = a + b
    pa = a / t
    pb = b / t
    return -(pa * log2(pa) + pb * log2(pb))


def entropy_losses(presence, labels, out):
    """Expected entropy loss per feature column, written into out.

    presence is an (n, k) 0/1 matrix, labels an (n,) 0/1 vector.  Loss
    for a feature is prior class entropy minus the presence-weighted
    conditional entropies.
    """
    rows = presence.tolist()
    lab = labels.tolist()
    n = len(lab)
    k = len(out)
    pos = 0
    for i in range(n):
        if lab[i]:
            pos += 1
    neg = n - pos
    prior = _h2(float(pos), float(neg))
    for j in range(k):
        pp = 0
        pn = 0
        for i in range(n):
            if rows[i][j]:
                if lab[i]:
                    pp += 1
                else:
                    pn += 1
        present = pp + pn
        absent = n - present
        wp = float(present) / float(n)
        wn = float(absent) / float(n)
        hp = _h2(float(pp), float(pn))
        hn = _h2(float(pos - pp), float(neg - pn))
        out[j] = prior - (wp * hp + wn * hn)
