"""Pure-Python search kernels; reference behaviour for the compiled module.

Both kernels work on one PRB.  BS sets are int64 bitmasks.
"""

import numpy as np


def lex_less(a, b):
    """True when selection ``a`` is the lexicographically smaller 0/1 vector.

    Selections are iterables of selected variable indices (``-1`` = none).
    The smaller vector is the one that lacks the first index where they differ.
    """
    sa = {int(v) for v in a if v >= 0}
    sb = {int(v) for v in b if v >= 0}
    diff = sa ^ sb
    if not diff:
        return False
    return min(diff) in sb


def bnb_search(var_bs, var_mask, var_coef, num_bs, exhaustive=False):
    """Maximise the sum of selected coefficients, one variable per BS at most.

    A selected variable mutes every BS in its mask; a muted BS may not
    select.  Returns ``(sel, objective)`` where ``sel[m]`` is the variable
    chosen at BS ``m`` or ``-1``.  The objective is accumulated in BS order.
    Among equal objectives the lexicographically smallest selection vector
    (variables in index order) is returned.
    """
    var_bs = np.asarray(var_bs, dtype=np.int64)
    var_mask = np.asarray(var_mask, dtype=np.int64)
    var_coef = np.asarray(var_coef, dtype=float)
    opts = [[] for _ in range(num_bs)]
    order = sorted(range(len(var_bs)), key=lambda v: (-var_coef[v], v))
    for v in order:
        opts[int(var_bs[v])].append(v)
    best = [max((float(var_coef[v]) for v in o), default=0.0) for o in opts]
    best = [max(b, 0.0) for b in best]
    masks = [int(x) for x in var_mask]
    coefs = [float(x) for x in var_coef]

    sel = [-1] * num_bs
    inc_sel = [-1] * num_bs
    inc_val = -1.0

    def dfs(m, cur, muted, busy):
        nonlocal inc_val, inc_sel
        if m == num_bs:
            if cur > inc_val or (cur == inc_val and lex_less(sel, inc_sel)):
                inc_val = cur
                inc_sel = list(sel)
            return
        if not exhaustive:
            bound = cur
            for k in range(m, num_bs):
                if not muted >> k & 1:
                    bound += best[k]
            if bound < inc_val:
                return
        if muted >> m & 1:
            dfs(m + 1, cur, muted, busy)
            return
        bit = 1 << m
        for v in opts[m]:
            if masks[v] & busy:
                continue
            sel[m] = v
            dfs(m + 1, cur + coefs[v], muted | masks[v], busy | bit)
        sel[m] = -1
        dfs(m + 1, cur, muted, busy)

    dfs(0, 0.0, 0, 0)
    return np.array(inc_sel, dtype=np.int64), inc_val


def column_value(alpha, rates, avg, members, lut, bs_ptr, bs_ues, num_bs):
    """PF objective of a muting column: every unmuted BS serves its best UE."""
    total = 0.0
    mp = members.shape[1]
    for m in range(num_bs):
        if alpha >> m & 1:
            continue
        bestm = 0.0
        for i in range(bs_ptr[m], bs_ptr[m + 1]):
            n = bs_ues[i]
            k = 0
            for b in range(mp):
                if alpha >> int(members[n, b]) & 1:
                    k |= 1 << b
            met = rates[n, lut[n, k]] / avg[n]
            if met > bestm:
                bestm = met
        total += bestm
    return total


def greedy_search(rates, avg, members, lut, bs_ptr, bs_ues, num_bs, cand_masks):
    """Deflation: commit the first strictly best candidate union until none improves.

    Returns ``(muted_mask, trace_masks, trace_values)``; ``trace_values[0]``
    is the no-muting objective and entry ``i + 1`` follows commit ``i``.
    """
    args = (rates, avg, members, lut, bs_ptr, bs_ues, num_bs)
    muted = 0
    cur = column_value(0, *args)
    trace_masks, trace_values = [], [cur]
    while True:
        best_val = cur
        best_trial = -1
        for c in cand_masks:
            trial = muted | int(c)
            if trial == muted:
                continue
            v = column_value(trial, *args)
            if v > best_val:
                best_val = v
                best_trial = trial
        if best_trial < 0:
            break
        muted = best_trial
        cur = best_val
        trace_masks.append(muted)
        trace_values.append(cur)
    return muted, np.array(trace_masks, dtype=np.int64), np.array(trace_values)
