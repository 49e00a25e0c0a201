"""Hot numeric kernels, compiled with numba when available.

Two kernel families live here: Jordan-Wigner term application over whole
Fock bases (the inner loop of sparse-matrix assembly) and the RK4
integrator for the three-coupling RG flow.  Every kernel has a pure-numpy
implementation with identical semantics; the active backend is picked at
import time.  Set the environment variable ``MAJORANA_LADDER_NUMBA=0`` to
force the numpy fallback (useful for debugging and as a portability
escape hatch).  ``benchmarks/bench_kernels.py`` times the two backends
against each other.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("MAJORANA_LADDER_NUMBA", "1") != "0"

_U1 = np.uint64(1)

# RG flow outcome codes shared with rgflow.py
RG_GAPLESS = 0
RG_PAIR = 1
RG_BACKSCATTER = 2


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Jordan-Wigner term application
#
# States are uint64 bitsets; bit m set means mode m occupied.  A reference
# state is the ascending product of creation operators, so applying c_m or
# c^dag_m picks up (-1)^(number of occupied modes strictly below m).
# Factors are applied right to left.
# ---------------------------------------------------------------------------


def _term_action_numpy(states, modes, creates):
    cur = states.copy()
    ok = np.ones(states.shape[0], dtype=bool)
    par = np.zeros(states.shape[0], dtype=np.uint8)
    for f in range(modes.shape[0] - 1, -1, -1):
        m = int(modes[f])
        bit = np.uint64(1 << m)
        below = np.uint64((1 << m) - 1)
        occ = (cur & bit) != 0
        if creates[f]:
            ok &= ~occ
        else:
            ok &= occ
        par ^= (np.bitwise_count(cur & below) & 1).astype(np.uint8)
        cur ^= bit
    sign = np.where(par & 1, -1.0, 1.0)
    return ok, cur, sign


if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _popcount_u64(v):
        v = v - ((v >> _U1) & np.uint64(0x5555555555555555))
        v = (v & np.uint64(0x3333333333333333)) + (
            (v >> np.uint64(2)) & np.uint64(0x3333333333333333)
        )
        v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return (v * np.uint64(0x0101010101010101)) >> np.uint64(56)

    @njit(cache=True)
    def _term_action_numba_impl(states, modes, creates, ok, out, sign):
        nf = modes.shape[0]
        for i in range(states.shape[0]):
            cur = states[i]
            par = np.uint64(0)
            alive = True
            for f in range(nf - 1, -1, -1):
                m = np.uint64(modes[f])
                bit = _U1 << m
                occ = (cur & bit) != np.uint64(0)
                if creates[f]:
                    if occ:
                        alive = False
                        break
                else:
                    if not occ:
                        alive = False
                        break
                par ^= _popcount_u64(cur & (bit - _U1)) & _U1
                cur = cur ^ bit
            ok[i] = alive
            out[i] = cur
            sign[i] = -1.0 if par == _U1 else 1.0

    def _term_action_numba(states, modes, creates):
        n = states.shape[0]
        ok = np.empty(n, dtype=np.bool_)
        out = np.empty(n, dtype=np.uint64)
        sign = np.empty(n, dtype=np.float64)
        _term_action_numba_impl(states, modes, creates, ok, out, sign)
        return ok, out, sign

else:  # pragma: no cover
    _term_action_numba = None


def term_action(states, modes, creates):
    """Apply one fermionic operator string to every state in ``states``.

    Returns ``(ok, out, sign)``: a survival mask, the image bitsets and
    the accumulated JW signs.  Entries with ``ok == False`` were killed by
    a Pauli violation and carry garbage in ``out``/``sign``.
    """
    modes = np.asarray(modes, dtype=np.int64)
    creates = np.asarray(creates, dtype=np.uint8)
    if USE_NUMBA:
        return _term_action_numba(states, modes, creates)
    return _term_action_numpy(states, modes, creates)


# ---------------------------------------------------------------------------
# RG flow integration
#
# dy-/dl = 2 (yp^2 - ybs^2);  dyp/dl = y- yp;  dybs/dl = -y- ybs.
# Fixed-step RK4 with a jump guard: a step is rejected and dl halved
# whenever any |y| moves by more than jump_limit in one step.  Integration
# stops when |yp| or |ybs| crosses `threshold` (gapped) or l reaches
# `l_max` (gapless).  Exact fixed points (zero RHS) exit immediately.
# ---------------------------------------------------------------------------


def _rg_rhs_numpy(y):
    out = np.empty_like(y)
    out[:, 0] = 2.0 * (y[:, 1] * y[:, 1] - y[:, 2] * y[:, 2])
    out[:, 1] = y[:, 0] * y[:, 1]
    out[:, 2] = -y[:, 0] * y[:, 2]
    return out


def _rg_integrate_numpy(y0, dl0, threshold, l_max, jump_limit, trace_stride, max_trace):
    n = y0.shape[0]
    y = np.array(y0, dtype=np.float64, copy=True)
    dl = np.full(n, dl0)
    l = np.zeros(n)
    outcome = np.zeros(n, dtype=np.int8)
    l_star = np.full(n, np.nan)
    steps = np.zeros(n, dtype=np.int64)

    do_trace = trace_stride > 0
    if do_trace:
        trace = np.zeros((n, max_trace, 4))
        trace_len = np.zeros(n, dtype=np.int64)
        for i in range(n):
            trace[i, 0, 1:] = y[i]
            trace_len[i] = 1
    else:
        trace = np.zeros((n, 1, 4))
        trace_len = np.zeros(n, dtype=np.int64)

    active = np.ones(n, dtype=bool)
    # exact fixed points are gapless by inspection
    rhs0 = _rg_rhs_numpy(y)
    fixed = np.all(rhs0 == 0.0, axis=1)
    active &= ~fixed

    dl_min = dl0 * 2.0**-40
    while active.any():
        idx = np.flatnonzero(active)
        ya = y[idx]
        dla = dl[idx]
        k1 = _rg_rhs_numpy(ya)
        k2 = _rg_rhs_numpy(ya + 0.5 * dla[:, None] * k1)
        k3 = _rg_rhs_numpy(ya + 0.5 * dla[:, None] * k2)
        k4 = _rg_rhs_numpy(ya + dla[:, None] * k3)
        ynew = ya + (dla / 6.0)[:, None] * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        jump = np.max(np.abs(ynew - ya), axis=1)
        reject = (jump > jump_limit) & (dla > dl_min)
        dl[idx[reject]] *= 0.5
        acc = ~reject
        ia = idx[acc]
        y[ia] = ynew[acc]
        l[ia] += dla[acc]
        steps[ia] += 1
        if do_trace:
            for i in ia:
                if steps[i] % trace_stride == 0 and trace_len[i] < max_trace:
                    k = trace_len[i]
                    trace[i, k, 0] = l[i]
                    trace[i, k, 1:] = y[i]
                    trace_len[i] = k + 1
        crossed_p = np.abs(y[ia, 1]) >= threshold
        crossed_b = np.abs(y[ia, 2]) >= threshold
        crossed = crossed_p | crossed_b
        if crossed.any():
            ic = ia[crossed]
            pair_first = np.abs(y[ic, 1]) >= np.abs(y[ic, 2])
            outcome[ic] = np.where(pair_first, RG_PAIR, RG_BACKSCATTER)
            l_star[ic] = l[ic]
            active[ic] = False
        ran_out = l[ia] >= l_max
        if ran_out.any():
            io = ia[ran_out & ~crossed]
            active[io] = False
    return outcome, l_star, y, trace, trace_len


if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _rg_rhs1(y0, y1, y2):
        return 2.0 * (y1 * y1 - y2 * y2), y0 * y1, -y0 * y2

    @njit(cache=True)
    def _rg_integrate_numba_impl(
        y0, dl0, threshold, l_max, jump_limit, trace_stride, outcome, l_star, y_final, trace, trace_len
    ):
        n = y0.shape[0]
        max_trace = trace.shape[1]
        do_trace = trace_stride > 0
        dl_min = dl0 * 2.0**-40
        for i in range(n):
            a = y0[i, 0]
            b = y0[i, 1]
            c = y0[i, 2]
            f0, f1, f2 = _rg_rhs1(a, b, c)
            if f0 == 0.0 and f1 == 0.0 and f2 == 0.0:
                outcome[i] = RG_GAPLESS
                l_star[i] = np.nan
                y_final[i, 0] = a
                y_final[i, 1] = b
                y_final[i, 2] = c
                if do_trace and max_trace > 0:
                    trace[i, 0, 1] = a
                    trace[i, 0, 2] = b
                    trace[i, 0, 3] = c
                    trace_len[i] = 1
                continue
            dl = dl0
            l = 0.0
            steps = 0
            res = RG_GAPLESS
            ls = np.nan
            if do_trace and max_trace > 0:
                trace[i, 0, 1] = a
                trace[i, 0, 2] = b
                trace[i, 0, 3] = c
                trace_len[i] = 1
            while l < l_max:
                k10, k11, k12 = _rg_rhs1(a, b, c)
                k20, k21, k22 = _rg_rhs1(
                    a + 0.5 * dl * k10, b + 0.5 * dl * k11, c + 0.5 * dl * k12
                )
                k30, k31, k32 = _rg_rhs1(
                    a + 0.5 * dl * k20, b + 0.5 * dl * k21, c + 0.5 * dl * k22
                )
                k40, k41, k42 = _rg_rhs1(a + dl * k30, b + dl * k31, c + dl * k32)
                na = a + dl / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
                nb = b + dl / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
                nc = c + dl / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
                jump = max(abs(na - a), max(abs(nb - b), abs(nc - c)))
                if jump > jump_limit and dl > dl_min:
                    dl *= 0.5
                    continue
                a, b, c = na, nb, nc
                l += dl
                steps += 1
                if do_trace and steps % trace_stride == 0 and trace_len[i] < max_trace:
                    k = trace_len[i]
                    trace[i, k, 0] = l
                    trace[i, k, 1] = a
                    trace[i, k, 2] = b
                    trace[i, k, 3] = c
                    trace_len[i] = k + 1
                if abs(b) >= threshold or abs(c) >= threshold:
                    res = RG_PAIR if abs(b) >= abs(c) else RG_BACKSCATTER
                    ls = l
                    break
            outcome[i] = res
            l_star[i] = ls
            y_final[i, 0] = a
            y_final[i, 1] = b
            y_final[i, 2] = c

    def _rg_integrate_numba(y0, dl0, threshold, l_max, jump_limit, trace_stride, max_trace):
        n = y0.shape[0]
        outcome = np.zeros(n, dtype=np.int8)
        l_star = np.full(n, np.nan)
        y_final = np.zeros((n, 3))
        mt = max_trace if trace_stride > 0 else 1
        trace = np.zeros((n, mt, 4))
        trace_len = np.zeros(n, dtype=np.int64)
        _rg_integrate_numba_impl(
            np.ascontiguousarray(y0, dtype=np.float64),
            float(dl0),
            float(threshold),
            float(l_max),
            float(jump_limit),
            int(trace_stride),
            outcome,
            l_star,
            y_final,
            trace,
            trace_len,
        )
        return outcome, l_star, y_final, trace, trace_len

else:  # pragma: no cover
    _rg_integrate_numba = None


def rg_integrate(y0, dl0, threshold, l_max, jump_limit, trace_stride=0, max_trace=2048):
    """Integrate the three-coupling flow for a batch of initial conditions.

    ``y0`` has shape (n, 3) holding (y-, yp, ybs).  Returns outcome codes,
    l* (nan where gapless), final couplings, and per-point traces sampled
    every ``trace_stride`` accepted steps (disabled when 0).
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=np.float64))
    if USE_NUMBA:
        return _rg_integrate_numba(y0, dl0, threshold, l_max, jump_limit, trace_stride, max_trace)
    return _rg_integrate_numpy(y0, dl0, threshold, l_max, jump_limit, trace_stride, max_trace)
