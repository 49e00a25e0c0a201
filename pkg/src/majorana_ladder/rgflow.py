"""Bosonization inputs and the three-coupling RG flow for the phase diagram.

The antibonding sector of the effective ladder carries two competing
sine-Gordon terms: pair tunneling (coupling g_p) drives the topological
superconducting phase, backscattering (g_bs) the trivial one.  Near the
marginal line the flow closes on (y-, yp, ybs):

    dy-/dl = 2 (yp^2 - ybs^2),  dyp/dl = y- yp,  dybs/dl = -y- ybs.

A point is declared gapped once |yp| or |ybs| reaches the strong-coupling
threshold at scale l*, giving an inverse correlation length exp(-l*).

The Fermi velocity convention is v_F = 2 tau sin(pi nu) (tight-binding,
lattice spacing 1); swap in any other convention via the ``v_F`` argument
to check robustness of the scan shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .models import pulse_couplings

OUTCOME_NAMES = {
    kernels.RG_GAPLESS: "gapless",
    kernels.RG_PAIR: "pair_dominant",
    kernels.RG_BACKSCATTER: "backscatter_dominant",
}

DEFAULT_THRESHOLD = 9.0
DEFAULT_DL = 1e-4
DEFAULT_L_MAX = 50.0


@dataclass(frozen=True)
class BareCouplings:
    """Initial conditions of the flow derived from the lattice couplings."""

    K_minus: float
    v_minus: float
    y_minus: float
    y_p: float
    y_bs: float
    nu: float
    kF: float

    @property
    def marginality(self) -> float:
        """|K- - 1|: how strained the marginal approximation is."""
        return abs(self.K_minus - 1.0)


@dataclass
class FlowResult:
    outcome: str
    l_star: Optional[float]
    xi_inv: float
    trace: Optional[np.ndarray]  # rows (l, y-, yp, ybs)
    error: Optional[str] = None


def bare_couplings(U0: float, alpha: float, nu: float, tau: float = 1.0,
                   v_F: Optional[float] = None) -> BareCouplings:
    """Luttinger parameter and sine-Gordon couplings of the antibonding sector.

    Valid for 0 < nu < 1/2; raises when the quoted combination yields a
    non-positive velocity (outside the perturbative window).

    At the undriven endpoints alpha in {0, 1} the one-period propagator is
    a single (possibly rotated) decoupled-wire exponential, so no
    inter-wire processes exist and both sine-Gordon couplings are exactly
    zero.  The perturbative map would put a spurious pair coupling at
    alpha = 0; the exact unitary-equivalence argument overrides it there.
    Away from the endpoints the map is used as stated, including its
    known asymmetry under alpha <-> 1 - alpha.
    """
    if not 0.0 < nu < 0.5:
        raise ValueError("filling nu must lie in (0, 1/2)")
    kF = math.pi * nu
    if v_F is None:
        v_F = 2.0 * tau * math.sin(kF)
    undriven = alpha in (0.0, 1.0)
    U1, U2 = pulse_couplings(U0, alpha if not undriven else 1.0)
    a = v_F * math.pi + U1 * math.cos(2.0 * kF) + 2.0 * U2 * math.sin(kF) ** 2
    b = v_F * math.pi + U1 * (2.0 - math.cos(2.0 * kF)) - 2.0 * U2 * math.sin(kF) ** 2
    if a <= 0.0 or b <= 0.0:
        raise ValueError(
            f"non-positive antibonding velocity at U0={U0}, alpha={alpha}: "
            "outside the perturbative window"
        )
    K = math.sqrt(a / b)
    v = math.sqrt(a * b) / math.pi
    g_p = -4.0 * U2 * math.sin(kF) ** 2
    g_bs = -4.0 * U2 * math.cos(kF) ** 2
    return BareCouplings(
        K_minus=K,
        v_minus=v,
        y_minus=2.0 * (K - 1.0),
        y_p=g_p / (math.pi * v),
        y_bs=g_bs / (math.pi * v),
        nu=nu,
        kF=kF,
    )


def integrate_flow(bare: BareCouplings, threshold: float = DEFAULT_THRESHOLD,
                   dl: float = DEFAULT_DL, l_max: float = DEFAULT_L_MAX,
                   record_trace: bool = True) -> FlowResult:
    """RK4-integrate one flow until strong coupling or l_max.

    Steps moving any coupling by more than 0.1 * threshold are rejected
    and retried at half the step.  xi_inv = exp(-l*) for gapped outcomes,
    0 for gapless ones.
    """
    if threshold < 1.0:
        raise ValueError("strong-coupling threshold must be at least 1")
    y0 = np.array([[bare.y_minus, bare.y_p, bare.y_bs]])
    stride = max(1, int(round(l_max / dl / 1024))) if record_trace else 0
    outcome, l_star, y_fin, trace, trace_len = kernels.rg_integrate(
        y0, dl, threshold, l_max, 0.1 * threshold, trace_stride=stride
    )
    code = int(outcome[0])
    ls = None if math.isnan(l_star[0]) else float(l_star[0])
    tr = None
    if record_trace:
        final_row = np.concatenate(([ls if ls is not None else l_max], y_fin[0]))
        tr = np.vstack([trace[0, : trace_len[0]], final_row])
    return FlowResult(
        outcome=OUTCOME_NAMES[code],
        l_star=ls,
        xi_inv=math.exp(-ls) if ls is not None else 0.0,
        trace=tr,
    )


@dataclass
class ScanPoint:
    U0: float
    alpha: float
    nu: float
    result: FlowResult
    K_minus_bare: Optional[float]


def phase_scan(U0_values: Sequence[float], alpha_values: Sequence[float], nu: float,
               threshold: float = DEFAULT_THRESHOLD, dl: float = DEFAULT_DL,
               l_max: float = DEFAULT_L_MAX, tau: float = 1.0,
               v_F: Optional[float] = None) -> list[ScanPoint]:
    """Flow outcome on a (U0, alpha) grid at fixed filling.

    Rows come back in grid order (U0 outer, alpha inner).  Points outside
    the perturbative window are reported as error rows instead of
    aborting the scan.
    """
    pts = [(float(u), float(a)) for u in U0_values for a in alpha_values]
    bares: list[Optional[BareCouplings]] = []
    errors: list[Optional[str]] = []
    for u, a in pts:
        try:
            bares.append(bare_couplings(u, a, nu, tau=tau, v_F=v_F))
            errors.append(None)
        except ValueError as exc:
            bares.append(None)
            errors.append(str(exc))
    valid = [i for i, b in enumerate(bares) if b is not None]
    out: list[Optional[FlowResult]] = [None] * len(pts)
    if valid:
        y0 = np.array([[bares[i].y_minus, bares[i].y_p, bares[i].y_bs] for i in valid])
        outcome, l_star, _, _, _ = kernels.rg_integrate(
            y0, dl, threshold, l_max, 0.1 * threshold, trace_stride=0
        )
        for row, i in enumerate(valid):
            ls = None if np.isnan(l_star[row]) else float(l_star[row])
            out[i] = FlowResult(
                outcome=OUTCOME_NAMES[int(outcome[row])],
                l_star=ls,
                xi_inv=math.exp(-ls) if ls is not None else 0.0,
                trace=None,
            )
    for i, err in enumerate(errors):
        if err is not None:
            out[i] = FlowResult(outcome="error", l_star=None, xi_inv=0.0,
                                trace=None, error=err)
    return [
        ScanPoint(U0=pts[i][0], alpha=pts[i][1], nu=nu, result=out[i],
                  K_minus_bare=bares[i].K_minus if bares[i] is not None else None)
        for i in range(len(pts))
    ]


def scan_rows(points: Sequence[ScanPoint]) -> list[dict]:
    """Flatten scan points into CSV-ready records."""
    rows = []
    for p in points:
        rows.append(
            {
                "U0": p.U0,
                "alpha": p.alpha,
                "nu": p.nu,
                "outcome": p.result.outcome,
                "l_star": p.result.l_star if p.result.l_star is not None else "",
                "xi_inv": p.result.xi_inv,
                "K_minus_bare": p.K_minus_bare if p.K_minus_bare is not None else "",
            }
        )
    return rows
