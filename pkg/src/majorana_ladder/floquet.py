"""Time evolution under the pulsed, square, cosine and effective drives.

One driving period is compiled into a program of piecewise-constant
segments interleaved with instantaneous rotations ("kicks").  On sectors
small enough for dense work every distinct segment Hamiltonian is
eigendecomposed once and exponentiated exactly; larger sectors fall back
to Lanczos-Krylov stepping.  Stroboscopic states are reached by powering
the one-period propagator; micromotion samples reuse cached partial
products within a single period.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal

from .fockspace import (
    DENSE_MAX_DIM,
    SectorBasis,
    SparseOperator,
    build_sparse,
    scale_terms,
)
from .models import (
    HALF_PI,
    DriveParams,
    ModelParams,
    h0_terms,
    h1_terms,
    h_eff_pulse_terms,
    spin_total_terms,
)

SCHEMES = (
    "pulse_sequence",
    "two_pulse_sequence",
    "square_drive",
    "cosine_drive",
    "effective_static",
)

KRYLOV_DIM = 30
KRYLOV_TOL = 1e-12


@dataclass(frozen=True)
class PropagationPlan:
    """What to propagate: scheme, model/drive parameters and sampling grid."""

    scheme: str
    model: ModelParams
    drive: DriveParams
    n_periods: int = 1
    samples_per_period: int = 32
    cosine_steps: int = 1024

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        if self.n_periods < 1:
            raise ValueError("n_periods must be at least 1")
        if self.samples_per_period < 1:
            raise ValueError("samples_per_period must be at least 1")
        if self.scheme == "square_drive":
            d = self.drive
            if not 0.0 < d.t_p < min(d.alpha * d.T, (1.0 - d.alpha) * d.T):
                raise ValueError("square drive needs 0 < t_p < min(alpha T, (1-alpha) T)")
        if self.scheme == "two_pulse_sequence" and self.drive.alphas4 is None:
            raise ValueError("two-pulse sequence requires drive.alphas4")
        if self.scheme == "cosine_drive" and self.drive.K0 is None:
            raise ValueError("cosine drive requires drive.K0")


@dataclass
class Trajectory:
    """Sampled wavefunctions along a drive, with the stroboscopic subgrid marked."""

    times: np.ndarray
    states: np.ndarray  # (n_samples, dim)
    stroboscopic_mask: np.ndarray

    def stroboscopic(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.stroboscopic_mask
        return self.times[m], self.states[m]


# ---------------------------------------------------------------------------
# period programs: (kind, payload, duration) event lists
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Evolve:
    key: str
    duration: float


@dataclass(frozen=True)
class _Kick:
    axis: str
    angle: float


def _period_program(plan: PropagationPlan):
    """Return (events, hams) where hams maps keys to term lists."""
    p, d = plan.model, plan.drive
    T = d.T
    if plan.scheme == "pulse_sequence":
        hams = {"h0": h0_terms(p)}
        events = [
            _Evolve("h0", d.alpha * T),
            _Kick("x", +d.eta),
            _Evolve("h0", (1.0 - d.alpha) * T),
            _Kick("x", -d.eta),
        ]
    elif plan.scheme == "two_pulse_sequence":
        a1, a2, a3, a4 = d.alphas4
        flipped = ModelParams(U0=-p.U0, L=p.L, tau=p.tau, boundary=p.boundary)
        hams = {"h0": h0_terms(p), "h0_flip": h0_terms(flipped)}
        events = [
            _Evolve("h0", a1 * T),
            _Kick("x", +HALF_PI),
            _Evolve("h0", a2 * T),
            _Kick("x", -HALF_PI),
            _Evolve("h0", a3 * T),
            _Kick("y", +HALF_PI),
            _Evolve("h0_flip", a4 * T),
            _Kick("y", -HALF_PI),
        ]
    elif plan.scheme == "square_drive":
        A = d.amplitude
        jx = spin_total_terms(p.L, "x")
        hams = {
            "h0": h0_terms(p),
            "pulse1": h0_terms(p) + scale_terms(jx, A),
            "pulse2": h0_terms(p) + scale_terms(jx, 3.0 * A),
        }
        events = [
            _Evolve("h0", d.alpha * T - d.t_p),
            _Evolve("pulse1", d.t_p),
            _Evolve("h0", (1.0 - d.alpha) * T - d.t_p),
            _Evolve("pulse2", d.t_p),
        ]
    elif plan.scheme == "cosine_drive":
        # Exact moving frame: with R(t) = exp(i K0 sin(wt) Jx) the lab
        # propagator is U(t) = R(t)^dag Texp(-i int R H0 R^dag) R(0), an
        # identity (the drive term cancels against -i R dR^dag/dt).  The
        # frame Hamiltonian is bounded, so a midpoint product converges
        # without resolving the large drive amplitude K0 w.
        dt = T / plan.cosine_steps
        hams = {}
        events = []
        for k in range(plan.cosine_steps):
            theta = d.K0 * math.sin(d.omega * (k + 0.5) * dt)
            key = f"cos{k}"
            hams[key] = h1_terms(p, -theta)
            events.append(_Evolve(key, dt))
    elif plan.scheme == "effective_static":
        if abs(d.eta - HALF_PI) < 1e-14:
            terms = h_eff_pulse_terms(p, d.alpha)
        else:
            terms = scale_terms(h0_terms(p), d.alpha) + scale_terms(
                h1_terms(p, d.eta), 1.0 - d.alpha
            )
        hams = {"heff": terms}
        events = [_Evolve("heff", T)]
    else:  # pragma: no cover
        raise ValueError(plan.scheme)
    for ev in events:
        if isinstance(ev, _Evolve) and ev.duration < -1e-15:
            raise ValueError(f"negative segment duration {ev.duration}")
    if plan.scheme == "cosine_drive":
        frame_theta = lambda off: plan.drive.K0 * math.sin(plan.drive.omega * off)  # noqa: E731
    else:
        frame_theta = None
    return events, hams, frame_theta


# ---------------------------------------------------------------------------
# dense engine
# ---------------------------------------------------------------------------


class _DenseEngine:
    """Exact eigendecomposition exponentials for every distinct segment."""

    def __init__(self, plan: PropagationPlan, basis: SectorBasis):
        self.events, ham_terms, self._frame_theta = _period_program(plan)
        self.dim = basis.dim
        self._eigs = {}
        for key, terms in ham_terms.items():
            h = build_sparse(terms, basis).toarray()
            self._eigs[key] = eigh(h)
        self._kicks = {}
        for ev in self.events:
            if isinstance(ev, _Kick) and (ev.axis, ev.angle) not in self._kicks:
                j = build_sparse(spin_total_terms(basis.L, ev.axis), basis).toarray()
                w, v = eigh(j)
                self._kicks[(ev.axis, ev.angle)] = (v * np.exp(1j * ev.angle * w)) @ v.conj().T
        self._jx_eig = None
        if self._frame_theta is not None:
            jx = build_sparse(spin_total_terms(basis.L, "x"), basis).toarray()
            self._jx_eig = eigh(jx)

    def _frame_correction(self, offset: float) -> Optional[np.ndarray]:
        """Lab-frame restoration exp(-i theta(t) Jx) for moving-frame schemes."""
        if self._frame_theta is None:
            return None
        theta = self._frame_theta(offset)
        if abs(theta) < 1e-15:
            return None
        w, v = self._jx_eig
        return (v * np.exp(-1j * theta * w)) @ v.conj().T

    def segment_u(self, key: str, duration: float) -> np.ndarray:
        w, v = self._eigs[key]
        return (v * np.exp(-1j * duration * w)) @ v.conj().T

    def kick_u(self, ev: _Kick) -> np.ndarray:
        return self._kicks[(ev.axis, ev.angle)]

    def period_unitary(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=np.complex128)
        for ev in self.events:
            if isinstance(ev, _Evolve):
                u = self.segment_u(ev.key, ev.duration) @ u
            else:
                u = self.kick_u(ev) @ u
        return u

    def partial_products(self, offsets: np.ndarray) -> list[np.ndarray]:
        """Propagators from period start to each requested offset.

        A kick sitting exactly at an offset is included in that offset's
        propagator (the pulse is considered completed at its timestamp).
        """
        out = []
        u = np.eye(self.dim, dtype=np.complex128)
        t = 0.0
        i = 0
        for off in offsets:
            while i < len(self.events):
                ev = self.events[i]
                if isinstance(ev, _Kick):
                    if t <= off + 1e-15:
                        u = self.kick_u(ev) @ u
                        i += 1
                        continue
                    break
                seg_end = t + ev.duration
                if seg_end <= off + 1e-15:
                    u = self.segment_u(ev.key, ev.duration) @ u
                    t = seg_end
                    i += 1
                else:
                    break
            if i < len(self.events) and isinstance(self.events[i], _Evolve) and off > t:
                partial = self.segment_u(self.events[i].key, off - t)
                snap = partial @ u
            else:
                snap = u.copy()
            corr = self._frame_correction(off)
            out.append(snap if corr is None else corr @ snap)
        return out


# ---------------------------------------------------------------------------
# Krylov engine
# ---------------------------------------------------------------------------


def krylov_step(H, psi: np.ndarray, dt: float, m: int = KRYLOV_DIM,
                tol: float = KRYLOV_TOL, _depth: int = 0) -> np.ndarray:
    """psi -> exp(-i dt H) psi by a Lanczos subspace exponential.

    Hermitian H only.  When the subspace error estimate exceeds ``tol``
    the step is split in half (with a warning), which handles the rare
    Krylov stagnation without giving up exactness elsewhere.
    """
    if isinstance(H, SparseOperator):
        H = H.matrix
    if dt == 0.0:
        return psi.copy()
    if _depth > 30:
        raise RuntimeError("krylov_step failed to converge even after splitting")
    nrm = np.linalg.norm(psi)
    if nrm == 0.0:
        return psi.copy()
    dim = psi.shape[0]
    m_eff = min(m, dim)
    V = np.zeros((m_eff, dim), dtype=np.complex128)
    alphas = np.zeros(m_eff)
    betas = np.zeros(max(m_eff - 1, 0))
    V[0] = psi / nrm
    k = m_eff
    breakdown = False
    for j in range(m_eff):
        w = H @ V[j]
        a = float(np.real(np.vdot(V[j], w)))
        alphas[j] = a
        w = w - a * V[j]
        if j > 0:
            w = w - betas[j - 1] * V[j - 1]
        # full reorthogonalization keeps the basis clean at these sizes
        w = w - V[: j + 1].T @ (V[: j + 1].conj() @ w)
        if j == m_eff - 1:
            tail = np.linalg.norm(w)
            break
        b = np.linalg.norm(w)
        if b < 1e-14:
            k = j + 1
            breakdown = True
            tail = 0.0
            break
        betas[j] = b
        V[j + 1] = w / b
    lam, Q = eigh_tridiagonal(alphas[:k], betas[: k - 1])
    u = Q @ (np.exp(-1j * dt * lam) * Q[0, :])
    if not breakdown:
        err = abs(tail * u[-1] * dt)
        if err > tol:
            warnings.warn(
                f"krylov_step error estimate {err:.2e} above {tol:.0e}; halving dt",
                RuntimeWarning,
                stacklevel=2,
            )
            half = krylov_step(H, psi, dt / 2.0, m, tol, _depth + 1)
            return krylov_step(H, half, dt / 2.0, m, tol, _depth + 1)
    return nrm * (V[:k].T @ u)


class _KrylovEngine:
    """Segment-wise Krylov propagation for large sectors."""

    def __init__(self, plan: PropagationPlan, basis: SectorBasis):
        # stroboscopic-only use: moving-frame corrections vanish at t = nT
        self.events, ham_terms, _ = _period_program(plan)
        self._mats = {k: build_sparse(t, basis).matrix for k, t in ham_terms.items()}
        self._jx = {}
        for ev in self.events:
            if isinstance(ev, _Kick) and ev.axis not in self._jx:
                self._jx[ev.axis] = build_sparse(
                    spin_total_terms(basis.L, ev.axis), basis
                ).matrix

    def apply_period(self, psi: np.ndarray) -> np.ndarray:
        for ev in self.events:
            if isinstance(ev, _Evolve):
                if ev.duration > 0:
                    psi = krylov_step(self._mats[ev.key], psi, ev.duration)
            else:
                # exp(+i angle J) == exp(-i (-angle) J)
                psi = krylov_step(self._jx[ev.axis], psi, -ev.angle)
        return psi


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def pulse_unitary(eta: float, basis: SectorBasis) -> np.ndarray:
    """Dense matrix of the pulse operator exp(i eta Jx_total)."""
    if basis.dim > DENSE_MAX_DIM:
        raise ValueError("dense pulse unitary limited to small sectors")
    jx = build_sparse(spin_total_terms(basis.L, "x"), basis).toarray()
    w, v = eigh(jx)
    return (v * np.exp(1j * eta * w)) @ v.conj().T


def period_unitary(plan: PropagationPlan, basis: SectorBasis) -> np.ndarray:
    """One-period propagator as a dense matrix."""
    if basis.dim > DENSE_MAX_DIM:
        raise ValueError("dense period unitary limited to small sectors; use evolve()")
    return _DenseEngine(plan, basis).period_unitary()


def micromotion_propagators(plan: PropagationPlan, basis: SectorBasis):
    """(offsets, partial propagators within one period, full-period propagator)."""
    engine = _DenseEngine(plan, basis)
    spp = plan.samples_per_period
    offsets = np.arange(spp) * (plan.drive.T / spp)
    partials = engine.partial_products(offsets)
    return offsets, partials, engine.period_unitary()


def evolve(plan: PropagationPlan, psi0: np.ndarray, basis: SectorBasis) -> Trajectory:
    """Propagate psi0 on the plan's sampling grid.

    Samples sit at t = n T + k T / samples_per_period plus the final
    endpoint; the stroboscopic mask selects the k = 0 subgrid.  Norm
    drift beyond 1e-8 aborts with a diagnostic.
    """
    psi0 = np.asarray(psi0, dtype=np.complex128)
    n0 = np.linalg.norm(psi0)
    if abs(n0 - 1.0) > 1e-10:
        raise ValueError(f"initial state not normalized (|psi| = {n0})")
    T = plan.drive.T
    spp = plan.samples_per_period
    if basis.dim <= DENSE_MAX_DIM:
        offsets, partials, u_T = micromotion_propagators(plan, basis)
        times, states, mask = [], [], []
        psi = psi0
        for n in range(plan.n_periods):
            for k in range(spp):
                times.append(n * T + offsets[k])
                states.append(partials[k] @ psi)
                mask.append(k == 0)
            psi = u_T @ psi
            drift = abs(np.linalg.norm(psi) - 1.0)
            if drift > 1e-8:
                raise RuntimeError(
                    f"norm drift {drift:.2e} after period {n + 1}; propagator unsound"
                )
        times.append(plan.n_periods * T)
        states.append(psi)
        mask.append(True)
    else:
        if spp != 1:
            raise ValueError("micromotion sampling beyond the dense scale is unsupported")
        engine = _KrylovEngine(plan, basis)
        times, states, mask = [0.0], [psi0], [True]
        psi = psi0
        for n in range(plan.n_periods):
            psi = engine.apply_period(psi)
            drift = abs(np.linalg.norm(psi) - 1.0)
            if drift > 1e-8:
                raise RuntimeError(
                    f"norm drift {drift:.2e} after period {n + 1}; propagator unsound"
                )
            times.append((n + 1) * T)
            states.append(psi)
            mask.append(True)
    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        stroboscopic_mask=np.asarray(mask, dtype=bool),
    )


def cosine_drive_convergence(plan: PropagationPlan, psi0: np.ndarray,
                             basis: SectorBasis) -> float:
    """Step-halving check of the cosine-drive integrator.

    Returns the max deviation of the final state when the per-period step
    count doubles; runs should only be accepted below 1e-8.
    """
    if plan.scheme != "cosine_drive":
        raise ValueError("convergence check applies to the cosine drive")
    from dataclasses import replace

    fine = replace(plan, cosine_steps=2 * plan.cosine_steps)
    a = evolve(plan, psi0, basis).states[-1]
    b = evolve(fine, psi0, basis).states[-1]
    return float(np.abs(a - b).max())


def moving_frame_fourier_modes(params: ModelParams, K0: float, omega: float,
                               basis: SectorBasis, j_max: int = 8,
                               n_grid: int = 1024) -> dict[int, np.ndarray]:
    """Fourier components of R(t) H0 R(t)^dag with R = exp(i K0 sin(wt) Jx).

    Trapezoid quadrature on a uniform grid; the integrand is smooth and
    periodic so the rule converges spectrally.
    """
    if basis.dim > DENSE_MAX_DIM:
        raise ValueError("quadrature limited to dense-scale sectors")
    h0 = build_sparse(h0_terms(params), basis).toarray()
    jx = build_sparse(spin_total_terms(params.L, "x"), basis).toarray()
    w, v = eigh(jx)
    T = 2.0 * math.pi / omega
    ts = np.arange(n_grid) * (T / n_grid)
    comps = {j: np.zeros_like(h0) for j in range(-j_max, j_max + 1)}
    for t in ts:
        theta = K0 * math.sin(omega * t)
        r = (v * np.exp(1j * theta * w)) @ v.conj().T
        ht = r @ h0 @ r.conj().T
        for j in comps:
            comps[j] += ht * np.exp(-1j * j * omega * t)
    for j in comps:
        comps[j] /= n_grid
    return comps


def first_order_correction_norm(params: ModelParams, K0: float, omega: float,
                                basis: SectorBasis, j_max: int = 8) -> float:
    """Norm of sum_j (1/j) [V_j, V_-j] from the quadrature Fourier modes."""
    comps = moving_frame_fourier_modes(params, K0, omega, basis, j_max=j_max)
    acc = np.zeros_like(comps[0])
    for j in range(1, j_max + 1):
        acc += (comps[j] @ comps[-j] - comps[-j] @ comps[j]) / j
    return float(np.linalg.norm(acc, 2))
