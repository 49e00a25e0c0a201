"""Hamiltonian builders for the driven ladder.

Each builder exists in two flavours: a ``*_terms`` function returning a
list of :class:`~majorana_ladder.fockspace.FermionTerm` (basis-free), and
a matrix wrapper assembling those terms on a given sector.  The effective
Hamiltonians realized by the various driving protocols are:

* pulsed inter-leg hopping at angle eta = pi/2 (instantaneous pulses),
* the four-segment two-pulse sequence yielding pure pair hopping,
* a continuous cosine drive with Bessel-renormalized couplings,
* finite-duration square pulses including the parity-breaking correction,

plus the bare decoupled-wire Hamiltonian, the rotated-frame Hamiltonian
at arbitrary pulse angle, and the minimal hopping + pair-hopping ladder
used for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import j0 as bessel_j0

from .fockspace import (
    DENSE_MAX_DIM,
    FermionTerm,
    SectorBasis,
    SparseOperator,
    build_sparse,
    scale_terms,
    terms_mul,
)

HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class ModelParams:
    """Bare couplings of the decoupled-wire ladder (energies in units of tau)."""

    U0: float
    L: int
    tau: float = 1.0
    boundary: str = "open"

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("hopping amplitude tau must be positive")
        if self.L < 2:
            raise ValueError("need at least two rungs for any bond term")
        if self.boundary not in ("open", "periodic"):
            raise ValueError("boundary must be 'open' or 'periodic'")


@dataclass(frozen=True)
class DriveParams:
    """Knobs of the periodic drive.

    ``alpha`` splits the period between the bare and rotated frames,
    ``eta`` is the pulse angle, ``t_p`` the pulse duration (0 means
    instantaneous), ``A`` the square-pulse amplitude (derived from
    eta / t_p when omitted), ``K0`` the dimensionless cosine-drive
    strength, ``alphas4`` the weights of the two-pulse sequence.
    """

    T: float
    alpha: float = 0.5
    eta: float = HALF_PI
    t_p: float = 0.0
    A: Optional[float] = None
    K0: Optional[float] = None
    alphas4: Optional[tuple[float, float, float, float]] = None

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("driving period T must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("pulse split alpha must lie in [0, 1]")
        if self.t_p < 0 or self.t_p >= self.T:
            raise ValueError("pulse duration must satisfy 0 <= t_p < T")
        if self.alphas4 is not None:
            a = np.asarray(self.alphas4, dtype=float)
            if a.shape != (4,):
                raise ValueError("alphas4 must have four entries")
            if abs(a.sum() - 1.0) > 1e-12:
                raise ValueError("two-pulse weights must sum to 1")
            if (a <= 0).any():
                raise ValueError("two-pulse weights must be positive")
        if self.A is not None and self.t_p > 0:
            if abs(self.A * self.t_p - self.eta) > 1e-12:
                raise ValueError("square drive requires A * t_p = eta")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T

    @property
    def epsilon(self) -> float:
        """Detuning of the pulse angle from the parity-protecting value."""
        return self.eta - HALF_PI

    @property
    def amplitude(self) -> float:
        """Square-pulse amplitude, A = eta / t_p unless given explicitly."""
        if self.A is not None:
            return self.A
        if self.t_p <= 0:
            raise ValueError("amplitude undefined for instantaneous pulses")
        return self.eta / self.t_p


@dataclass(frozen=True)
class EffectiveCouplings:
    """Closed-form interaction strengths of the effective Hamiltonians."""

    U1: Optional[float] = None
    U2: Optional[float] = None
    Un: Optional[float] = None
    Up: Optional[float] = None
    U1_tilde: Optional[float] = None
    U2_tilde: Optional[float] = None
    z2_breaking_coeff: Optional[float] = None


def pulse_couplings(U0: float, alpha: float) -> tuple[float, float]:
    """U1 = U0 (1 + alpha) / 2 and U2 = U0 (1 - alpha) / 2."""
    return 0.5 * U0 * (1.0 + alpha), 0.5 * U0 * (1.0 - alpha)


def cosine_couplings(U0: float, K0: float) -> tuple[float, float]:
    """Bessel-renormalized couplings of the continuous drive."""
    b = bessel_j0(2.0 * K0)
    return 0.25 * U0 * (3.0 + b), 0.25 * U0 * (1.0 - b)


def two_pulse_couplings(U0: float, alphas4: Sequence[float]) -> tuple[float, float]:
    """Un = U0 (a1 + a3), Up = -U0 a2 of the two-pulse sequence."""
    a1, a2, a3, a4 = alphas4
    return U0 * (a1 + a3), -U0 * a2


def z2_breaking_coeff(U0: float, t_p: float, T: float) -> float:
    """Coefficient of the parity-breaking cross term for finite pulses."""
    return 4.0 * U0 / (3.0 * math.pi) * (t_p / T)


def effective_couplings(params: ModelParams, drive: DriveParams) -> EffectiveCouplings:
    U1, U2 = pulse_couplings(params.U0, drive.alpha)
    out = {"U1": U1, "U2": U2}
    if drive.alphas4 is not None:
        out["Un"], out["Up"] = two_pulse_couplings(params.U0, drive.alphas4)
    if drive.K0 is not None:
        out["U1_tilde"], out["U2_tilde"] = cosine_couplings(params.U0, drive.K0)
    if drive.t_p > 0:
        out["z2_breaking_coeff"] = z2_breaking_coeff(params.U0, drive.t_p, drive.T)
    return EffectiveCouplings(**out)


# ---------------------------------------------------------------------------
# elementary term lists
# ---------------------------------------------------------------------------


def _bonds(L: int, boundary: str) -> list[tuple[int, int]]:
    bonds = [(j, j + 1) for j in range(L - 1)]
    if boundary == "periodic" and L > 2:
        bonds.append((L - 1, 0))
    return bonds


def _mode(j: int, leg: int) -> int:
    return 2 * j + leg


def hopping_terms(L: int, tau: float, boundary: str = "open") -> list[FermionTerm]:
    terms = []
    for j, k in _bonds(L, boundary):
        for leg in (0, 1):
            m1, m2 = _mode(j, leg), _mode(k, leg)
            t = FermionTerm(-tau, ((m1, True), (m2, False)))
            terms += [t, t.dagger()]
    return terms


def _density_product(m1: int, m2: int, coeff: float) -> FermionTerm:
    return FermionTerm(coeff, ((m1, True), (m1, False), (m2, True), (m2, False)))


def h0_terms(params: ModelParams) -> list[FermionTerm]:
    """Bare ladder: intra-leg hopping plus intra-leg nearest-neighbor density."""
    terms = hopping_terms(params.L, params.tau, params.boundary)
    for j, k in _bonds(params.L, params.boundary):
        for leg in (0, 1):
            terms.append(_density_product(_mode(j, leg), _mode(k, leg), params.U0))
    return terms


def spin_terms(j: int, axis: str) -> list[FermionTerm]:
    """Rung spin operator J_axis^j (or the rung density for axis='n')."""
    ma, mb = _mode(j, 0), _mode(j, 1)
    if axis == "x":
        t = FermionTerm(0.5, ((ma, True), (mb, False)))
        return [t, t.dagger()]
    if axis == "y":
        t = FermionTerm(-0.5j, ((ma, True), (mb, False)))
        return [t, t.dagger()]
    if axis == "z":
        return [
            FermionTerm(0.5, ((ma, True), (ma, False))),
            FermionTerm(-0.5, ((mb, True), (mb, False))),
        ]
    if axis == "n":
        return [
            FermionTerm(1.0, ((ma, True), (ma, False))),
            FermionTerm(1.0, ((mb, True), (mb, False))),
        ]
    raise ValueError(f"unknown axis {axis!r}")


def spin_total_terms(L: int, axis: str) -> list[FermionTerm]:
    out: list[FermionTerm] = []
    for j in range(L):
        out += spin_terms(j, axis)
    return out


def spin_bond_terms(L: int, axis1: str, axis2: str, boundary: str = "open") -> list[FermionTerm]:
    """sum over bonds of J_axis1^j J_axis2^{j+1}."""
    out: list[FermionTerm] = []
    for j, k in _bonds(L, boundary):
        out += terms_mul(spin_terms(j, axis1), spin_terms(k, axis2))
    return out


def spin_totals(basis: SectorBasis):
    """Total (Jx, Jy, Jz, N) as sparse operators on an unfiltered sector."""
    L = basis.L
    return tuple(
        build_sparse(spin_total_terms(L, ax), basis) for ax in ("x", "y", "z", "n")
    )


# ---------------------------------------------------------------------------
# rotated-frame Hamiltonian and the conjugation identity
# ---------------------------------------------------------------------------


def _rotated_zz_bond_terms(L: int, eta: float, boundary: str) -> list[FermionTerm]:
    """exp(-i eta Jx) sum_j JzJz exp(+i eta Jx) in closed form.

    The global rotation acts bond-locally because distant rung operators
    commute with the bond product.
    """
    a = 0.5 * (math.cos(2.0 * eta) + 1.0)   # JzJz weight
    b = 0.5 * (1.0 - math.cos(2.0 * eta))   # JyJy weight
    c = -0.5 * math.sin(2.0 * eta)          # JyJz + JzJy weight
    terms = scale_terms(spin_bond_terms(L, "z", "z", boundary), a)
    terms += scale_terms(spin_bond_terms(L, "y", "y", boundary), b)
    terms += scale_terms(spin_bond_terms(L, "y", "z", boundary), c)
    terms += scale_terms(spin_bond_terms(L, "z", "y", boundary), c)
    return terms


def h1_terms(params: ModelParams, eta: float) -> list[FermionTerm]:
    """Closed form of the rotated Hamiltonian exp(-i eta Jx) H0 exp(+i eta Jx)."""
    L, U0, bc = params.L, params.U0, params.boundary
    terms = hopping_terms(L, params.tau, bc)
    terms += scale_terms(spin_bond_terms(L, "n", "n", bc), 0.5 * U0)
    terms += scale_terms(_rotated_zz_bond_terms(L, eta, bc), 2.0 * U0)
    return terms


def h1_conjugated(params: ModelParams, eta: float, basis: SectorBasis,
                  validate: bool = False, tol: float = 1e-12) -> SparseOperator:
    """Rotated-frame Hamiltonian on a sector.

    With ``validate=True`` the closed form is checked against explicit
    dense conjugation exp(-i eta Jx) H0 exp(+i eta Jx); a mismatch beyond
    ``tol`` indicates a sign-convention bug and raises.
    """
    op = build_sparse(h1_terms(params, eta), basis)
    if validate:
        if basis.dim > DENSE_MAX_DIM:
            raise ValueError("dense conjugation check limited to small sectors")
        from scipy.linalg import eigh

        h0 = build_sparse(h0_terms(params), basis).toarray()
        jx = build_sparse(spin_total_terms(params.L, "x"), basis).toarray()
        w, v = eigh(jx)
        rot = (v * np.exp(-1j * eta * w)) @ v.conj().T
        ref = rot @ h0 @ rot.conj().T
        err = np.abs(op.toarray() - ref).max()
        if err > tol:
            raise AssertionError(
                f"closed-form and conjugated Hamiltonians disagree by {err:.3e}"
            )
    return op


# ---------------------------------------------------------------------------
# effective Hamiltonians
# ---------------------------------------------------------------------------


def _eq5_interaction_terms(L: int, U1: float, U2: float, boundary: str) -> list[FermionTerm]:
    """Two-body part shared by the pulsed and cosine effective models.

    Intra-leg densities with weight U1, inter-leg diagonal densities,
    swap processes and pair hopping (with its relative minus sign), all
    with weight U2.
    """
    terms: list[FermionTerm] = []
    for j, k in _bonds(L, boundary):
        ma1, mb1 = _mode(j, 0), _mode(j, 1)
        ma2, mb2 = _mode(k, 0), _mode(k, 1)
        terms.append(_density_product(ma1, ma2, U1))
        terms.append(_density_product(mb1, mb2, U1))
        terms.append(_density_product(ma1, mb2, U2))
        terms.append(_density_product(mb1, ma2, U2))
        swap = FermionTerm(U2, ((ma1, True), (mb2, True), (ma2, False), (mb1, False)))
        pair = FermionTerm(-U2, ((ma1, True), (ma2, True), (mb2, False), (mb1, False)))
        terms += [swap, swap.dagger(), pair, pair.dagger()]
    return terms


def h_eff_pulse_terms(params: ModelParams, alpha: float) -> list[FermionTerm]:
    """Effective Hamiltonian of the instantaneous pulse sequence at eta = pi/2."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    U1, U2 = pulse_couplings(params.U0, alpha)
    terms = hopping_terms(params.L, params.tau, params.boundary)
    terms += _eq5_interaction_terms(params.L, U1, U2, params.boundary)
    return terms


def h_eff_pulse(params: ModelParams, alpha: float, basis: SectorBasis) -> SparseOperator:
    return build_sparse(h_eff_pulse_terms(params, alpha), basis)


def h_eff_pure_pair_terms(params: ModelParams,
                          alphas4: Sequence[float]) -> list[FermionTerm]:
    """Effective Hamiltonian of the two-pulse sequence with modulated U0.

    The four weights split the period between the bare frame, the Jx-rotated
    frame, the bare frame again and the Jy-rotated frame with inverted
    interaction sign.  With a2 = a4 only intra-leg densities and pure pair
    hopping survive; general weights leave swap / inter-leg residues.
    """
    a = np.asarray(alphas4, dtype=float)
    if a.shape != (4,):
        raise ValueError("alphas4 must have four entries")
    if abs(a.sum() - 1.0) > 1e-12:
        raise ValueError(f"two-pulse weights must sum to 1, got {a.sum()!r}")
    if (a <= 0).any():
        raise ValueError("two-pulse weights must be positive")
    a1, a2, a3, a4 = (float(x) for x in a)
    L, U0, bc = params.L, params.U0, params.boundary
    half_u = 0.5 * U0
    terms = hopping_terms(L, params.tau, bc)
    nn = spin_bond_terms(L, "n", "n", bc)
    terms += scale_terms(nn, half_u * (a1 + a3 + a2 - a4))
    terms += scale_terms(spin_bond_terms(L, "z", "z", bc), 4.0 * half_u * (a1 + a3))
    terms += scale_terms(spin_bond_terms(L, "y", "y", bc), 4.0 * half_u * a2)
    terms += scale_terms(spin_bond_terms(L, "x", "x", bc), -4.0 * half_u * a4)
    return terms


def h_eff_pure_pair(params: ModelParams, alphas4: Sequence[float],
                    basis: SectorBasis) -> SparseOperator:
    return build_sparse(h_eff_pure_pair_terms(params, alphas4), basis)


def h_eff_continuous_terms(params: ModelParams, K0: float) -> list[FermionTerm]:
    """Lowest-order effective Hamiltonian of the cosine drive A cos(wt) Jx."""
    if K0 < 0:
        raise ValueError("drive strength K0 must be non-negative")
    U1t, U2t = cosine_couplings(params.U0, K0)
    terms = hopping_terms(params.L, params.tau, params.boundary)
    terms += _eq5_interaction_terms(params.L, U1t, U2t, params.boundary)
    return terms


def h_eff_continuous(params: ModelParams, K0: float, basis: SectorBasis) -> SparseOperator:
    return build_sparse(h_eff_continuous_terms(params, K0), basis)


def h_eff_impure_terms(params: ModelParams, drive: DriveParams) -> list[FermionTerm]:
    """Effective Hamiltonian of the finite-duration square-pulse drive.

    Beyond the rescaled ideal-pulse weights (alpha - tp/T) and
    (1 - alpha - tp/T), the pulses contribute 2 tp/T [H0 + U0 (JyJy - JzJz)]
    and the parity-breaking cross term (4 U0 / 3pi)(tp/T)(JyJz + JzJy).
    """
    T, t_p, alpha = drive.T, drive.t_p, drive.alpha
    if not 0.0 < t_p < min(alpha * T, (1.0 - alpha) * T):
        raise ValueError("ill-formed sequence: need 0 < t_p < min(alpha T, (1-alpha) T)")
    x = t_p / T
    L, U0, bc = params.L, params.U0, params.boundary
    terms = scale_terms(h0_terms(params), alpha - x)
    terms += scale_terms(h1_terms(params, HALF_PI), 1.0 - alpha - x)
    terms += scale_terms(h0_terms(params), 2.0 * x)
    terms += scale_terms(spin_bond_terms(L, "y", "y", bc), 2.0 * x * U0)
    terms += scale_terms(spin_bond_terms(L, "z", "z", bc), -2.0 * x * U0)
    zc = z2_breaking_coeff(U0, t_p, T)
    terms += scale_terms(spin_bond_terms(L, "y", "z", bc), zc)
    terms += scale_terms(spin_bond_terms(L, "z", "y", bc), zc)
    return terms


def h_eff_impure(params: ModelParams, drive: DriveParams,
                 basis: SectorBasis) -> SparseOperator:
    return build_sparse(h_eff_impure_terms(params, drive), basis)


def ladder_pairhop_w_terms(t_hop: float, W: float, L: int,
                           boundary: str = "open") -> list[FermionTerm]:
    """Two free legs plus bond pair hopping W (a+ a+ b b + b+ b+ a a)."""
    if L < 2:
        raise ValueError("need at least two rungs")
    terms = hopping_terms(L, t_hop, boundary)
    for j, k in _bonds(L, boundary):
        ma1, mb1 = _mode(j, 0), _mode(j, 1)
        ma2, mb2 = _mode(k, 0), _mode(k, 1)
        t = FermionTerm(W, ((ma1, True), (ma2, True), (mb1, False), (mb2, False)))
        terms += [t, t.dagger()]
    return terms


def ladder_pairhop_w(t_hop: float, W: float, basis: SectorBasis,
                     boundary: str = "open") -> SparseOperator:
    return build_sparse(ladder_pairhop_w_terms(t_hop, W, basis.L, boundary), basis)


def h0(params: ModelParams, basis: SectorBasis) -> SparseOperator:
    return build_sparse(h0_terms(params), basis)


# ---------------------------------------------------------------------------
# two-body pattern decomposition (used to certify the pure-pair sequence)
# ---------------------------------------------------------------------------

PATTERN_NAMES = ("hopping", "intra_density", "inter_density", "swap", "pair")


def _pattern_terms(L: int, boundary: str) -> dict[str, list[FermionTerm]]:
    hop = hopping_terms(L, -1.0, boundary)  # unit coefficient on every bond
    intra: list[FermionTerm] = []
    inter: list[FermionTerm] = []
    swap: list[FermionTerm] = []
    pair: list[FermionTerm] = []
    for j, k in _bonds(L, boundary):
        ma1, mb1 = _mode(j, 0), _mode(j, 1)
        ma2, mb2 = _mode(k, 0), _mode(k, 1)
        intra += [_density_product(ma1, ma2, 1.0), _density_product(mb1, mb2, 1.0)]
        inter += [_density_product(ma1, mb2, 1.0), _density_product(mb1, ma2, 1.0)]
        s = FermionTerm(1.0, ((ma1, True), (mb2, True), (ma2, False), (mb1, False)))
        p = FermionTerm(1.0, ((ma1, True), (ma2, True), (mb2, False), (mb1, False)))
        swap += [s, s.dagger()]
        pair += [p, p.dagger()]
    return {"hopping": hop, "intra_density": intra, "inter_density": inter,
            "swap": swap, "pair": pair}


def decompose_two_body(op: SparseOperator, boundary: str = "open") -> tuple[dict[str, float], float]:
    """Least-squares amplitudes of the five bond patterns in an operator.

    Returns the per-pattern amplitudes and the norm of the residual after
    subtracting the fitted combination.  The fit runs on the operator's
    own sector, which must be small enough for dense work.
    """
    basis = op.basis
    if basis.dim > DENSE_MAX_DIM:
        raise ValueError("pattern decomposition limited to dense-scale sectors")
    target = op.toarray().ravel()
    pats = _pattern_terms(basis.L, boundary)
    cols = []
    for name in PATTERN_NAMES:
        cols.append(build_sparse(pats[name], basis).toarray().ravel())
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    resid = np.linalg.norm(target - A @ coef)
    amps = {name: coef[i] for i, name in enumerate(PATTERN_NAMES)}
    for name, v in amps.items():
        if abs(v.imag) > 1e-10:
            raise AssertionError(f"pattern {name} acquired imaginary amplitude {v}")
    return {k: float(v.real) for k, v in amps.items()}, float(resid)
