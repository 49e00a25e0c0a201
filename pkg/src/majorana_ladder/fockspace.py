"""Bit-encoded Fock bases and fermionic operator strings for the two-leg ladder.

Conventions, shared by every module in the package:

* Mode ordering is rung-major: on an L-rung ladder the modes are
  a_0, b_0, a_1, b_1, ..., a_{L-1}, b_{L-1}, so mode(a_j) = 2j and
  mode(b_j) = 2j + 1.  Sites are 0-based.
* A Fock state is a Python int / uint64 bitset; bit m set means mode m
  occupied.  The reference ket is the ascending-ordered product of
  creation operators acting on the vacuum.
* Applying c_m or c^dag_m therefore yields the Jordan-Wigner sign
  (-1)^(number of occupied modes strictly below m).

Bases over a single chain (used by the quadratic-Hamiltonian validation
code) reuse the same machinery through :func:`full_fock_basis`.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels

FockState = int

#: bitmask selecting the a-leg (even) modes
A_LEG_MASK = 0x5555555555555555

#: largest dimension for which dense fallbacks are allowed
DENSE_MAX_DIM = 4096

MAX_MODES = 62


@dataclass(frozen=True)
class FermionTerm:
    """One product of creation/annihilation operators with a prefactor.

    ``factors`` is the operator string in written order; the rightmost
    factor acts first.  Each factor is ``(mode, create)``.
    """

    coefficient: complex
    factors: tuple[tuple[int, bool], ...]

    def dagger(self) -> "FermionTerm":
        conj = tuple((m, not c) for m, c in reversed(self.factors))
        return FermionTerm(np.conj(self.coefficient), conj)

    def scaled(self, x: complex) -> "FermionTerm":
        return FermionTerm(self.coefficient * x, self.factors)

    def conserves_number(self) -> bool:
        return sum(1 for _, c in self.factors if c) == sum(
            1 for _, c in self.factors if not c
        )

    def preserves_leg_parity(self) -> bool:
        # each a-leg (even-mode) factor flips N_a by one
        return sum(1 for m, _ in self.factors if m % 2 == 0) % 2 == 0

    def max_mode(self) -> int:
        return max((m for m, _ in self.factors), default=-1)

    def __str__(self) -> str:
        ops = " ".join(f"c{'+' if c else '-'}[{m}]" for m, c in self.factors)
        return f"({self.coefficient:g}) {ops}" if ops else f"({self.coefficient:g}) 1"


def term_mul(t1: FermionTerm, t2: FermionTerm) -> FermionTerm:
    """Operator product t1 * t2 (t2 acts first)."""
    return FermionTerm(t1.coefficient * t2.coefficient, t1.factors + t2.factors)


def terms_mul(a: Sequence[FermionTerm], b: Sequence[FermionTerm]) -> list[FermionTerm]:
    return [term_mul(x, y) for x in a for y in b]


def scale_terms(terms: Sequence[FermionTerm], x: complex) -> list[FermionTerm]:
    if x == 0:
        return []
    return [t.scaled(x) for t in terms]


class SectorBasis:
    """Ordered basis of Fock states, optionally restricted by symmetry.

    States are stored as a strictly ascending uint64 array; lookup is by
    binary search, so ordering is deterministic across runs.  ``N`` fixes
    the total particle number (None for the full Fock space) and
    ``parity_filter`` the ladder leg parity (-1)^(N_a).
    """

    def __init__(self, n_modes: int, N: Optional[int], parity_filter: Optional[int],
                 states: np.ndarray):
        self.n_modes = int(n_modes)
        self.N = N
        self.parity_filter = parity_filter
        self.states = np.asarray(states, dtype=np.uint64)
        self._parities: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return int(self.states.shape[0])

    @property
    def L(self) -> int:
        """Rung count of the ladder interpretation (n_modes must be even)."""
        if self.n_modes % 2:
            raise ValueError("basis does not describe a two-leg ladder")
        return self.n_modes // 2

    def index_of(self, state: FockState) -> int:
        i = int(np.searchsorted(self.states, np.uint64(state)))
        if i >= self.dim or self.states[i] != np.uint64(state):
            raise KeyError(f"state {state:#x} not in basis")
        return i

    def index_of_many(self, states: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.states, states)
        bad = (idx >= self.dim) | (self.states[np.minimum(idx, self.dim - 1)] != states)
        if bad.any():
            raise KeyError("some states not in basis")
        return idx

    def state_parities(self) -> np.ndarray:
        """Leg parity (-1)^(N_a) of every basis state, as a +-1 int array."""
        if self._parities is None:
            amask = np.uint64(A_LEG_MASK)
            odd = (np.bitwise_count(self.states & amask) & 1).astype(np.int8)
            self._parities = (1 - 2 * odd).astype(np.int64)
        return self._parities

    def __repr__(self) -> str:
        return (f"SectorBasis(n_modes={self.n_modes}, N={self.N}, "
                f"parity={self.parity_filter}, dim={self.dim})")


@dataclass
class SparseOperator:
    """A sector-resolved sparse matrix together with its basis."""

    basis: SectorBasis
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.basis.dim

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.basis, self.matrix @ other.matrix)
        return self.matrix @ other


def leg_parity(state: FockState) -> int:
    """(-1)^(number of occupied a-leg modes)."""
    return 1 if (state & A_LEG_MASK).bit_count() % 2 == 0 else -1


def enumerate_sector(L: int, N: int, parity_filter: Optional[int] = None) -> SectorBasis:
    """Enumerate the fixed-N ladder sector, optionally filtered by leg parity.

    States come out sorted ascending by bit pattern.  Without a parity
    filter the dimension is C(2L, N).
    """
    if L < 1:
        raise ValueError(f"need at least one rung, got L={L}")
    n_modes = 2 * L
    if n_modes > MAX_MODES:
        raise ValueError(f"L={L} exceeds the uint64 mode budget")
    if not 0 <= N <= n_modes:
        raise ValueError(f"particle number N={N} outside [0, {n_modes}]")
    if parity_filter not in (None, 1, -1):
        raise ValueError("parity_filter must be +1, -1 or None")

    states = []
    for occ in combinations(range(n_modes), N):
        bits = 0
        for m in occ:
            bits |= 1 << m
        if parity_filter is not None and leg_parity(bits) != parity_filter:
            continue
        states.append(bits)
    arr = np.sort(np.asarray(states, dtype=np.uint64))
    return SectorBasis(n_modes, N, parity_filter, arr)


def full_fock_basis(n_modes: int) -> SectorBasis:
    """All 2^n_modes occupation states of a generic mode chain."""
    if not 1 <= n_modes <= 24:
        raise ValueError("full Fock basis limited to 24 modes")
    return SectorBasis(n_modes, None, None, np.arange(1 << n_modes, dtype=np.uint64))


def apply_term(term: FermionTerm, state: FockState):
    """Apply an operator string to a single Fock state.

    Returns ``(image_state, sign)`` or ``None`` if a factor annihilates an
    empty mode / doubly creates.  The sign is the accumulated JW parity;
    the term coefficient is not folded in.
    """
    cur = int(state)
    par = 0
    for mode, create in reversed(term.factors):
        bit = 1 << mode
        occ = (cur >> mode) & 1
        if (occ == 1) == create:
            return None
        par ^= (cur & (bit - 1)).bit_count() & 1
        cur ^= bit
    return cur, (1 if par == 0 else -1)


def _check_terms(terms: Sequence[FermionTerm], basis_in: SectorBasis,
                 basis_out: SectorBasis) -> None:
    for t in terms:
        if t.max_mode() >= basis_in.n_modes:
            raise ValueError(f"term {t} references mode beyond basis ({basis_in.n_modes} modes)")
        if basis_in.N is not None and basis_out.N is not None:
            delta = sum(1 if c else -1 for _, c in t.factors)
            if delta != basis_out.N - basis_in.N:
                raise ValueError(
                    f"term {t} changes particle number by {delta}, "
                    f"incompatible with sectors N={basis_in.N} -> N={basis_out.N}"
                )
        if basis_in.parity_filter is not None or basis_out.parity_filter is not None:
            flips = not t.preserves_leg_parity()
            pin = basis_in.parity_filter
            pout = basis_out.parity_filter
            if pin is not None and pout is not None:
                if flips != (pin != pout):
                    raise ValueError(f"term {t} maps outside the leg-parity sector")
            elif flips:
                raise ValueError(f"term {t} breaks leg parity on a parity-filtered basis")


def build_sparse_between(terms: Sequence[FermionTerm], basis_in: SectorBasis,
                         basis_out: SectorBasis) -> sp.csr_matrix:
    """Assemble sum(terms) as a raw (possibly rectangular) sparse matrix."""
    _check_terms(terms, basis_in, basis_out)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for t in terms:
        if t.coefficient == 0:
            continue
        if not t.factors:
            idx = basis_out.index_of_many(basis_in.states)
            rows.append(idx)
            cols.append(np.arange(basis_in.dim))
            vals.append(np.full(basis_in.dim, t.coefficient, dtype=np.complex128))
            continue
        modes = np.array([m for m, _ in t.factors], dtype=np.int64)
        creates = np.array([c for _, c in t.factors], dtype=np.uint8)
        ok, out, sign = kernels.term_action(basis_in.states, modes, creates)
        if not ok.any():
            continue
        src = np.flatnonzero(ok)
        images = out[ok]
        idx = np.searchsorted(basis_out.states, images)
        bad = (idx >= basis_out.dim) | (basis_out.states[np.minimum(idx, basis_out.dim - 1)] != images)
        if bad.any():
            raise ValueError(f"term {t} maps states outside the target sector")
        rows.append(idx)
        cols.append(src)
        vals.append(t.coefficient * sign[ok])
    if rows:
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(basis_out.dim, basis_in.dim),
            dtype=np.complex128,
        ).tocsr()
        mat.sum_duplicates()
    else:
        mat = sp.csr_matrix((basis_out.dim, basis_in.dim), dtype=np.complex128)
    return mat


def build_sparse(terms: Sequence[FermionTerm], basis: SectorBasis) -> SparseOperator:
    """Assemble a number-conserving operator on one sector.

    Terms that change the particle number are rejected by name; on a
    parity-filtered basis the same holds for parity-breaking terms.
    """
    if basis.N is not None:
        for t in terms:
            if not t.conserves_number():
                raise ValueError(f"term {t} does not conserve particle number")
    return SparseOperator(basis, build_sparse_between(terms, basis, basis))


def embed(psi: np.ndarray, sub: SectorBasis, full: SectorBasis) -> np.ndarray:
    """Scatter a vector on a filtered basis into an enclosing basis."""
    out = np.zeros(full.dim, dtype=np.complex128)
    out[full.index_of_many(sub.states)] = psi
    return out
