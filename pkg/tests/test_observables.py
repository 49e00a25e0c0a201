import math

import numpy as np
import pytest
from scipy.linalg import eigh

from majorana_ladder.fockspace import (
    FermionTerm,
    build_sparse,
    enumerate_sector,
    full_fock_basis,
)
from majorana_ladder.floquet import PropagationPlan
from majorana_ladder.models import (
    DriveParams,
    ModelParams,
    h0_terms,
    h_eff_pulse_terms,
    ladder_pairhop_w_terms,
)
from majorana_ladder.observables import (
    charge_gaps,
    entanglement_spectrum,
    ground_states,
    mode_entanglement_weights,
    order_parameter,
    parity_change_probability,
    two_point,
)

HALF_PI = math.pi / 2.0


def ground_state(terms, basis):
    return ground_states(build_sparse(terms, basis), k=1)[0]


# ---------------------------------------------------------------------------
# parity-change series
# ---------------------------------------------------------------------------


def test_parity_change_zero_under_effective_hamiltonian():
    basis = enumerate_sector(2, 2)
    plan = PropagationPlan(
        scheme="effective_static",
        model=ModelParams(U0=-0.7, L=2),
        drive=DriveParams(T=0.2, alpha=1.0 / 3.0),
        n_periods=60,
        samples_per_period=4,
    )
    series = parity_change_probability(plan, basis)
    assert series.mean_probability.max() < 1e-10


def test_parity_change_positive_at_mid_period_under_exact_drive():
    basis = enumerate_sector(2, 2)
    plan = PropagationPlan(
        scheme="pulse_sequence",
        model=ModelParams(U0=-0.7, L=2),
        drive=DriveParams(T=0.2, alpha=1.0 / 3.0),
        n_periods=5,
        samples_per_period=16,
    )
    series = parity_change_probability(plan, basis)
    strobe = series.stroboscopic()[1]
    inside = series.mean_probability[~series.stroboscopic_mask]
    assert strobe.max() < 1e-12
    assert inside.max() > 0.05


def test_parity_change_grows_when_detuned():
    basis = enumerate_sector(2, 2)
    plan = PropagationPlan(
        scheme="pulse_sequence",
        model=ModelParams(U0=-0.7, L=2),
        drive=DriveParams(T=0.2, alpha=1.0 / 3.0, eta=HALF_PI + 0.1),
        n_periods=100,
        samples_per_period=1,
    )
    series = parity_change_probability(plan, basis)
    ts, vals = series.stroboscopic()
    assert vals[ts <= 1.0].max() < 2e-3
    assert vals.max() > 0.03


def test_parity_change_requires_both_classes():
    basis = enumerate_sector(2, 2, +1)
    plan = PropagationPlan(
        scheme="effective_static",
        model=ModelParams(U0=-0.7, L=2),
        drive=DriveParams(T=0.2, alpha=0.5),
    )
    with pytest.raises(ValueError):
        parity_change_probability(plan, basis)


# ---------------------------------------------------------------------------
# ground states
# ---------------------------------------------------------------------------


def test_ground_states_diagonal_matrix():
    basis = enumerate_sector(2, 2)
    terms = [
        FermionTerm(float(k), ((m, True), (m, False)))
        for k, m in enumerate((0, 1, 2, 3))
    ]
    op = build_sparse(terms, basis)
    pairs = ground_states(op, k=3)
    w = np.sort(np.real(np.diag(op.toarray())))
    np.testing.assert_allclose([e for e, _ in pairs], w[:3], atol=1e-12)


def test_ground_state_energy_free_fermion_oracle():
    L, N = 5, 4
    basis = enumerate_sector(L, N)
    e0, _ = ground_state(h0_terms(ModelParams(U0=0.0, L=L)), basis)
    eps = sorted(
        -2.0 * math.cos(k * math.pi / (L + 1)) for k in range(1, L + 1)
    )
    doubled = sorted(eps + eps)
    assert e0 == pytest.approx(sum(doubled[:N]), abs=1e-10)


def test_ground_states_sparse_path_matches_dense(monkeypatch):
    basis = enumerate_sector(3, 3)  # dim 20
    terms = h_eff_pulse_terms(ModelParams(U0=-1.2, L=3), 0.5)
    op = build_sparse(terms, basis)
    dense_pairs = ground_states(op, k=2)
    monkeypatch.setattr("majorana_ladder.observables.DENSE_MAX_DIM", 4)
    sparse_pairs = ground_states(op, k=2)
    for (e1, _), (e2, _) in zip(dense_pairs, sparse_pairs):
        assert e1 == pytest.approx(e2, abs=1e-10)
    # the lowest pair is parity-degenerate, so compare spanned subspaces
    v_dense = np.stack([v for _, v in dense_pairs], axis=1)
    v_sparse = np.stack([v for _, v in sparse_pairs], axis=1)
    overlap = v_dense.conj().T @ v_sparse
    np.testing.assert_allclose(np.linalg.svd(overlap, compute_uv=False), 1.0, atol=1e-8)


# ---------------------------------------------------------------------------
# charge gaps
# ---------------------------------------------------------------------------


def test_charge_gaps_free_fermion_half_spacing():
    L, N = 5, 4
    report = charge_gaps(h0_terms(ModelParams(U0=0.0, L=L)), L, N)
    eps = sorted(-2.0 * math.cos(k * math.pi / (L + 1)) for k in range(1, L + 1))
    expected = 0.5 * (eps[2] - eps[1])
    assert report.Delta_topo == pytest.approx(expected, abs=1e-10)
    assert report.Delta_topo == pytest.approx(
        0.5 * (report.Delta_Qplus + report.Delta_Qminus)
    )


def test_charge_gaps_alpha_mirror_symmetry():
    L, N = 4, 4
    p = ModelParams(U0=-1.5, L=L)
    r1 = charge_gaps(h_eff_pulse_terms(p, 0.3), L, N)
    r2 = charge_gaps(h_eff_pulse_terms(p, 0.7), L, N)
    assert r1.Delta_topo == pytest.approx(r2.Delta_topo, abs=1e-9)
    assert r1.Delta_Q0 == pytest.approx(r2.Delta_Q0, abs=1e-9)


def test_charge_gaps_w_ladder_decoupled_limit():
    L, N = 5, 4
    free = charge_gaps(h0_terms(ModelParams(U0=0.0, L=L)), L, N)
    wlad = charge_gaps(ladder_pairhop_w_terms(1.0, 0.0, L), L, N)
    assert wlad.Delta_topo == pytest.approx(free.Delta_topo, abs=1e-10)


def test_charge_gaps_rejects_boundary_filling():
    with pytest.raises(ValueError):
        charge_gaps(h0_terms(ModelParams(U0=0.0, L=3)), 3, 0)


# ---------------------------------------------------------------------------
# two-point function
# ---------------------------------------------------------------------------


def test_two_point_density_range():
    basis = enumerate_sector(3, 3)
    _, psi = ground_state(h0_terms(ModelParams(U0=-1.0, L=3)), basis)
    for i in range(3):
        d = two_point(psi, basis, "a", i, i)
        assert abs(d.imag) < 1e-12
        assert 0.0 <= d.real <= 1.0


def test_two_point_hermiticity_in_swap():
    basis = enumerate_sector(3, 2)
    _, psi = ground_state(h0_terms(ModelParams(U0=-0.8, L=3)), basis)
    c01 = two_point(psi, basis, "a", 0, 1)
    c10 = two_point(psi, basis, "a", 1, 0)
    assert c01 == pytest.approx(np.conj(c10), abs=1e-12)


def test_two_point_matches_slater_oracle():
    # U0 = 0: each leg independently fills its lowest orbitals, so
    # <a+_i a_j> is the free open-chain correlation of N/2 modes
    L, N = 6, 6
    basis = enumerate_sector(L, N)
    _, psi = ground_state(h0_terms(ModelParams(U0=0.0, L=L)), basis)

    def phi(k, i):
        return math.sqrt(2.0 / (L + 1)) * math.sin(k * math.pi * (i + 1) / (L + 1))

    for i in range(L):
        for j in range(L):
            oracle = sum(phi(k, i) * phi(k, j) for k in range(1, N // 2 + 1))
            got = two_point(psi, basis, "a", i, j)
            assert got.real == pytest.approx(oracle, abs=1e-9)
            assert abs(got.imag) < 1e-10


# ---------------------------------------------------------------------------
# order parameter
# ---------------------------------------------------------------------------


def test_order_parameter_vanishes_on_parity_eigenstates():
    basis = enumerate_sector(3, 2, parity_filter=+1)
    _, psi = ground_state(h_eff_pulse_terms(ModelParams(U0=-1.5, L=3), 0.5), basis)
    for j in range(3):
        assert abs(order_parameter(psi, basis, j)) < 1e-12


def test_order_parameter_nonzero_on_parity_superposition():
    basis = enumerate_sector(2, 2)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index_of((1 << 0) | (1 << 2))] = 1.0 / math.sqrt(2.0)  # a0 a1
    psi[basis.index_of((1 << 1) | (1 << 2))] = 1.0 / math.sqrt(2.0)  # b0 a1
    assert abs(order_parameter(psi, basis, 0)) == pytest.approx(0.5, abs=1e-12)


def test_order_parameter_vacuum():
    basis = enumerate_sector(2, 0)
    psi = np.ones(1, dtype=complex)
    assert order_parameter(psi, basis, 0) == 0


# ---------------------------------------------------------------------------
# entanglement spectrum
# ---------------------------------------------------------------------------


def test_entanglement_product_state_single_level():
    basis = enumerate_sector(3, 2)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index_of((1 << 0) | (1 << 3))] = 1.0
    levels = entanglement_spectrum(psi, basis, cut_rung=1)
    assert len(levels) == 1
    assert levels[0].xi == pytest.approx(0.0, abs=1e-12)
    assert levels[0].charge_left == 1
    assert levels[0].parity_left == -1


def test_entanglement_weights_sum_to_one():
    basis = enumerate_sector(4, 4)
    _, psi = ground_state(h_eff_pulse_terms(ModelParams(U0=-1.5, L=4), 0.5), basis)
    levels = entanglement_spectrum(psi, basis, cut_rung=2)
    total = sum(math.exp(-lv.xi) for lv in levels)
    assert total == pytest.approx(1.0, abs=1e-10)


def partial_trace_weights(psi, basis, n_left):
    # independent oracle: embed into the full 2^n space and trace out
    # the right modes by reshaping the coefficient tensor
    full = np.zeros(1 << basis.n_modes, dtype=complex)
    full[basis.states.astype(np.int64)] = psi
    m = full.reshape(1 << (basis.n_modes - n_left), 1 << n_left)
    rho_left = m.T @ m.conj()
    lam = np.sort(np.linalg.eigvalsh(rho_left))[::-1]
    return lam[lam > 1e-14]


def test_entanglement_matches_partial_trace_oracle():
    # labelled (blockwise) route on a leg-parity eigenstate
    rng = np.random.default_rng(3)
    L, N = 3, 3
    basis = enumerate_sector(L, N, parity_filter=-1)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    for cut in (1, 2):
        lam_oracle = partial_trace_weights(psi, basis, 2 * cut)
        levels = entanglement_spectrum(psi, basis, cut_rung=cut)
        lam = np.sort([math.exp(-lv.xi) for lv in levels])[::-1]
        np.testing.assert_allclose(lam, lam_oracle, atol=1e-12)


def test_mode_weights_match_partial_trace_for_generic_states():
    # the unblocked route must be exact for arbitrary superpositions
    rng = np.random.default_rng(4)
    basis = full_fock_basis(6)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    for n_left in (2, 3):
        lam_oracle = partial_trace_weights(psi, basis, n_left)
        lam = mode_entanglement_weights(psi, basis, n_left)
        lam = lam[lam > 1e-14]
        np.testing.assert_allclose(lam, lam_oracle, atol=1e-12)


def test_entanglement_rejects_parity_superpositions():
    basis = enumerate_sector(2, 2)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index_of((1 << 0) | (1 << 2))] = 1.0 / math.sqrt(2.0)
    psi[basis.index_of((1 << 1) | (1 << 2))] = 1.0 / math.sqrt(2.0)
    with pytest.raises(ValueError, match="parity"):
        entanglement_spectrum(psi, basis, cut_rung=1)


def test_entanglement_labels_are_consistent():
    basis = enumerate_sector(3, 3, parity_filter=-1)
    _, psi = ground_state(h_eff_pulse_terms(ModelParams(U0=-1.5, L=3), 0.5), basis)
    levels = entanglement_spectrum(psi, basis, cut_rung=1)
    for lv in levels:
        assert 0 <= lv.charge_left <= min(3, 2)
        # left parity times right parity must equal the state's parity
        assert lv.parity_left in (-1, 1)


def test_mode_entanglement_weights_match_labelled_spectrum():
    basis = enumerate_sector(3, 2, parity_filter=+1)
    rng = np.random.default_rng(9)
    psi = rng.normal(size=basis.dim) + 0j
    psi /= np.linalg.norm(psi)
    w = mode_entanglement_weights(psi, basis, n_left=2)
    levels = entanglement_spectrum(psi, basis, cut_rung=1)
    lam = np.sort([math.exp(-lv.xi) for lv in levels])[::-1]
    np.testing.assert_allclose(w[: lam.size], lam, atol=1e-12)


def test_entanglement_rejects_bad_cut():
    basis = enumerate_sector(3, 2)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[0] = 1.0
    with pytest.raises(ValueError):
        entanglement_spectrum(psi, basis, cut_rung=3)
