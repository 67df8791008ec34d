import json

import numpy as np
import pytest
from hypothesis import given
from scipy.stats import unitary_group

from ecoh.battery_models import HADAMARD, LadderBattery, qubit_ladder_channel, sine_ladder_state
from ecoh.coherence import entropic_coherence
from ecoh.errors import BlockShapeError, DimensionLimitError, DomainError, ShapeMismatchError
from ecoh.quantum_core import (
    CompositeLabel,
    DensityOperator,
    Hamiltonian,
    PureState,
    commutator,
    fidelity,
    partial_trace,
    random_density,
    random_energy_preserving_unitary,
    random_pure_state,
    tensor,
)
from ecoh.tep_channels import (
    TepChannel,
    WorstCaseOptions,
    apply,
    apply_extended,
    assemble_block_unitary,
    choi_infidelity,
    fvdg_interval,
    load_channel_bundle,
    mcopy_discrepancy,
    qubit_construction_state,
    unitary_pair_worst_fidelity,
    worst_case_infidelity,
)

from strategies import seeds

FAST = WorstCaseOptions(starts=6, max_iters=2000)


def random_tep(d_s: int, d_b: int, seed: int) -> TepChannel:
    rng = np.random.default_rng(seed)
    hs = Hamiltonian.from_energies(rng.integers(0, 3, size=d_s).astype(float))
    hb = Hamiltonian.from_energies(rng.integers(0, 3, size=d_b).astype(float))
    u = random_energy_preserving_unitary(tensor(hs, hb), seed)
    return TepChannel(hs, hb, random_density(d_b, seed + 1), u)


def decoupled(v) -> TepChannel:
    """Channel that implements ``v`` exactly on a fully degenerate system."""
    d = v.shape[0]
    hs, hb = Hamiltonian.from_energies(np.zeros(d)), Hamiltonian.from_energies([0.0, 1.0])
    return TepChannel(hs, hb, random_density(2, 0), np.kron(v, np.eye(2)))


def dense_apply(ch: TepChannel, rho: np.ndarray) -> np.ndarray:
    joint = ch.U_SB @ np.kron(rho, ch.beta_B.matrix) @ ch.U_SB.conj().T
    return partial_trace(joint, CompositeLabel((ch.d_S, ch.d_B)), [0]).matrix


# ------------------------------------------------------------- construction


def test_channel_rejects_non_conserving_unitary():
    hs, hb = Hamiltonian.from_energies([0, 1]), Hamiltonian.from_energies([0, 1])
    with pytest.raises(DomainError):
        TepChannel(hs, hb, random_density(2, 0), np.kron(HADAMARD, np.eye(2)))
    with pytest.raises(ShapeMismatchError):
        TepChannel(hs, hb, random_density(3, 0), np.eye(4))


def test_channel_bundle_round_trip(tmp_path):
    ch = random_tep(2, 3, 4)
    path = tmp_path / "ch.json"
    path.write_text(json.dumps(ch.to_json(name="rand", target_gate=HADAMARD)))
    back, target, meta = load_channel_bundle(path)
    assert meta["name"] == "rand"
    assert np.allclose(target, HADAMARD)
    assert np.allclose(back.U_SB, ch.U_SB) and np.allclose(back.beta_B.matrix, ch.beta_B.matrix)


# -------------------------------------------------------- block assembly


def test_assemble_block_unitary_examples():
    h = Hamiltonian.from_energies([0, 1, 2])
    assert np.allclose(assemble_block_unitary(h, [np.eye(1)] * 3), np.eye(3))
    th = [0.3, 1.1, -2.0]
    u = assemble_block_unitary(h, [np.exp(1j * t) * np.eye(1) for t in th])
    assert np.allclose(u, np.diag(np.exp(1j * np.array(th))))


def test_assemble_block_unitary_degenerate_dim8():
    h = Hamiltonian.from_energies([0, 0, 1, 1, 1, 2, 2, 2])
    blocks = [unitary_group.rvs(k, random_state=i) for i, k in enumerate(h.degeneracies)]
    u = assemble_block_unitary(h, blocks)
    assert np.max(np.abs(commutator(u, h.matrix))) < 1e-12
    for b, w in zip(h.bases, blocks):
        assert np.allclose(b.conj().T @ u @ b, w)


def test_assemble_block_unitary_shape_errors():
    h = Hamiltonian.from_energies([0, 0, 1])
    with pytest.raises(BlockShapeError):
        assemble_block_unitary(h, [np.eye(1), np.eye(1)])
    with pytest.raises(BlockShapeError):
        assemble_block_unitary(h, [np.eye(2)])


# ---------------------------------------------------------------- apply


def test_apply_examples():
    ch = TepChannel(Hamiltonian.from_energies([0, 1]), Hamiltonian.from_energies([0, 1]), random_density(2, 1), np.eye(4))
    rho = random_density(2, 2)
    assert np.allclose(apply(ch, rho).matrix, rho.matrix)
    us = np.diag(np.exp(1j * np.array([0.4, -1.3])))
    ub = np.diag(np.exp(1j * np.array([0.9, 0.2])))
    ch = TepChannel(ch.H_S, ch.H_B, ch.beta_B, np.kron(us, ub))
    assert np.allclose(apply(ch, rho).matrix, us @ rho.matrix @ us.conj().T)


@given(seeds)
def test_apply_matches_dense_dilation(seed):
    ch = random_tep(2, 4, seed)
    rho = random_density(2, seed + 3).matrix
    out = apply(ch, rho).matrix
    assert np.max(np.abs(out - dense_apply(ch, rho))) < 1e-12
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.linalg.eigvalsh(out)[0] > -1e-10


@given(seeds)
def test_apply_conserves_total_energy(seed):
    ch = random_tep(3, 3, seed)
    rho = random_density(3, seed + 5).matrix
    joint_in = np.kron(rho, ch.beta_B.matrix)
    joint_out = ch.U_SB @ joint_in @ ch.U_SB.conj().T
    h = ch.H_total.matrix
    assert np.trace(h @ joint_in).real == pytest.approx(np.trace(h @ joint_out).real, abs=1e-10)


def test_coherence_budget_200_setups():
    rng = np.random.default_rng(0)
    worst = np.inf
    for i in range(200):
        d_s, d_b, d_a = int(rng.integers(2, 4)), int(rng.integers(2, 5)), int(rng.integers(1, 4))
        ch = random_tep(d_s, d_b, 10 * i)
        ha = Hamiltonian.from_energies(rng.integers(0, 3, size=d_a).astype(float))
        h_sa = tensor(ch.H_S, ha)
        rho = random_density(d_s * d_a, 10 * i + 7)
        out = apply_extended(ch, rho, d_a)
        slack = entropic_coherence(ch.beta_B, ch.H_B) - (entropic_coherence(out, h_sa) - entropic_coherence(rho, h_sa))
        worst = min(worst, slack)
    assert worst >= -1e-8


# ------------------------------------------------------------- infidelity


def test_exact_channel_has_zero_infidelities():
    v = unitary_group.rvs(2, random_state=3)
    ch = decoupled(v)
    assert choi_infidelity(ch, v) == pytest.approx(0.0, abs=1e-12)
    rep = worst_case_infidelity(ch, v, FAST)
    for x in (rep.eps_choi, rep.eps_wc_lower, rep.eps_wc_estimate, rep.eps_wc_upper, rep.diamond_lower):
        assert x == pytest.approx(0.0, abs=1e-12)
    assert rep.diamond_upper <= 1e-6


def test_fvdg_interval_examples():
    assert fvdg_interval(0.0) == (0.0, 0.0)
    assert fvdg_interval(1.0) == (1.0, 1.0)
    lo, hi = fvdg_interval(0.04)
    assert lo == pytest.approx(1 - np.sqrt(0.96)) and hi == pytest.approx(0.2)
    assert lo == pytest.approx(0.0202, abs=1e-4)
    with pytest.raises(DomainError):
        fvdg_interval(1.5)


@given(seeds)
def test_unitary_pair_matches_eigenvalue_arc_oracle(seed):
    d = 2 + seed % 2
    v = unitary_group.rvs(d, random_state=seed % 2**31)
    w = unitary_group.rvs(d, random_state=(seed + 1) % 2**31)
    ch = decoupled(w)
    rep = worst_case_infidelity(ch, v, WorstCaseOptions(starts=8, max_iters=4000))
    assert rep.eps_wc_estimate == pytest.approx(1 - unitary_pair_worst_fidelity(v, w), abs=1e-7)


def test_unitary_pair_oracle_examples():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    assert unitary_pair_worst_fidelity(x, np.eye(2)) == pytest.approx(0.0)
    z = np.diag([1, 1j])
    assert unitary_pair_worst_fidelity(z, np.eye(2)) == pytest.approx(np.cos(np.pi / 4) ** 2)


def dense_choi_infidelity(ch: TepChannel, v: np.ndarray) -> float:
    d_s, d_b = ch.d_S, ch.d_B
    omega = np.eye(d_s).reshape(-1) / np.sqrt(d_s)
    # order S, B, A
    rho_sa = np.outer(omega, omega.conj()).reshape(d_s, d_s, d_s, d_s)
    joint = np.einsum("iajb,kl->ikajlb", rho_sa, ch.beta_B.matrix).reshape(d_s * d_b * d_s, -1)
    big_u = np.kron(ch.U_SB, np.eye(d_s))
    out = partial_trace(big_u @ joint @ big_u.conj().T, CompositeLabel((d_s, d_b, d_s)), [0, 2])
    target = np.kron(v, np.eye(d_s)) @ omega
    return 1 - fidelity(out, PureState(target))


def test_choi_infidelity_matches_dense_oracle_ladder_l16():
    battery = LadderBattery(18)
    ch = qubit_ladder_channel(HADAMARD, battery, sine_ladder_state(18, 1, 16))
    assert choi_infidelity(ch, HADAMARD) == pytest.approx(dense_choi_infidelity(ch, HADAMARD), abs=1e-12)


@given(seeds)
def test_choi_sandwich_on_random_channels(seed):
    ch = random_tep(2 + seed % 2, 3, seed)
    v = unitary_group.rvs(ch.d_S, random_state=seed % 2**31)
    rep = worst_case_infidelity(ch, v, FAST)
    assert rep.eps_wc_lower <= rep.eps_wc_estimate <= rep.eps_wc_upper
    assert rep.eps_choi - 1e-9 <= rep.eps_wc_estimate <= ch.d_S * rep.eps_choi + 1e-9
    assert 0 <= rep.diamond_lower <= rep.diamond_upper <= 1
    assert choi_infidelity(ch, v) == pytest.approx(dense_choi_infidelity(ch, v), abs=1e-10)


def test_ladder_estimate_strictly_decreasing():
    vals = []
    for length in (4, 8, 16, 32):
        battery = LadderBattery(length + 2)
        ch = qubit_ladder_channel(HADAMARD, battery, sine_ladder_state(length + 2, 1, length))
        rep = worst_case_infidelity(ch, HADAMARD, FAST)
        assert rep.converged
        vals.append(rep.eps_wc_estimate)
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_worst_case_estimate_attained_by_reported_input():
    ch = random_tep(2, 3, 21)
    v = unitary_group.rvs(2, random_state=4)
    rep = worst_case_infidelity(ch, v, FAST)
    x = rep.worst_input.reshape(2, 2)
    rho_sa = PureState.normalized(x.reshape(-1)).density()
    out = apply_extended(ch, rho_sa, 2)
    ideal = np.kron(v, np.eye(2)) @ rho_sa.matrix @ np.kron(v, np.eye(2)).conj().T
    assert 1 - fidelity(out, DensityOperator(ideal, check=False)) == pytest.approx(rep.eps_wc_estimate, abs=1e-8)


# ---------------------------------------------------------------- m copies


def test_mcopy_exact_channel_is_zero():
    v = unitary_group.rvs(2, random_state=5)
    ch = decoupled(v)
    psi, d_ref = qubit_construction_state(1)
    assert mcopy_discrepancy(ch, v, 1, psi, d_ref) == pytest.approx(0.0, abs=1e-10)
    assert mcopy_discrepancy(ch, v, 1, random_density(4 * d_ref, 1), d_ref) == pytest.approx(0.0, abs=1e-10)


def test_mcopy_m1_ladder_d8():
    battery = LadderBattery(8)
    ch = qubit_ladder_channel(HADAMARD, battery, sine_ladder_state(8, 1, 6))
    rep = worst_case_infidelity(ch, HADAMARD, FAST)
    psi, d_ref = qubit_construction_state(1)
    d = mcopy_discrepancy(ch, HADAMARD, 1, psi, d_ref)
    assert 0 < d <= 4 * np.sqrt(rep.eps_wc_estimate) + 1e-9


def test_mcopy_single_copy_pair_matches_dense_oracle():
    ch = random_tep(2, 3, 9)
    v = unitary_group.rvs(2, random_state=2)
    psi = random_pure_state(4 * 2, seed=3)
    d_ref = 2
    # oracle: explicit S1 S2 R B vector, U on (S1,B), then U† on (S2,B)
    vec = np.kron(psi.vector, np.ones(1))
    bat_w, bat_v = np.linalg.eigh(ch.beta_B.matrix)
    real = np.zeros((8, 8), dtype=complex)
    u = ch.U_SB.reshape(2, 3, 2, 3)
    ud = ch.U_SB.conj().T.reshape(2, 3, 2, 3)
    for p, b in zip(bat_w, bat_v.T):
        if p < 1e-14:
            continue
        t = np.einsum("xyr,b->xyrb", vec.reshape(2, 2, 2), b)
        t = np.einsum("ikxb,xyrb->iyrk", u, t)
        t = np.einsum("jkyb,iyrb->ijrk", ud, t)
        flat = t.reshape(8, 3)
        real += p * flat @ flat.conj().T
    ideal_vec = np.kron(np.kron(v, v.conj().T), np.eye(2)) @ psi.vector
    oracle = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(real - np.outer(ideal_vec, ideal_vec.conj()))))
    assert mcopy_discrepancy(ch, v, 1, psi, d_ref) == pytest.approx(oracle, abs=1e-10)


def test_mcopy_dimension_limit():
    battery = LadderBattery(64)
    ch = qubit_ladder_channel(HADAMARD, battery, sine_ladder_state(64, 1, 62))
    psi, d_ref = qubit_construction_state(6)
    with pytest.raises(DimensionLimitError):
        mcopy_discrepancy(ch, HADAMARD, 6, psi, d_ref)
