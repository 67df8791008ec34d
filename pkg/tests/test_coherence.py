import json

import numpy as np
import pytest
from hypothesis import given

from ecoh.coherence import (
    EnergyDistribution,
    coherence_continuity_bound,
    energy_distribution,
    entropic_coherence,
    is_incoherent,
    local_coherence,
    pure_lift,
    refined_fannes_audenaert,
    relative_entropy,
    twirl,
)
from ecoh.errors import BasisRequiredError
from ecoh.iid_entropy import DiscreteRV, sum_distribution
from ecoh.quantum_core import (
    CompositeLabel,
    Hamiltonian,
    PureState,
    binary_entropy,
    commutator,
    partial_trace,
    random_density,
    random_energy_preserving_unitary,
    random_hermitian,
    random_pure_state,
    tensor,
    trace_distance,
    von_neumann_entropy,
)

from strategies import seeds, small_dims

H01 = Hamiltonian.from_energies([0.0, 1.0])
PLUS = PureState(np.array([1, 1]) / np.sqrt(2))


def random_degenerate_h(d: int, seed: int) -> Hamiltonian:
    """Integer spectrum with repeats, in a random eigenbasis."""
    rng = np.random.default_rng(seed)
    levels = rng.integers(0, max(2, d // 2), size=d).astype(float)
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return Hamiltonian.from_matrix((q * levels) @ q.conj().T)


def random_incoherent(h: Hamiltonian, seed: int) -> np.ndarray:
    return twirl(random_density(h.dim, seed), h).matrix


# ---------------------------------------------------------------- twirl


def test_twirl_examples():
    e1 = PureState(np.array([0, 1])).density()
    assert np.allclose(twirl(e1, H01).matrix, e1.matrix)
    assert np.allclose(twirl(PLUS.density(), H01).matrix, np.eye(2) / 2)


def test_twirl_matches_projector_sandwich_oracle():
    h = random_degenerate_h(6, seed=2)
    rho = random_density(6, seed=3).matrix
    oracle = sum(p @ rho @ p for p in h.projectors)
    assert np.max(np.abs(twirl(rho, h).matrix - oracle)) < 1e-12


@given(seeds, small_dims)
def test_twirl_properties(seed, d):
    h = random_degenerate_h(d, seed)
    rho = random_density(d, seed + 1)
    t = twirl(rho, h).matrix
    assert np.max(np.abs(commutator(t, h.matrix))) < 1e-9
    assert np.max(np.abs(twirl(t, h).matrix - t)) < 1e-12
    assert von_neumann_entropy(t) >= von_neumann_entropy(rho) - 1e-10


# ----------------------------------------------------- entropic coherence


def test_coherence_examples():
    assert entropic_coherence(PLUS, H01) == pytest.approx(1.0)
    assert entropic_coherence(PLUS.density(), H01) == pytest.approx(1.0)
    assert entropic_coherence(np.diag([0.3, 0.7]), H01) == pytest.approx(0.0, abs=1e-12)
    for length in (3, 5, 16):
        h = Hamiltonian.from_energies(np.arange(length))
        psi = PureState(np.ones(length) / np.sqrt(length))
        assert entropic_coherence(psi, h) == pytest.approx(np.log2(length))


@given(seeds, small_dims)
def test_coherence_nonnegative_and_pure_cap(seed, d):
    h = random_degenerate_h(d, seed)
    psi = random_pure_state(d, seed + 1)
    c = entropic_coherence(psi, h)
    assert -1e-12 <= c <= np.log2(len(h.energies)) + 1e-12
    assert c == pytest.approx(entropic_coherence(psi.density(), h), abs=1e-9)
    assert entropic_coherence(random_incoherent(h, seed), h) == pytest.approx(0.0, abs=1e-9)


# ------------------------------------------------------- relative entropy


def test_relative_entropy_basics():
    rho = random_density(3, seed=1)
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)
    assert relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0])) == float("inf")
    # classical oracle: KL divergence of diagonal states
    p, q = np.array([0.2, 0.8]), np.array([0.5, 0.5])
    assert relative_entropy(np.diag(p), np.diag(q)) == pytest.approx(float(np.sum(p * np.log2(p / q))))


def test_definition_equivalence_200_instances():
    rng = np.random.default_rng(0)
    for i in range(200):
        d = int(rng.integers(2, 7))
        h = random_degenerate_h(d, i)
        rho = random_density(d, 1000 + i)
        c = entropic_coherence(rho, h)
        assert abs(c - relative_entropy(rho, twirl(rho, h))) <= 1e-9
        sigma = random_incoherent(h, 2000 + i)
        assert relative_entropy(rho, sigma) >= c - 1e-9


# ------------------------------------------------------------ incoherence


def test_is_incoherent_examples():
    h = Hamiltonian.from_energies([0, 1, 1])
    mix = 0.3 * h.projectors[0] + 0.35 * h.projectors[1]
    assert is_incoherent(mix, h)
    assert not is_incoherent(PLUS.density(), H01)
    assert is_incoherent(twirl(random_density(3, seed=4), h), h)


# ------------------------------------------------------- local coherence


def test_local_coherence_examples():
    ha, hb = Hamiltonian.from_energies([0, 1]), Hamiltonian.from_energies([0, -1])
    prod = tensor(np.diag([0.4, 0.6]), np.diag([0.1, 0.9]))
    assert local_coherence(prod, ha, hb) == pytest.approx(0.0, abs=1e-12)
    psi = PureState(np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert entropic_coherence(psi, tensor(ha, hb)) == pytest.approx(0.0, abs=1e-12)
    assert local_coherence(psi.density(), ha, hb) == pytest.approx(1.0)


def test_local_coherence_dominates_total_200_draws():
    for i in range(200):
        ha = Hamiltonian.from_matrix(random_hermitian(2, 3 * i))
        hb = random_degenerate_h(3, 3 * i + 1)
        rho = random_density(6, 3 * i + 2)
        assert local_coherence(rho, ha, hb) >= entropic_coherence(rho, tensor(ha, hb)) - 1e-9


# --------------------------------------------------- energy distribution


def test_energy_distribution_examples():
    d = energy_distribution(PureState(np.array([0, 1, 0])), Hamiltonian.from_energies([0, 1, 2]))
    assert d.support == [(1.0, 1.0)]
    d = energy_distribution(PLUS, H01)
    assert d.energies.tolist() == [0.0, 1.0]
    assert np.allclose(d.probs, [0.5, 0.5])


def test_energy_distribution_entropy_matches_twirl():
    h = random_degenerate_h(5, 1)
    psi = random_pure_state(5, 2)
    assert energy_distribution(psi, h).entropy() == pytest.approx(von_neumann_entropy(twirl(psi.density(), h)), abs=1e-9)


def test_energy_distribution_of_product_is_convolution():
    energies = [0, 1, 3]
    h = Hamiltonian.from_energies(energies)
    psi = random_pure_state(3, seed=8)
    single = energy_distribution(psi, h)
    pair = energy_distribution(tensor(psi, psi), tensor(h, h))
    oracle = sum_distribution(DiscreteRV.from_values([str(int(e)) for e in single.energies], single.probs), 2)
    assert np.allclose(np.sort(oracle.float_values), pair.energies)
    order = np.argsort(oracle.float_values)
    assert np.allclose(oracle.probs[order], pair.probs, atol=1e-12)


def test_energy_distribution_json_round_trip():
    d = energy_distribution(random_pure_state(3, 1), Hamiltonian.from_energies([0, 1, 2]))
    back = EnergyDistribution.from_json(json.loads(json.dumps(d.to_json())))
    assert np.allclose(back.probs, d.probs) and np.allclose(back.energies, d.energies)


# ----------------------------------------------------------- pure lift


def test_pure_lift_examples():
    e1 = PureState(np.array([0, 1]))
    lifted = pure_lift(e1.density(), H01)
    assert abs(np.vdot(lifted.vector, e1.vector)) == pytest.approx(1.0)
    lifted = pure_lift(np.eye(2) / 2, H01)
    assert np.allclose(lifted.vector, PLUS.vector)
    assert entropic_coherence(np.eye(2) / 2, H01) == pytest.approx(0.0, abs=1e-12)
    assert entropic_coherence(lifted, H01) == pytest.approx(1.0)


def test_pure_lift_requires_basis_for_degenerate_h():
    h = Hamiltonian.from_energies([0, 1, 1])
    with pytest.raises(BasisRequiredError):
        pure_lift(np.eye(3) / 3, h)
    lifted = pure_lift(np.eye(3) / 3, h, basis_choice="stored")
    assert entropic_coherence(lifted, h) >= 0


def test_pure_lift_raises_coherence_200_draws():
    rng = np.random.default_rng(5)
    for i in range(200):
        d = int(rng.integers(2, 7))
        h = random_degenerate_h(d, i)
        sigma = random_density(d, 500 + i)
        lifted = pure_lift(sigma, h, basis_choice="stored")
        assert np.allclose(energy_distribution(lifted, h).probs, energy_distribution(sigma, h).probs, atol=1e-9)
        assert entropic_coherence(lifted, h) >= entropic_coherence(sigma, h) - 1e-9


# -------------------------------------------------------- continuity


def test_refined_fannes_audenaert_examples():
    rho = random_density(3, 1)
    assert refined_fannes_audenaert(rho, rho).bound == 0.0
    t = 0.1
    res = refined_fannes_audenaert(np.diag([1.0, 0.0]), np.diag([1 - t, t]))
    assert res.D == pytest.approx(t)
    assert res.S_plus == pytest.approx(0.0, abs=1e-12) and res.S_minus == pytest.approx(0.0, abs=1e-12)
    assert res.bound == pytest.approx(binary_entropy(t))
    assert binary_entropy(t) == pytest.approx(0.469, abs=1e-3)
    rev = refined_fannes_audenaert(np.diag([1 - t, t]), np.diag([1.0, 0.0]))
    assert rev.bound == pytest.approx(von_neumann_entropy(np.diag([1 - t, t])))


def test_refined_fannes_audenaert_500_pairs():
    rng = np.random.default_rng(9)
    for i in range(500):
        d = int(rng.integers(2, 9))
        rho = random_density(d, 2 * i, int(rng.integers(1, d + 1)))
        sigma = random_density(d, 2 * i + 1)
        res = refined_fannes_audenaert(rho, sigma)
        assert res.D == pytest.approx(trace_distance(rho, sigma), abs=1e-10)
        assert von_neumann_entropy(rho) - von_neumann_entropy(sigma) <= res.bound + 1e-9


# ------------------------------------------------------------- axioms


@given(seeds)
def test_c1_invariance_under_energy_preserving_unitaries(seed):
    d = 2 + seed % 7
    h = random_degenerate_h(d, seed)
    rho = random_density(d, seed + 1)
    u = random_energy_preserving_unitary(h, seed + 2)
    assert abs(entropic_coherence(u @ rho.matrix @ u.conj().T, h) - entropic_coherence(rho, h)) <= 1e-8


@given(seeds)
def test_c2_monotone_under_partial_trace(seed):
    ha, hb = random_degenerate_h(2, seed), random_degenerate_h(3, seed + 1)
    rho = random_density(6, seed + 2)
    reduced = partial_trace(rho, CompositeLabel((2, 3)), [1])
    assert entropic_coherence(rho, tensor(ha, hb)) >= entropic_coherence(reduced, hb) - 1e-9


@given(seeds)
def test_c3_subadditive_on_products(seed):
    ha, hb = random_degenerate_h(3, seed), random_degenerate_h(2, seed + 1)
    rho, sigma = random_density(3, seed + 2), random_density(2, seed + 3)
    total = entropic_coherence(tensor(rho, sigma), tensor(ha, hb))
    assert total <= entropic_coherence(rho, ha) + entropic_coherence(sigma, hb) + 1e-9


@given(seeds, small_dims)
def test_c4_continuity(seed, d):
    h = random_degenerate_h(d, seed)
    rho, sigma = random_density(d, seed + 1), random_density(d, seed + 2)
    dist = trace_distance(rho, sigma)
    gap = abs(entropic_coherence(rho, h) - entropic_coherence(sigma, h))
    assert gap <= coherence_continuity_bound(dist, d) + 1e-9
