"""Entropic coherence with respect to a Hamiltonian and related continuity tools."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BasisRequiredError, ShapeMismatchError
from .quantum_core import (
    EIG_CLAMP,
    DensityOperator,
    Hamiltonian,
    PureState,
    as_matrix,
    binary_entropy,
    dagger,
    entropy_of_probs,
    hermitian_part,
    von_neumann_entropy,
)

h2 = binary_entropy


@dataclass(frozen=True, eq=False)
class EnergyDistribution:
    """Outcome distribution of an energy measurement."""

    energies: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if e.shape != p.shape:
            raise ShapeMismatchError("shape mismatch: energies vs probabilities")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("probabilities must be positive and sum to 1")
        if len(np.unique(e)) != len(e):
            raise ValueError("energies must be distinct")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "probs", p)

    @property
    def support(self) -> list[tuple[float, float]]:
        return list(zip(self.energies.tolist(), self.probs.tolist()))

    def entropy(self) -> float:
        return entropy_of_probs(self.probs)

    def mean(self) -> float:
        return float(self.energies @ self.probs)

    def variance(self) -> float:
        mu = self.mean()
        return float(((self.energies - mu) ** 2) @ self.probs)

    def to_json(self) -> dict:
        return {"support": [{"energy": e, "p": p} for e, p in self.support]}

    @classmethod
    def from_json(cls, data: dict) -> "EnergyDistribution":
        items = data["support"]
        return cls(np.array([it["energy"] for it in items]), np.array([it["p"] for it in items]))


def _check(m: np.ndarray, h: Hamiltonian):
    if m.shape != (h.dim, h.dim):
        raise ShapeMismatchError(f"shape mismatch: state dim {m.shape[0]} vs Hamiltonian dim {h.dim}")


def _dephase(m: np.ndarray, q: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Zero every entry of ``q† m q`` linking columns with different labels, then rotate back."""
    mq = dagger(q) @ m @ q
    mq = np.where(labels[:, None] == labels[None, :], mq, 0.0)
    return hermitian_part(q @ mq @ dagger(q))


def twirl(rho, h: Hamiltonian) -> DensityOperator:
    """Dephase ``rho`` in the eigenspaces of ``h``: ``Σ_E Π_E ρ Π_E``."""
    m = as_matrix(rho)
    _check(m, h)
    if h.is_diagonal:
        lab = h.level_of_index
        return DensityOperator(np.where(lab[:, None] == lab[None, :], m, 0.0), check=False)
    return DensityOperator(_dephase(m, h.eigvecs, h.level_of_column), check=False)


def entropic_coherence(rho, h: Hamiltonian) -> float:
    """``S(twirl ρ) - S(ρ)`` in bits."""
    if isinstance(rho, PureState):
        return energy_distribution(rho, h).entropy()
    c = von_neumann_entropy(twirl(rho, h)) - von_neumann_entropy(rho)
    return max(c, 0.0)


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy ``S(ρ||σ)`` in bits; ``inf`` if the support condition fails."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ShapeMismatchError("shape mismatch")
    wb, vb = np.linalg.eigh(hermitian_part(b))
    cut = 1e-12 * max(np.trace(b).real, EIG_CLAMP)
    on = wb > cut
    diag = np.real(np.einsum("ij,jk,ki->i", dagger(vb), a, vb))
    if np.any(diag[~on] > 1e-10):
        return float("inf")
    cross = float(np.sum(diag[on] * np.log2(wb[on])))
    return max(-von_neumann_entropy(a) - cross, 0.0)


def is_incoherent(rho, h: Hamiltonian, tol: float = 1e-10) -> bool:
    m = as_matrix(rho)
    return bool(np.max(np.abs(m - twirl(m, h).matrix)) <= tol)


def local_coherence(rho_ab, h_a: Hamiltonian, h_b: Hamiltonian) -> float:
    """Coherence left after dephasing each factor in its own energy basis."""
    m = as_matrix(rho_ab)
    if m.shape[0] != h_a.dim * h_b.dim:
        raise ShapeMismatchError("shape mismatch: state vs product of Hamiltonian dims")
    if h_a.is_diagonal and h_b.is_diagonal:
        labels = (h_a.level_of_index[:, None] * len(h_b.energies) + h_b.level_of_index[None, :]).ravel()
        dephased = np.where(labels[:, None] == labels[None, :], m, 0.0)
    else:
        q = np.kron(h_a.eigvecs, h_b.eigvecs)
        labels = (h_a.level_of_column[:, None] * len(h_b.energies) + h_b.level_of_column[None, :]).ravel()
        dephased = _dephase(m, q, labels)
    return max(von_neumann_entropy(dephased) - von_neumann_entropy(m), 0.0)


def energy_distribution(psi, h: Hamiltonian, cutoff: float = EIG_CLAMP) -> EnergyDistribution:
    """Energy-measurement distribution; outcomes with probability below ``cutoff`` are dropped."""
    probs = h.level_populations(psi)
    keep = probs >= cutoff
    p = probs[keep]
    return EnergyDistribution(h.energies[keep], p / p.sum())


def pure_lift(sigma, h: Hamiltonian, basis_choice: Sequence[np.ndarray] | str | None = None) -> PureState:
    """Pure state with amplitudes ``sqrt(<e|σ|e>)`` in an energy eigenbasis.

    ``basis_choice`` is either a list with one orthonormal column block per
    energy level or the string ``"stored"`` to reuse the bases held by ``h``.
    It may be omitted only when ``h`` is nondegenerate.
    """
    m = as_matrix(sigma)
    _check(m, h)
    if basis_choice is None:
        if any(d > 1 for d in h.degeneracies):
            raise BasisRequiredError("basis required: Hamiltonian is degenerate")
        bases = h.bases
    elif isinstance(basis_choice, str):
        if basis_choice != "stored":
            raise ValueError(f"unknown basis choice {basis_choice!r}")
        bases = h.bases
    else:
        bases = [np.asarray(b, dtype=complex) for b in basis_choice]
        if [b.shape[1] for b in bases] != h.degeneracies:
            raise ShapeMismatchError("shape mismatch: basis_choice blocks vs degeneracies")
        for b, p in zip(bases, h.projectors):
            if np.max(np.abs(b @ dagger(b) - p)) > 1e-10:
                raise ValueError("basis_choice block does not span its eigenspace")
    q = np.hstack(bases)
    amps = np.sqrt(np.clip(np.real(np.einsum("ij,jk,ki->i", dagger(q), m, q)), 0.0, None))
    return PureState.normalized(q @ amps)


@dataclass(frozen=True)
class FannesAudenaert:
    bound: float
    D: float
    S_plus: float
    S_minus: float


def refined_fannes_audenaert(rho, sigma, tie_tol: float = 1e-12) -> FannesAudenaert:
    """Upper bound on ``S(ρ) - S(σ)`` from the Jordan–Hahn split of ``ρ - σ``."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ShapeMismatchError("shape mismatch")
    w = np.linalg.eigvalsh(hermitian_part(a - b))
    pos_mask = w >= -tie_tol
    pos = np.clip(w[pos_mask], 0.0, None)
    neg = -w[~pos_mask]
    d = 0.5 * float(np.sum(pos) + np.sum(neg))
    if d <= tie_tol:
        return FannesAudenaert(0.0, 0.0, 0.0, 0.0)
    s_plus = entropy_of_probs(pos / pos.sum()) if pos.sum() > 0 else 0.0
    s_minus = entropy_of_probs(neg / neg.sum()) if neg.sum() > 0 else 0.0
    d = min(d, 1.0)
    return FannesAudenaert(d * (s_plus - s_minus) + h2(d), d, s_plus, s_minus)


def coherence_continuity_bound(dist: float, dim: int) -> float:
    """Bound on ``|C(ρ) - C(σ)|`` for states at trace distance ``dist``."""
    lead = 2.0 * np.log2(dim - 1) * dist if dim > 1 else 0.0
    return float(lead + 2.0 * h2(dist))
