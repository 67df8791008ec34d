"""Dense finite-dimensional operators, states and the spectral quantities built on them.

All entropies are in bits.  Objects are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import DimensionLimitError, DomainError, SchemaError, ShapeMismatchError

MAX_ENTRIES = 2**20
STATE_TOL = 1e-10
EIG_CLAMP = 1e-14


def check_dim(dim: int, max_entries: int | None = None) -> int:
    cap = MAX_ENTRIES if max_entries is None else max_entries
    if dim * dim > cap:
        raise DimensionLimitError(f"dimension limit: {dim}x{dim} exceeds {cap} entries")
    return dim


def as_matrix(x) -> np.ndarray:
    """Return the dense matrix behind a state, Hamiltonian or array."""
    if isinstance(x, DensityOperator):
        return x.matrix
    if isinstance(x, PureState):
        return np.outer(x.vector, x.vector.conj())
    if isinstance(x, Hamiltonian):
        return x.matrix
    return np.asarray(x, dtype=complex)


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


# --------------------------------------------------------------------------- types


def _default_tol(w: np.ndarray, grouping_tol: float | None) -> float:
    if grouping_tol is None:
        return 1e-9 * (float(np.max(np.abs(w))) + 1.0)
    return float(grouping_tol)


def _group_sorted(w: np.ndarray, grouping_tol: float | None) -> list[list[int]]:
    tol = _default_tol(w, grouping_tol)
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Hermitian observable stored as a grouped spectral decomposition.

    ``blocks[k]`` spans the eigenspace of ``energies[k]``: either a dense block of
    orthonormal columns, or an integer array of computational-basis indices
    (diagonal Hamiltonians, which then never need dense storage).  Energies are
    strictly increasing and separated by more than ``grouping_tol``.
    """

    energies: np.ndarray
    blocks: tuple
    grouping_tol: float

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        object.__setattr__(self, "energies", energies)
        if len(energies) != len(self.blocks) or len(energies) == 0:
            raise ShapeMismatchError("shape mismatch: one basis block per energy required")
        if np.any(np.diff(energies) <= self.grouping_tol):
            raise DomainError("energies must be increasing and separated by more than grouping_tol")
        if self.is_diagonal:
            idx = np.sort(np.concatenate(self.blocks))
            if not np.array_equal(idx, np.arange(len(idx))):
                raise ShapeMismatchError("shape mismatch: index blocks must cover the basis once")
            return
        dims = {b.shape[0] for b in self.blocks if b.ndim == 2}
        if len(dims) != 1 or any(b.ndim != 2 for b in self.blocks):
            raise ShapeMismatchError("shape mismatch: basis blocks of different dimension")
        q = self.eigvecs
        if q.shape[0] != q.shape[1]:
            raise ShapeMismatchError("shape mismatch: eigenspaces do not span the space")
        if np.max(np.abs(dagger(q) @ q - np.eye(q.shape[0]))) > 1e-10:
            raise DomainError("eigenspace bases are not orthonormal")

    @classmethod
    def from_matrix(cls, h, grouping_tol: float | None = None) -> "Hamiltonian":
        h = np.asarray(h, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ShapeMismatchError("shape mismatch: Hamiltonian must be square")
        check_dim(h.shape[0])
        if np.max(np.abs(h - dagger(h)), initial=0.0) > 1e-10:
            raise DomainError("Hamiltonian is not Hermitian")
        off = h - np.diag(np.diag(h))
        if not np.any(off):
            return cls.from_energies(np.real(np.diag(h)), grouping_tol)
        w, v = np.linalg.eigh(hermitian_part(h))
        groups = _group_sorted(w, grouping_tol)
        return cls(
            np.array([float(np.mean(w[g])) for g in groups]),
            tuple(np.ascontiguousarray(v[:, g]) for g in groups),
            _default_tol(w, grouping_tol),
        )

    @classmethod
    def from_energies(cls, energies: Sequence[float], grouping_tol: float | None = None) -> "Hamiltonian":
        """Diagonal Hamiltonian in the computational basis."""
        e = np.asarray(energies, dtype=float).ravel()
        order = np.argsort(e, kind="stable")
        w = e[order]
        groups = _group_sorted(w, grouping_tol)
        return cls(
            np.array([float(np.mean(w[g])) for g in groups]),
            tuple(order[g] for g in groups),
            _default_tol(w, grouping_tol),
        )

    @cached_property
    def is_diagonal(self) -> bool:
        return all(b.ndim == 1 for b in self.blocks)

    @cached_property
    def dim(self) -> int:
        if self.is_diagonal:
            return int(sum(len(b) for b in self.blocks))
        return self.blocks[0].shape[0]

    @cached_property
    def degeneracies(self) -> list[int]:
        return [len(b) if b.ndim == 1 else b.shape[1] for b in self.blocks]

    @cached_property
    def bases(self) -> tuple:
        """Dense orthonormal column blocks, one per energy."""
        if not self.is_diagonal:
            return self.blocks
        check_dim(self.dim)
        eye = np.eye(self.dim, dtype=complex)
        return tuple(eye[:, b] for b in self.blocks)

    @cached_property
    def eigvecs(self) -> np.ndarray:
        return np.hstack(self.bases)

    @cached_property
    def level_of_column(self) -> np.ndarray:
        """Level index of each column of :attr:`eigvecs`."""
        return np.repeat(np.arange(len(self.energies)), self.degeneracies)

    @cached_property
    def level_of_index(self) -> np.ndarray:
        """Level index of each computational basis state (diagonal Hamiltonians only)."""
        if not self.is_diagonal:
            raise DomainError("Hamiltonian is not diagonal in the computational basis")
        out = np.empty(self.dim, dtype=int)
        for k, b in enumerate(self.blocks):
            out[b] = k
        return out

    @cached_property
    def diagonal(self) -> np.ndarray:
        """Energy of each computational basis state (diagonal Hamiltonians only)."""
        return self.energies[self.level_of_index]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return self.energies[self.level_of_column]

    @property
    def projectors(self) -> list[np.ndarray]:
        return [b @ dagger(b) for b in self.bases]

    @property
    def levels(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.energies.tolist(), self.projectors))

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.is_diagonal:
            check_dim(self.dim)
            return np.diag(self.diagonal).astype(complex)
        q = self.eigvecs
        return (q * self.eigenvalues) @ dagger(q)

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.energies)))

    def level_populations(self, state) -> np.ndarray:
        """Probability of each energy level in ``state``."""
        if isinstance(state, PureState):
            if state.dim != self.dim:
                raise ShapeMismatchError("shape mismatch")
            if self.is_diagonal:
                return np.bincount(self.level_of_index, np.abs(state.vector) ** 2, len(self.energies))
            return np.array([np.linalg.norm(dagger(b) @ state.vector) ** 2 for b in self.bases])
        m = as_matrix(state)
        if m.shape != (self.dim, self.dim):
            raise ShapeMismatchError("shape mismatch")
        if self.is_diagonal:
            return np.bincount(self.level_of_index, np.real(np.diag(m)), len(self.energies))
        return np.array([np.real(np.trace(dagger(b) @ m @ b)) for b in self.bases])

    def scaled(self, factor: float) -> "Hamiltonian":
        if factor == 0:
            return Hamiltonian.from_energies(np.zeros(self.dim))
        order = slice(None) if factor > 0 else slice(None, None, -1)
        return Hamiltonian(self.energies[order] * factor, self.blocks[order], self.grouping_tol * abs(factor))

    def __neg__(self) -> "Hamiltonian":
        return self.scaled(-1.0)

    def to_json(self) -> dict:
        out = matrix_to_json(self.matrix)
        out["energies"] = self.energies.tolist()
        out["grouping_tol"] = self.grouping_tol
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Hamiltonian":
        if "re" not in data and "diagonal" in data:
            try:
                diag = np.asarray(data["diagonal"], dtype=float)
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"schema: {exc}") from exc
            if diag.ndim != 1:
                raise SchemaError("schema: diagonal must be a flat list")
            return cls.from_energies(diag, data.get("grouping_tol"))
        h = cls.from_matrix(matrix_from_json(data), data.get("grouping_tol"))
        if "energies" in data and len(data["energies"]) != len(h.energies):
            raise SchemaError("schema: declared energies disagree with the matrix spectrum")
        return h


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatchError("shape mismatch: density operator must be square")
        check_dim(m.shape[0])
        if self.check:
            if np.max(np.abs(m - dagger(m))) > STATE_TOL:
                raise DomainError("density operator is not Hermitian")
            m = hermitian_part(m)
            if abs(np.trace(m).real - 1.0) > STATE_TOL:
                raise DomainError(f"trace {np.trace(m).real!r} differs from 1")
            if np.linalg.eigvalsh(m)[0] < -STATE_TOL:
                raise DomainError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues, tiny negatives clamped to zero."""
        w = np.linalg.eigvalsh(self.matrix)
        return np.where(w < 0, 0.0, w)

    def to_json(self) -> dict:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, data: dict) -> "DensityOperator":
        return cls(matrix_from_json(data))


@dataclass(frozen=True, eq=False)
class PureState:
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).ravel()
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise DomainError(f"state vector has norm {float(np.linalg.norm(v)):.12g}, not 1")
        object.__setattr__(self, "vector", v)

    @classmethod
    def normalized(cls, v) -> "PureState":
        v = np.asarray(v, dtype=complex).ravel()
        return cls(v / np.linalg.norm(v))

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    def density(self) -> DensityOperator:
        return DensityOperator(np.outer(self.vector, self.vector.conj()), check=False)

    def to_json(self) -> dict:
        return {"dim": self.dim, "re": self.vector.real.tolist(), "im": self.vector.imag.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PureState":
        try:
            v = np.asarray(data["re"], float) + 1j * np.asarray(data["im"], float)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"schema: {exc}") from exc
        if v.ndim != 1 or v.shape[0] != data.get("dim", v.shape[0]):
            raise SchemaError("schema: vector shape disagrees with dim")
        return cls(v)


@dataclass(frozen=True)
class CompositeLabel:
    factor_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise ShapeMismatchError("shape mismatch: factor dimensions must be positive")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.factor_dims))


def as_density(x) -> DensityOperator:
    if isinstance(x, DensityOperator):
        return x
    if isinstance(x, PureState):
        return x.density()
    return DensityOperator(np.asarray(x, dtype=complex))


# ------------------------------------------------------------------------- JSON


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(data: dict) -> np.ndarray:
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"schema: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise SchemaError(f"schema: expected {dim}x{dim} re/im arrays")
    return re + 1j * im


# ------------------------------------------------------------------ operations


def _tensor_hamiltonians(a: Hamiltonian, b: Hamiltonian) -> Hamiltonian:
    tol = max(a.grouping_tol, b.grouping_tol)
    if a.is_diagonal and b.is_diagonal:
        e = (a.diagonal[:, None] + b.diagonal[None, :]).ravel()
        return Hamiltonian.from_energies(e, tol)
    check_dim(a.dim * b.dim)
    pairs = sorted(
        ((ea + eb, i, j) for i, ea in enumerate(a.energies) for j, eb in enumerate(b.energies)),
        key=lambda t: t[0],
    )
    energies, bases = [], []
    block_e, block_cols = [], []
    for e, i, j in pairs:
        if block_e and e - block_e[-1] > tol:
            energies.append(float(np.mean(block_e)))
            bases.append(np.hstack(block_cols))
            block_e, block_cols = [], []
        block_e.append(e)
        block_cols.append(np.kron(a.bases[i], b.bases[j]))
    energies.append(float(np.mean(block_e)))
    bases.append(np.hstack(block_cols))
    return Hamiltonian(np.array(energies), tuple(bases), tol)


def tensor(a, b):
    """Tensor product of two objects of the same kind.

    Hamiltonians combine additively (``H_a ⊗ 1 + 1 ⊗ H_b``); states and plain
    matrices combine by the Kronecker product.
    """
    if isinstance(a, Hamiltonian) and isinstance(b, Hamiltonian):
        return _tensor_hamiltonians(a, b)
    if isinstance(a, PureState) and isinstance(b, PureState):
        check_dim(a.dim * b.dim)
        return PureState(np.kron(a.vector, b.vector))
    if isinstance(a, (DensityOperator, PureState)) and isinstance(b, (DensityOperator, PureState)):
        check_dim(as_matrix(a).shape[0] * as_matrix(b).shape[0])
        return DensityOperator(np.kron(as_matrix(a), as_matrix(b)), check=False)
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim == 2:
        check_dim(a.shape[0] * b.shape[0])
    return np.kron(a, b)


def tensor_all(items: Iterable):
    items = list(items)
    out = items[0]
    for x in items[1:]:
        out = tensor(out, x)
    return out


def partial_trace(rho, label: CompositeLabel, keep) -> DensityOperator:
    """Reduce ``rho`` to the factors listed in ``keep`` (indices into ``label``)."""
    m = as_matrix(rho)
    dims = label.factor_dims
    if label.dim != m.shape[0]:
        raise ShapeMismatchError(f"shape mismatch: label dim {label.dim} vs operator dim {m.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ShapeMismatchError("shape mismatch: keep index out of range")
    n = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise ShapeMismatchError("shape mismatch: too many tensor factors")
    row = list(letters[:n])
    col = [letters[n + i] if i in keep else row[i] for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    t = m.reshape(dims + dims)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return DensityOperator(hermitian_part(reduced.reshape(d, d)), check=False)


def _clamped_eigvals(m: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(hermitian_part(m))
    w = np.where(w < EIG_CLAMP, 0.0, w)
    return w


def entropy_of_probs(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > EIG_CLAMP]
    return float(-np.sum(p * np.log2(p))) if p.size else 0.0


def von_neumann_entropy(rho) -> float:
    if isinstance(rho, PureState):
        return 0.0
    return max(entropy_of_probs(_clamped_eigvals(as_matrix(rho))), 0.0)


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(m))
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ dagger(v)


def fidelity(rho, sigma) -> float:
    """Squared Uhlmann fidelity ``(tr|√ρ √σ|)^2``."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ShapeMismatchError("shape mismatch")
    if isinstance(rho, PureState):
        f = np.real(rho.vector.conj() @ b @ rho.vector)
    elif isinstance(sigma, PureState):
        f = np.real(sigma.vector.conj() @ a @ sigma.vector)
    else:
        s = np.linalg.svd(_psd_sqrt(a) @ _psd_sqrt(b), compute_uv=False)
        f = np.sum(s) ** 2
    return float(np.clip(f, 0.0, 1.0))


def trace_distance(rho, sigma) -> float:
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ShapeMismatchError("shape mismatch")
    w = np.linalg.eigvalsh(hermitian_part(a - b))
    return float(np.clip(0.5 * np.sum(np.abs(w)), 0.0, 1.0))


def moments(rho, h: Hamiltonian) -> tuple[float, float]:
    """Mean and variance of the energy."""
    if h.is_diagonal:
        if isinstance(rho, PureState):
            w = np.abs(rho.vector) ** 2
        else:
            w = np.real(np.diag(as_matrix(rho)))
        if w.shape[0] != h.dim:
            raise ShapeMismatchError("shape mismatch")
        e = h.diagonal
        mean = float(w @ e)
        second = float(w @ e**2)
    elif isinstance(rho, PureState):
        hv = h.matrix @ rho.vector
        mean = float(np.real(rho.vector.conj() @ hv))
        second = float(np.real(hv.conj() @ hv))
    else:
        hm = h.matrix
        m = as_matrix(rho)
        if m.shape != hm.shape:
            raise ShapeMismatchError("shape mismatch")
        mean = float(np.real(np.trace(m @ hm)))
        second = float(np.real(np.trace(m @ hm @ hm)))
    return mean, max(second - mean * mean, 0.0)


def qfi(rho, h: Hamiltonian) -> float:
    """Quantum Fisher information for the unitary family ``exp(-iHt)``.

    Uses the symmetric-logarithmic-derivative sum
    ``2 Σ (λ_i - λ_j)^2 / (λ_i + λ_j) |<i|H|j>|^2`` over the eigenbasis of ``rho``.
    """
    if isinstance(rho, PureState):
        return 4.0 * moments(rho, h)[1]
    w, v = np.linalg.eigh(as_matrix(rho))
    w = np.clip(w, 0.0, None)
    hij = (dagger(v) * h.diagonal) @ v if h.is_diagonal else dagger(v) @ h.matrix @ v
    lsum = w[:, None] + w[None, :]
    ldiff = w[:, None] - w[None, :]
    mask = lsum > EIG_CLAMP
    terms = np.zeros_like(lsum)
    terms[mask] = ldiff[mask] ** 2 / lsum[mask]
    return float(2.0 * np.sum(terms * np.abs(hij) ** 2))


def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(n, random_state=rng)


def random_energy_preserving_unitary(h: Hamiltonian, seed=None) -> np.ndarray:
    """Haar-random unitary inside each eigenspace of ``h``, assembled block by block."""
    rng = np.random.default_rng(seed)
    u = np.zeros((h.dim, h.dim), dtype=complex)
    for b in h.bases:
        u += b @ _haar_unitary(b.shape[1], rng) @ dagger(b)
    return u


def random_density(dim: int, seed=None, rank: int | None = None) -> DensityOperator:
    """Random mixed state from the induced (Ginibre) measure."""
    rng = np.random.default_rng(seed)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ dagger(g)
    return DensityOperator(m / np.trace(m).real)


def random_pure_state(dim: int, seed=None) -> PureState:
    rng = np.random.default_rng(seed)
    return PureState.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_hermitian(dim: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return hermitian_part(g)
