"""Lower bounds on the battery coherence, dimension, energy and Fisher information
needed to approximate a non-energy-preserving gate, and the solvers behind them."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BasisRequiredError, DomainError, ShapeMismatchError
from .iid_entropy import (
    Basis,
    DiscreteRV,
    ExactReal,
    Prepartition,
    best_prepartition,
    certify_incommensurable,
    entropy_lower_bound,
    incommensurability_rank,
    iter_prepartitions,
)
from .quantum_core import Hamiltonian, PureState, dagger, is_unitary, matrix_to_json

PI4E4_256 = math.pi**4 * math.e**4 / 256.0
VARIANTS = ("general", "proportionate", "qubit", "qubit-proportionate")


@dataclass(frozen=True, eq=False)
class GateInstance:
    """Target gate with its system Hamiltonian.

    ``exact_levels`` optionally gives each distinct energy of ``H_S`` exactly; if
    omitted, levels must be recognisable as rationals with small denominators.
    """

    H_S: Hamiltonian
    V_S: np.ndarray
    exact_levels: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.V_S, dtype=complex)
        if v.shape != (self.H_S.dim, self.H_S.dim):
            raise ShapeMismatchError("shape mismatch: gate vs Hamiltonian dimension")
        if not is_unitary(v, 1e-10):
            raise DomainError("gate is not unitary")
        object.__setattr__(self, "V_S", v)
        if self.exact_levels is not None:
            lv = tuple(self.exact_levels)
            if len(lv) != len(self.H_S.energies):
                raise ShapeMismatchError("shape mismatch: one exact value per distinct energy")
            for x, e in zip(lv, self.H_S.energies):
                if abs(x.float_value - e) > 1e-8 * (1 + abs(e)):
                    raise DomainError(f"exact level {x!r} disagrees with energy {e}")
            object.__setattr__(self, "exact_levels", lv)

    @classmethod
    def from_exact(cls, levels: Sequence[str], v, basis: Basis | Sequence[str] = ("1",)) -> "GateInstance":
        """Diagonal Hamiltonian with the given exact entries (one per basis state)."""
        basis = basis if isinstance(basis, Basis) else Basis(tuple(basis))
        vals = [ExactReal.parse(s, basis) for s in levels]
        h = Hamiltonian.from_energies([x.float_value for x in vals], grouping_tol=1e-12)
        distinct: list[ExactReal] = []
        for e in h.energies:
            distinct.append(next(x for x in vals if abs(x.float_value - e) <= 1e-10))
        return cls(h, v, tuple(distinct))

    @property
    def d_S(self) -> int:
        return self.H_S.dim

    def is_energy_preserving(self, tol: float = 1e-10) -> bool:
        h = self.H_S.matrix
        return bool(np.max(np.abs(self.V_S @ h - h @ self.V_S)) <= tol * max(1.0, self.H_S.spectral_radius))

    def levels_exact(self) -> list[ExactReal]:
        if self.exact_levels is not None:
            return list(self.exact_levels)
        out = []
        for e in self.H_S.energies:
            q = Fraction(float(e)).limit_denominator(10**4)
            if abs(float(q) - e) > 1e-10 * (1 + abs(e)):
                raise BasisRequiredError("basis required: spectrum is not rational; declare an exact basis")
            out.append(ExactReal.rational(q))
        return out


@dataclass(frozen=True)
class SearchOptions:
    degenerate_superposition_depth: int = 2
    random_samples: int = 16
    seed: int = 0
    exhaustive_limit: int = 6
    max_superpositions: int = 4000


class SearchResult(NamedTuple):
    r2_lower: int
    lambda2_lower: float
    witness: PureState | None
    flag: str = ""


def _energy_rv(psi: np.ndarray, labels: list[tuple], basis: Basis) -> DiscreteRV | None:
    probs: dict[tuple, float] = {}
    w = np.abs(psi) ** 2
    for lab, p in zip(labels, w):
        if p > 1e-14:
            probs[lab] = probs.get(lab, 0.0) + float(p)
    tot = sum(probs.values())
    return DiscreteRV.from_atoms([(ExactReal(k, basis), p / tot) for k, p in probs.items()], tol=1e-6)


def best_lambda(x: DiscreteRV, rank: int, exhaustive_limit: int = 6) -> float:
    """Largest leading constant over certified non-degenerate prepartitions of the given size."""
    chi = x.values
    cands = []
    if len(chi) <= exhaustive_limit:
        for subs in iter_prepartitions(chi, rank):
            if not all(len(s) == 1 for s in subs) and certify_incommensurable(subs):
                cands.append(subs)
    if not cands:
        bp = best_prepartition(chi, exhaustive_limit)
        if bp is not None and len(bp) == rank:
            cands.append(bp)
    best = 0.0
    for subs in cands:
        try:
            lam = entropy_lower_bound(x, 1, Prepartition(tuple(subs))).lam
        except DomainError:
            continue
        best = max(best, lam)
    return best


def _candidate_states(levels_t: list[tuple], dim_t: int, d: int, opts: SearchOptions):
    """Eigenstates of the four-copy Hamiltonian, as coefficient vectors in the product eigenbasis."""
    for i in range(dim_t):
        v = np.zeros(dim_t, dtype=complex)
        v[i] = 1.0
        yield v
    # paired branches |ij>_S |ij>_A, each of zero total energy
    for (i, j), (k, l) in itertools.combinations(itertools.product(range(d), repeat=2), 2):
        v = np.zeros(dim_t, dtype=complex)
        v[((i * d + j) * d + i) * d + j] = 1.0
        v[((k * d + l) * d + k) * d + l] = 1.0
        yield v / np.sqrt(2)
    classes: dict[tuple, list[int]] = {}
    for idx, lab in enumerate(levels_t):
        classes.setdefault(lab, []).append(idx)
    degenerate = [c for c in classes.values() if len(c) > 1]
    count = 0
    for c in degenerate:
        for depth in range(2, opts.degenerate_superposition_depth + 1):
            for combo in itertools.combinations(c, depth):
                if count >= opts.max_superpositions:
                    break
                v = np.zeros(dim_t, dtype=complex)
                v[list(combo)] = 1.0
                count += 1
                yield v / np.sqrt(depth)
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.random_samples):
        for c in degenerate:
            v = np.zeros(dim_t, dtype=complex)
            v[c] = rng.normal(size=len(c)) + 1j * rng.normal(size=len(c))
            yield v / np.linalg.norm(v)


def r2_lambda2_search(g: GateInstance, opts: SearchOptions | None = None) -> SearchResult:
    """Certified lower bounds on the four-copy rank and its leading constant, with a witness."""
    opts = opts or SearchOptions()
    if g.is_energy_preserving():
        return SearchResult(0, 0.0, None, "energy-preserving gate")
    levels = g.levels_exact()
    basis = levels[0].basis
    d = g.d_S
    col_level = g.H_S.level_of_column
    e = [levels[int(col_level[i])] for i in range(d)]
    labels = []
    for i, j, k, l in itertools.product(range(d), repeat=4):
        labels.append((e[i] + e[j] - e[k] - e[l]).coeffs)
    # work in the eigenbasis of H_S
    q = g.H_S.eigvecs
    v_eig = dagger(q) @ g.V_S @ q
    op = np.kron(np.kron(v_eig, dagger(v_eig)), np.eye(d * d))
    dim_t = d**4
    best: tuple | None = None
    seen: set = set()
    for phi in _candidate_states(labels, dim_t, d, opts):
        psi = op @ phi
        x = _energy_rv(psi, labels, basis)
        if x.size < 2:
            continue
        key = tuple(sorted((v.coeffs, round(p, 12)) for v, p in x.support))
        if key in seen:
            continue
        seen.add(key)
        rank = incommensurability_rank(x.values, exhaustive_limit=opts.exhaustive_limit).lower
        if best is not None and rank < best[0]:
            continue
        lam = best_lambda(x, rank, opts.exhaustive_limit)
        if lam <= 0:
            continue
        if best is None or (rank, lam) > (best[0], best[1]):
            best = (rank, lam, phi)
    if best is None:
        return SearchResult(0, 0.0, None, "no witness found")
    return SearchResult(best[0], best[1], PureState.normalized(best[2]))


def qubit_constants(v, h_s: Hamiltonian | None = None) -> tuple[int, float]:
    """Rank and leading constant of the qubit construction: ``(2, p / (π (1 + [p == 1])))``
    with ``p = |<0|V|1>|^2`` in the energy basis."""
    v = np.asarray(v, dtype=complex)
    if h_s is not None:
        if h_s.dim != 2:
            raise ShapeMismatchError("shape mismatch: qubit constants need a qubit")
        if len(h_s.energies) == 1:
            return 0, 0.0
        q = h_s.eigvecs
        v = dagger(q) @ v @ q
    p = float(abs(v[0, 1]) ** 2)
    if p <= 1e-15:
        return 0, 0.0
    delta = 1.0 if abs(p - 1.0) <= 1e-12 else 0.0
    return 2, p / (math.pi * (1.0 + delta))


def sigma_values(r2: int, lambda2: float, d_s: int, alpha: float = 1.0) -> tuple[float, float]:
    if r2 == 0:
        return 0.0, 0.0
    if r2 < 0 or lambda2 <= 0 or alpha <= 0 or d_s < 2:
        raise DomainError("domain: need r2 >= 1, lambda2 > 0, alpha > 0, d_S >= 2")
    sigma = PI4E4_256 * lambda2**4 * r2**2 / math.log2(d_s) ** 2
    sigma_p = (math.pi**2 / 4) * (lambda2 * r2 / (d_s**2 / 2 + 2 * alpha)) ** 2
    return sigma, sigma_p


def _check_eps(eps: float):
    if not (0.0 < eps < 1.0):
        raise DomainError(f"domain: eps={eps!r} outside (0, 1)")


def optimal_copies(r2: int, d_s: int, eps: float) -> int:
    """Copy number balancing the production and the continuity penalty."""
    _check_eps(eps)
    if r2 == 0:
        return 0
    return int(math.floor(math.sqrt(r2) / (8 * math.sqrt(math.log2(d_s))) * eps ** (-0.25)))


def coherence_lower_bound(
    g, eps: float, variant: str = "general", alpha: float = 1.0, d_s: int | None = None
) -> float:
    """Leading-order lower bound (bits) on the battery coherence for worst-case error ``eps``.

    ``g`` is a :class:`GateInstance` or a precomputed ``(r2, lambda2)`` pair (then
    ``d_s`` is required).  The ``qubit`` variants replace ``(r2, lambda2)`` by the
    explicit qubit-construction constants.
    """
    _check_eps(eps)
    if variant not in VARIANTS:
        raise DomainError(f"domain: unknown variant {variant!r}")
    if isinstance(g, GateInstance):
        d_s = g.d_S
        if variant.startswith("qubit"):
            r2, lam = qubit_constants(g.V_S, g.H_S)
        else:
            res = r2_lambda2_search(g)
            r2, lam = res.r2_lower, res.lambda2_lower
    else:
        r2, lam = g
        if d_s is None:
            raise DomainError("domain: d_s required with precomputed constants")
    if r2 == 0:
        return 0.0
    sigma, sigma_p = sigma_values(r2, lam, d_s, alpha)
    if variant in ("general", "qubit"):
        val = r2 / 8 * math.log2(sigma / eps)
    else:
        val = r2 / 4 * math.log2(sigma_p / (eps * math.log2(1 / eps) ** 2))
    return max(val, 0.0)


def dimension_lower_bound(r2: int, sigma_prime: float, eps: float) -> float:
    _check_eps(eps)
    if r2 == 0 or sigma_prime <= 0:
        return 1.0
    val = (1 / math.log2(1 / eps)) ** (r2 / 2) * (sigma_prime / eps) ** (r2 / 4)
    return max(val, 1.0)


def energy_bound_corollary(r2: int, sigma: float, eta: float, eps: float) -> float:
    """Mean-energy lower bound for batteries with at most ``1 + eta*E`` levels below ``E``."""
    _check_eps(eps)
    if eta <= 0:
        raise DomainError("domain: eta must be positive")
    if r2 == 0:
        return 0.0
    return sigma / (2 * eta) * eps ** (-r2 / 8)


def qfi_bound_corollary(r2: int, sigma: float, omega: float, d_s: int, eps: float) -> float:
    """Fisher-information lower bound for an oscillator battery of frequency ``omega``."""
    if not (0.0 < eps * d_s < 1.0):
        raise DomainError("domain: eps*d_S must lie in (0, 1)")
    if r2 == 0:
        return 0.0
    return omega**2 * sigma**2 / (math.e * math.pi) * (eps * d_s) ** (-r2 / 4)


# ------------------------------------------------------ entropy-constrained solvers


def _entropy_bits(logw: np.ndarray) -> tuple[float, np.ndarray]:
    logw = logw - logw.max()
    w = np.exp(logw)
    p = w / w.sum()
    nz = p > 0
    return float(-np.sum(p[nz] * np.log2(p[nz]))), p


def _solve_multiplier(fn, target: float, scale: float, tol: float = 1e-9, max_iter: int = 200):
    """Find ``x >= 0`` with ``fn(x) = target`` for ``fn`` decreasing; bracket by doubling."""
    lo, hi = 0.0, scale
    for _ in range(200):
        if fn(hi) < target:
            break
        lo, hi = hi, 2 * hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        s = fn(mid)
        if abs(s - target) <= tol:
            return mid
        if s > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class MinEnergy(NamedTuple):
    energy: float
    gamma: float


def min_energy_at_coherence(h_b: Hamiltonian, c: float) -> MinEnergy:
    """Least mean energy of a state with ``c`` bits of coherence.

    The optimum is a Gibbs distribution over the distinct levels; its inverse
    temperature is found by bisection on the entropy constraint.
    """
    e = h_b.energies
    cmax = math.log2(len(e))
    if not (-1e-12 <= c <= cmax + 1e-12):
        raise DomainError(f"domain: coherence {c!r} outside [0, {cmax}]")
    if c <= 1e-12:
        return MinEnergy(float(e[0]), math.inf)
    if c >= cmax - 1e-12:
        return MinEnergy(float(e.mean()), 0.0)
    shifted = e - e[0]
    spread = float(shifted[-1]) or 1.0

    def ent(gamma):
        return _entropy_bits(-gamma * shifted)[0]

    gamma = _solve_multiplier(ent, c, 1.0 / spread)
    p = _entropy_bits(-gamma * shifted)[1]
    return MinEnergy(float(p @ e), gamma)


class MinVariance(NamedTuple):
    variance: float
    mu: float
    zeta: float
    reference: float


def ladder_variance_reference(c: float, omega: float = 1.0) -> float:
    return omega**2 * 2 ** (2 * c) / (math.e * math.pi)


def min_variance_at_coherence(h_b: Hamiltonian, c: float, mu_grid: Sequence[float] | None = None) -> MinVariance:
    """Least energy variance at ``c`` bits of coherence over discrete-Gaussian profiles.

    For each centre ``mu`` the width multiplier is fixed by the entropy
    constraint; the smallest variance over the grid is returned.
    """
    e = h_b.energies
    cmax = math.log2(len(e))
    if not (-1e-12 <= c <= cmax + 1e-12):
        raise DomainError(f"domain: coherence {c!r} outside [0, {cmax}]")
    gaps = np.diff(e)
    omega = float(gaps.min()) if len(gaps) else 1.0
    ref = ladder_variance_reference(c, omega)
    if c <= 1e-12:
        return MinVariance(0.0, float(e[0]), math.inf, ref)
    if mu_grid is None:
        mu_grid = np.linspace(e[0], e[-1], 201)
    best = None
    spread = float(e[-1] - e[0]) or 1.0
    for mu in mu_grid:
        d2 = (e - mu) ** 2

        def ent(zeta, d2=d2):
            return _entropy_bits(-zeta * d2)[0]

        nearest = np.isclose(d2, d2.min(), rtol=0, atol=1e-12 * spread**2)
        if math.log2(nearest.sum()) > c or ent(0.0) < c:
            # target entropy not reachable with this centre
            continue
        zeta = _solve_multiplier(ent, c, 1.0 / spread**2)
        p = _entropy_bits(-zeta * d2)[1]
        mean = float(p @ e)
        var = float(p @ (e - mean) ** 2)
        if best is None or var < best[0]:
            best = (var, float(mu), zeta)
    if best is None:
        raise DomainError("domain: no centre on the grid reaches the requested coherence")
    return MinVariance(best[0], best[1], best[2], ref)


# ------------------------------------------------------------------- report


@dataclass
class BoundReport:
    eps: float
    r2_lower: int
    lambda2_lower: float
    sigma: float
    sigma_prime: float
    alpha: float
    m_opt: int
    coherence_bound_general: float
    coherence_bound_proportionate: float
    coherence_bound_qubit: float | None
    coherence_bound_qubit_proportionate: float | None
    dim_bound: float
    variant_used: str
    flags: dict = field(default_factory=dict)
    witness: dict | None = None

    def to_json(self) -> dict:
        return asdict(self)


def bound_report(
    g: GateInstance,
    eps: float,
    variant: str = "general",
    alpha: float | None = None,
    opts: SearchOptions | None = None,
    search: SearchResult | None = None,
) -> BoundReport:
    _check_eps(eps)
    if variant not in VARIANTS:
        raise DomainError(f"domain: unknown variant {variant!r}")
    flags = {"omits_vanishing_terms": True}
    if alpha is None:
        warnings.warn("alpha not given; using 1", stacklevel=2)
        alpha = 1.0
        flags["alpha_defaulted"] = True
    res = search if search is not None else r2_lambda2_search(g, opts)
    if res.flag:
        flags["search"] = res.flag
    r2, lam = res.r2_lower, res.lambda2_lower
    d_s = g.d_S
    sigma, sigma_p = sigma_values(r2, lam, d_s, alpha)
    gen = coherence_lower_bound((r2, lam), eps, "general", alpha, d_s) if r2 else 0.0
    prop = coherence_lower_bound((r2, lam), eps, "proportionate", alpha, d_s) if r2 else 0.0
    qb = qbp = None
    if d_s == 2:
        qc = qubit_constants(g.V_S, g.H_S)
        qb = coherence_lower_bound(qc, eps, "qubit", alpha, 2) if qc[0] else 0.0
        qbp = coherence_lower_bound(qc, eps, "qubit-proportionate", alpha, 2) if qc[0] else 0.0
    if variant.startswith("qubit") and d_s != 2:
        raise DomainError("domain: qubit variants need a two-level system")
    dim_r2, dim_sp = (r2, sigma_p)
    if variant.startswith("qubit"):
        dim_r2, lam_q = qubit_constants(g.V_S, g.H_S)
        dim_sp = sigma_values(dim_r2, lam_q, 2, alpha)[1]
    witness = None
    if res.witness is not None:
        witness = {"dim": res.witness.dim, "re": res.witness.vector.real.tolist(), "im": res.witness.vector.imag.tolist()}
    return BoundReport(
        eps=eps,
        r2_lower=r2,
        lambda2_lower=lam,
        sigma=sigma,
        sigma_prime=sigma_p,
        alpha=alpha,
        m_opt=optimal_copies(r2, d_s, eps),
        coherence_bound_general=gen,
        coherence_bound_proportionate=prop,
        coherence_bound_qubit=qb,
        coherence_bound_qubit_proportionate=qbp,
        dim_bound=dimension_lower_bound(dim_r2, dim_sp, eps),
        variant_used=variant,
        flags=flags,
        witness=witness,
    )


def gate_to_json(g: GateInstance) -> dict:
    out = {"H_S": g.H_S.to_json(), "V_S": matrix_to_json(g.V_S)}
    if g.exact_levels is not None:
        out["basis"] = list(g.exact_levels[0].basis.names)
        out["levels"] = [[str(c) for c in x.coeffs] for x in g.exact_levels]
    return out
