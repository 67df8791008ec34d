"""Exact support arithmetic and entropy of sums of i.i.d. discrete random variables.

Real values are stored as rational coefficient vectors over a declared basis
``(1, b_1, b_2, ...)`` whose elements are taken to be linearly independent over
the rationals.  Equality of values is then equality of coefficient vectors,
which makes lattice structure and commensurability questions decidable.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache, reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammaln
from scipy.stats import binom, norm

from .errors import DomainError, InvalidPrepartitionError, SchemaError, SupportExplosionError

SUPPORT_CAP = 10**7

_NAMED = {"1": 1.0, "pi": math.pi, "e": math.e}
_SQRT = re.compile(r"^sqrt\(?\s*([0-9.]+)\s*\)?$")


def basis_element_value(name: str) -> float:
    key = name.strip().lower()
    if key in _NAMED:
        return _NAMED[key]
    m = _SQRT.match(key)
    if m:
        return math.sqrt(float(m.group(1)))
    try:
        return float(key)
    except ValueError:
        raise SchemaError(f"schema: cannot interpret basis element {name!r}") from None


@dataclass(frozen=True)
class Basis:
    """Declared real basis; the first element is always ``1``."""

    names: tuple

    def __post_init__(self):
        names = tuple(str(n).strip() for n in self.names)
        if not names or names[0] != "1":
            names = ("1",) + tuple(n for n in names if n != "1")
        if len(set(names)) != len(names):
            raise SchemaError("schema: repeated basis element")
        object.__setattr__(self, "names", names)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([basis_element_value(n) for n in self.names])

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        key = name.strip()
        for i, n in enumerate(self.names):
            if n == key or basis_element_value(n) == basis_element_value(key):
                return i
        raise SchemaError(f"schema: {name!r} is not in the declared basis {self.names}")


RATIONALS = Basis(("1",))


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(str(x).strip()) if isinstance(x, str) else Fraction(x)


@dataclass(frozen=True)
class ExactReal:
    coeffs: tuple
    basis: Basis = RATIONALS

    def __post_init__(self):
        c = tuple(_frac(x) for x in self.coeffs)
        if len(c) != len(self.basis):
            raise SchemaError(f"schema: {len(c)} coefficients for a basis of size {len(self.basis)}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def parse(cls, text: str, basis: Basis = RATIONALS) -> "ExactReal":
        """Parse sums such as ``"1 + sqrt2"``, ``"3/2"`` or ``"-2*pi + 1/3"``."""
        coeffs = [Fraction(0)] * len(basis)
        s = str(text).replace(" ", "")
        if not s:
            raise SchemaError("schema: empty value")
        for term in re.findall(r"[+-]?[^+-]+", s):
            sign = -1 if term.startswith("-") else 1
            term = term.lstrip("+-")
            if "*" in term:
                num, name = term.split("*", 1)
                coeffs[basis.index(name)] += sign * _frac(num)
                continue
            try:
                coeffs[0] += sign * Fraction(term)
            except ValueError:
                coeffs[basis.index(term)] += sign
        return cls(tuple(coeffs), basis)

    @classmethod
    def rational(cls, q, basis: Basis = RATIONALS) -> "ExactReal":
        return cls((_frac(q),) + (Fraction(0),) * (len(basis) - 1), basis)

    @property
    def float_value(self) -> float:
        return float(sum(float(c) * b for c, b in zip(self.coeffs, self.basis.values)))

    def __float__(self) -> float:
        return self.float_value

    def _same(self, other: "ExactReal"):
        if self.basis != other.basis:
            raise SchemaError("schema: values over different bases")

    def __add__(self, other: "ExactReal") -> "ExactReal":
        self._same(other)
        return ExactReal(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.basis)

    def __sub__(self, other: "ExactReal") -> "ExactReal":
        self._same(other)
        return ExactReal(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.basis)

    def __neg__(self) -> "ExactReal":
        return ExactReal(tuple(-a for a in self.coeffs), self.basis)

    def scale(self, q) -> "ExactReal":
        q = _frac(q)
        return ExactReal(tuple(q * a for a in self.coeffs), self.basis)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __repr__(self) -> str:
        parts = []
        for c, n in zip(self.coeffs, self.basis.names):
            if c:
                parts.append(str(c) if n == "1" else f"{c}*{n}")
        return "ExactReal(" + (" + ".join(parts) or "0") + ")"


# ------------------------------------------------------------- rational algebra


def rational_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over the rationals by fraction-exact Gaussian elimination."""
    m = [[_frac(x) for x in r] for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][col]
        for i in range(rank + 1, len(m)):
            if m[i][col] != 0:
                f = m[i][col] / p
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def _as_exact_list(chi: Iterable[ExactReal]) -> list[ExactReal]:
    out: list[ExactReal] = []
    for x in chi:
        if x not in out:
            out.append(x)
    return out


def rational_span_dim(chi: Iterable[ExactReal]) -> int:
    """Dimension of the rational span of ``chi``."""
    return rational_rank([x.coeffs for x in _as_exact_list(chi)])


def affine_span_dim(chi: Iterable[ExactReal]) -> int:
    """Dimension of the rational span of the differences ``x - x_1``."""
    xs = _as_exact_list(chi)
    return rational_rank([(x - xs[0]).coeffs for x in xs[1:]])


def _frac_gcd(values: Iterable[Fraction]) -> Fraction:
    values = [abs(v) for v in values if v != 0]
    num = reduce(math.gcd, (v.numerator for v in values))
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in values))
    return Fraction(num, den)


class Span(NamedTuple):
    kind: str  # "lattice", "not_lattice" or "degenerate"
    h: ExactReal | None


def maximal_span(chi: Iterable[ExactReal]) -> Span:
    """Largest ``h`` with ``chi ⊂ a + hZ``, when such a spacing exists."""
    return _maximal_span(tuple(_as_exact_list(chi)))


@lru_cache(maxsize=65536)
def _maximal_span(xs: tuple) -> Span:
    if not xs:
        raise DomainError("domain: empty set")
    diffs = [x - xs[0] for x in xs[1:]]
    if not diffs:
        return Span("degenerate", None)
    r = rational_rank([d.coeffs for d in diffs])
    if r > 1:
        return Span("not_lattice", None)
    u = diffs[0]
    j = next(i for i, c in enumerate(u.coeffs) if c != 0)
    mults = [d.coeffs[j] / u.coeffs[j] for d in diffs]
    h = u.scale(_frac_gcd(mults))
    if h.float_value < 0:
        h = -h
    return Span("lattice", h)


# ---------------------------------------------------------------- random vars


@dataclass(frozen=True, eq=False)
class DiscreteRV:
    """Finitely supported random variable on exact values.

    Atoms are kept in a lattice encoding: value of atom i in coordinate c is
    ``offset[c] + points[i, c] * step[c]`` (all rational), which lets N-fold sums
    be computed as integer-grid convolutions.
    """

    basis: Basis
    offset: tuple
    step: tuple
    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        p = np.asarray(self.probs, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != p.shape[0] or pts.shape[1] != len(self.basis):
            raise SchemaError("schema: point array does not match the basis")
        if p.size == 0 or np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-9:
            raise DomainError("probabilities must be positive and sum to 1")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise DomainError("support values must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[ExactReal, float]], tol: float = 1e-12) -> "DiscreteRV":
        if not atoms:
            raise DomainError("empty support")
        basis = atoms[0][0].basis
        merged: dict[tuple, float] = {}
        for v, p in atoms:
            if v.basis != basis:
                raise SchemaError("schema: atoms over different bases")
            if p < 0:
                raise DomainError("negative probability")
            merged[v.coeffs] = merged.get(v.coeffs, 0.0) + float(p)
        keys = [k for k, p in merged.items() if p > 0]
        probs = np.array([merged[k] for k in keys])
        if abs(probs.sum() - 1.0) > tol:
            raise DomainError(f"probabilities sum to {probs.sum()!r}")
        offset, step, cols = [], [], []
        for c in range(len(basis)):
            vals = [k[c] for k in keys]
            lo = min(vals)
            g = _frac_gcd([v - lo for v in vals]) if any(v != lo for v in vals) else Fraction(1)
            offset.append(lo)
            step.append(g)
            cols.append([int((v - lo) / g) for v in vals])
        pts = np.array(cols, dtype=np.int64).T.reshape(len(keys), len(basis))
        return cls(basis, tuple(offset), tuple(step), pts, probs / probs.sum())

    @classmethod
    def from_values(cls, values: Sequence, probs: Sequence[float], basis: Basis = RATIONALS) -> "DiscreteRV":
        vals = [v if isinstance(v, ExactReal) else ExactReal.parse(str(v), basis) for v in values]
        return cls.from_atoms(list(zip(vals, probs)))

    @property
    def size(self) -> int:
        return len(self.probs)

    def value(self, i: int) -> ExactReal:
        c = tuple(o + int(n) * s for o, n, s in zip(self.offset, self.points[i], self.step))
        return ExactReal(c, self.basis)

    @cached_property
    def values(self) -> list[ExactReal]:
        return [self.value(i) for i in range(self.size)]

    @cached_property
    def _prob_map(self) -> dict:
        return {v.coeffs: float(p) for v, p in zip(self.values, self.probs)}

    @property
    def support(self) -> list[tuple[ExactReal, float]]:
        return list(zip(self.values, self.probs.tolist()))

    @cached_property
    def float_values(self) -> np.ndarray:
        off = np.array([float(o) for o in self.offset])
        st = np.array([float(s) for s in self.step])
        return (off + self.points * st) @ self.basis.values

    def prob_of(self, v: ExactReal) -> float:
        if v.basis != self.basis:
            return 0.0
        return self._prob_map.get(v.coeffs, 0.0)

    def mean(self) -> float:
        return float(self.float_values @ self.probs)

    def variance(self) -> float:
        mu = self.mean()
        return float(((self.float_values - mu) ** 2) @ self.probs)

    def to_json(self) -> dict:
        return {
            "basis": list(self.basis.names),
            "atoms": [{"coeffs": [str(c) for c in v.coeffs], "p": p} for v, p in self.support],
        }

    @classmethod
    def from_json(cls, data: dict) -> "DiscreteRV":
        try:
            basis = Basis(tuple(data.get("basis", ["1"])))
            atoms = [(ExactReal(tuple(a["coeffs"]), basis), float(a["p"])) for a in data["atoms"]]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"schema: {exc}") from exc
        return cls.from_atoms(atoms, tol=1e-9)


def shannon_entropy(x: DiscreteRV) -> float:
    p = x.probs[x.probs > 0]
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def projected_support(x: DiscreteRV, n: int) -> int:
    """Upper bound on the number of atoms of the n-fold sum."""
    s = x.size
    multisets = math.exp(gammaln(n + s) - gammaln(n + 1) - gammaln(s)) if s > 1 else 1.0
    extents = x.points.max(axis=0)
    volume = float(np.prod([n * int(e) + 1 for e in extents]))
    return int(min(multisets, volume))


def _grid(x: DiscreteRV) -> np.ndarray:
    ext = x.points.max(axis=0)
    g = np.zeros(tuple(int(e) + 1 for e in ext))
    g[tuple(x.points.T)] = x.probs
    return g


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.size * b.size <= 4096:
        from scipy.signal import convolve

        out = convolve(a, b, method="direct")
    else:
        out = fftconvolve(a, b)
    return out


def _conv_pair(pa, ma, pb, mb):
    p = _conv(pa, pb)
    m = _conv(ma, mb) > 0.5
    p = np.where(m, np.clip(p, 0.0, None), 0.0)
    return p / p.sum(), m.astype(float)


def sum_distribution(x: DiscreteRV, n: int, cap: int = SUPPORT_CAP) -> DiscreteRV:
    """Distribution of the sum of ``n`` independent copies of ``x``."""
    if n < 1:
        raise DomainError("domain: N must be a positive integer")
    if n == 1:
        return x
    proj = projected_support(x, n)
    volume = float(np.prod([n * int(e) + 1 for e in x.points.max(axis=0)]))
    if proj > cap or volume > 5 * cap:
        raise SupportExplosionError(f"support explosion: about {proj} atoms (grid {volume:.3g}) exceeds cap {cap}")
    base_p = _grid(x)
    base_m = (base_p > 0).astype(float)
    acc = None
    p, m = base_p, base_m
    k = n
    while True:
        if k & 1:
            acc = (p, m) if acc is None else _conv_pair(acc[0], acc[1], p, m)
        k >>= 1
        if not k:
            break
        p, m = _conv_pair(p, m, p, m)
    probs, mask = acc
    idx = np.argwhere((mask > 0) & (probs > 0))
    vals = probs[tuple(idx.T)]
    offset = tuple(o * n for o in x.offset)
    return DiscreteRV(x.basis, offset, x.step, idx, vals / vals.sum())


# ------------------------------------------------------------- prepartitions


@dataclass(frozen=True)
class Prepartition:
    """Disjoint nonempty lattice subsets of a support set."""

    subsets: tuple

    def __post_init__(self):
        subs = tuple(tuple(_as_exact_list(s)) for s in self.subsets)
        if not subs:
            raise InvalidPrepartitionError("invalid prepartition: no subsets")
        seen: list[ExactReal] = []
        for s in subs:
            if not s:
                raise InvalidPrepartitionError("invalid prepartition: empty subset")
            for v in s:
                if v in seen:
                    raise InvalidPrepartitionError("invalid prepartition: subsets overlap")
                seen.append(v)
            if maximal_span(s).kind == "not_lattice":
                raise InvalidPrepartitionError("invalid prepartition: subset is not a lattice")
        object.__setattr__(self, "subsets", subs)

    @property
    def k(self) -> int:
        return len(self.subsets)

    @property
    def is_lattice(self) -> list[bool]:
        return [maximal_span(s).kind != "not_lattice" for s in self.subsets]

    @property
    def spans(self) -> list[ExactReal | None]:
        return [maximal_span(s).h for s in self.subsets]

    @property
    def degenerate(self) -> bool:
        return all(len(s) == 1 for s in self.subsets)

    def union(self) -> list[ExactReal]:
        return [v for s in self.subsets for v in s]

    def conditional(self, x: DiscreteRV, j: int) -> DiscreteRV:
        """Distribution of ``x`` conditioned on landing in subset ``j``."""
        atoms = [(v, x.prob_of(v)) for v in self.subsets[j]]
        tot = sum(p for _, p in atoms)
        if tot <= 0:
            raise InvalidPrepartitionError("invalid prepartition: subset has zero probability")
        return DiscreteRV.from_atoms([(v, p / tot) for v, p in atoms], tol=1e-9)

    def check_support(self, chi: Sequence[ExactReal]):
        for v in self.union():
            if v not in chi:
                raise InvalidPrepartitionError(f"invalid prepartition: {v!r} not in the support")


def _certificate_vectors(subsets: Sequence[Sequence[ExactReal]]) -> list[tuple]:
    anchors = [s[0] for s in subsets]
    vecs = [(a - anchors[0]).coeffs for a in anchors[1:]]
    for s in subsets:
        if len(s) > 1:
            vecs.append(maximal_span(s).h.coeffs)
    return vecs


def certify_incommensurable(subsets: Sequence[Sequence[ExactReal]]) -> bool:
    """Exact test that draw counts and per-subset totals are recoverable from the grand total.

    With anchors ``a_j`` and spans ``h_j`` every per-subset total of ``m_j`` draws
    is ``m_j a_j + t_j h_j``.  Two draws of the same size with equal grand totals
    differ by ``Σ_j c_j (a_j - a_1) + Σ_j e_j h_j = 0`` with integer ``c, e``; the
    decomposition is unique iff those vectors are rationally independent.
    """
    vecs = _certificate_vectors(subsets)
    return rational_rank(vecs) == len(vecs)


def find_collision(subsets: Sequence[Sequence[ExactReal]], n_max: int = 6):
    """Search draws with per-value multiplicity at most ``n_max`` for two of equal size and
    total whose per-subset (count, total) records differ.  Returns the pair or ``None``."""
    elems = [(j, v) for j, s in enumerate(subsets) for v in s]
    k = len(subsets)
    seen: dict[tuple, tuple] = {}
    for counts in itertools.product(range(n_max + 1), repeat=len(elems)):
        n = sum(counts)
        total = [Fraction(0)] * len(elems[0][1].coeffs)
        per = [[0, [Fraction(0)] * len(total)] for _ in range(k)]
        for c, (j, v) in zip(counts, elems):
            if c:
                for i, a in enumerate(v.coeffs):
                    total[i] += c * a
                    per[j][1][i] += c * a
                per[j][0] += c
        key = (n, tuple(total))
        record = tuple((m, tuple(t)) for m, t in per)
        prev = seen.get(key)
        if prev is None:
            seen[key] = (record, counts)
        elif prev[0] != record:
            return prev[1], counts
    return None


def iter_prepartitions(chi: Sequence[ExactReal], k: int | None = None):
    """All collections of disjoint nonempty lattice subsets of ``chi`` (only ``k`` of them if given)."""
    xs = list(chi)
    n = len(xs)
    for r in range(1, n + 1):
        if k is not None and r < k:
            continue
        for chosen in itertools.combinations(range(n), r):
            for blocks in _set_partitions(list(chosen)):
                if k is not None and len(blocks) != k:
                    continue
                subs = [[xs[i] for i in b] for b in blocks]
                if all(len(s) == 1 or maximal_span(s).kind != "not_lattice" for s in subs):
                    yield subs


def _set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def spanning_prepartition(chi: Sequence[ExactReal]) -> list[list[ExactReal]] | None:
    """Non-degenerate canonical prepartition with as many subsets as the affine dimension.

    Pairs the first element with one affinely independent partner and keeps
    further independent elements as singletons.
    """
    xs = _as_exact_list(chi)
    if len(xs) < 2:
        return None
    picked: list[ExactReal] = []
    rows: list[tuple] = []
    for x in xs[1:]:
        cand = rows + [(x - xs[0]).coeffs]
        if rational_rank(cand) == len(cand):
            rows = cand
            picked.append(x)
    return [[xs[0], picked[0]]] + [[x] for x in picked[1:]]


def exhaustive_rank(chi: Sequence[ExactReal]) -> int:
    """Largest certified non-degenerate prepartition size by brute-force enumeration."""
    best = 0
    for subs in iter_prepartitions(_as_exact_list(chi)):
        if len(subs) > best and not all(len(s) == 1 for s in subs) and certify_incommensurable(subs):
            best = len(subs)
    return best


def best_prepartition(chi: Sequence[ExactReal], exhaustive_limit: int = 6):
    """Highest-rank non-degenerate certified prepartition found.

    A certified prepartition with k subsets needs at least k independent
    differences, so the affine dimension caps k; the search stops there.
    """
    xs = _as_exact_list(chi)
    best = spanning_prepartition(xs)
    if best is not None and len(best) >= affine_span_dim(xs):
        return best
    if len(xs) <= exhaustive_limit:
        for subs in iter_prepartitions(xs):
            if all(len(s) == 1 for s in subs):
                continue
            if best is not None and len(subs) <= len(best):
                continue
            if certify_incommensurable(subs):
                best = subs
    return best


class RankResult(NamedTuple):
    lower: int
    certified_exact: bool


def incommensurability_rank(
    chi: Iterable[ExactReal], n_max_falsify: int = 6, exhaustive_limit: int = 6, verify: bool = False
) -> RankResult:
    """Lower bound on the incommensurability rank and whether it is known to be exact.

    The value is exact when the set was searched exhaustively or when the found
    prepartition reaches the affine-dimension cap.  With ``verify`` the winning prepartition is also run through the bounded
    collision search (multiplicities up to ``n_max_falsify``).
    """
    xs = _as_exact_list(chi)
    if len(xs) < 2:
        raise DomainError("domain: need at least two distinct values")
    q_bound = rational_span_dim(xs) - 1
    exhaustive = len(xs) <= exhaustive_limit
    best = best_prepartition(xs, exhaustive_limit)
    found = len(best) if best is not None else 0
    if verify and best is not None and find_collision(best, n_max_falsify) is not None:
        raise DomainError("certified prepartition admits a collision; basis is not rationally independent")
    certified = exhaustive or found >= affine_span_dim(xs)
    return RankResult(max(q_bound, found, 1), certified)


# ----------------------------------------------------------------- bounds


@dataclass(frozen=True)
class EntropyBound:
    value: float
    branch: str  # "lattice", "lambda1" or "lambda2"
    lam: float
    k: int
    s: int
    canonical: bool
    metadata: dict = field(default_factory=lambda: {"omits_vanishing_term": True})


LOG2_2PIE = math.log2(2 * math.pi * math.e)


def entropy_lower_bound(x: DiscreteRV, n: int, prepartition: Prepartition) -> EntropyBound:
    """Leading-order lower bound on ``S(T_N)`` for the given prepartition."""
    if n < 1:
        raise DomainError("domain: N must be positive")
    chi = x.values
    prepartition.check_support(chi)
    subs = prepartition.subsets
    k = prepartition.k
    p = [sum(x.prob_of(v) for v in s) for s in subs]
    if any(pj <= 0 for pj in p):
        raise InvalidPrepartitionError("invalid prepartition: every subset needs positive probability")
    q = sum(p)
    single = [j for j, s in enumerate(subs) if len(s) == 1]
    multi = [j for j, s in enumerate(subs) if len(s) > 1]
    s_cnt = len(single)
    canonical = certify_incommensurable(subs)
    if k == 1 and len(subs[0]) == len(chi) and len(chi) > 1:
        h = maximal_span(chi).h.float_value
        lam = x.variance() / h**2
        val = 0.5 * math.log2(n) + 0.5 * math.log2(2 * math.pi * math.e * lam)
        return EntropyBound(val, "lattice", lam, k, s_cnt, canonical)
    if s_cnt < k:
        prod = 1.0
        for j in single:
            prod *= p[j]
        prod *= 1.0 - sum(p[j] for j in single) / q
        for j in multi:
            cond = prepartition.conditional(x, j)
            h = maximal_span(subs[j]).h.float_value
            prod *= p[j] * cond.variance() / h**2
        lam = prod ** (1.0 / k)
        if lam <= 0:
            raise DomainError("domain: bound undefined for this prepartition")
        return EntropyBound(0.5 * k * (LOG2_2PIE + math.log2(n * lam)), "lambda1", lam, k, s_cnt, canonical)
    if k < 2:
        raise DomainError("domain: bound undefined for a single deterministic subset")
    lam = (math.prod(p) / q**k) ** (1.0 / (k - 1))
    return EntropyBound(0.5 * (k - 1) * (LOG2_2PIE + math.log2(n * lam)), "lambda2", lam, k, s_cnt, canonical)


def binomial_entropy(n: int, p: float) -> float:
    pmf = binom.pmf(np.arange(n + 1), n, p)
    pmf = pmf[pmf > 0]
    return float(-np.sum(pmf * np.log2(pmf)))


# -------------------------------------------------- qubit production entropy


def _is_one(x: float) -> bool:
    return abs(x - 1.0) <= 1e-12


def qubit_production_pmf(theta: float, m: int) -> np.ndarray:
    """Energy distribution on ``-2m..2m`` of the uniform mixture of shifted binomial sums."""
    if m < 0:
        raise DomainError("domain: m must be non-negative")
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    n = 2 * m
    out = np.zeros(2 * n + 1)
    for k in range(n + 1):
        a = binom.pmf(np.arange(k + 1), k, c2)
        b = binom.pmf(np.arange(n - k + 1), n - k, s2)
        conv = np.convolve(a, b)  # values 0..n, shifted by -k
        out[n - k : n - k + n + 1] += conv
    return out / (n + 1)


def qubit_production_entropy(theta: float, m: int) -> tuple[float, float]:
    """Exact entropy of the qubit construction's energy distribution and its leading-order floor."""
    pmf = qubit_production_pmf(theta, m)
    pmf = pmf[pmf > 0]
    exact = float(-np.sum(pmf * np.log2(pmf)))
    s2 = math.sin(theta) ** 2
    if m == 0 or s2 <= 0:
        return exact, float("-inf")
    floor = math.log2(4 * m * s2) - (1.0 if _is_one(s2) else 0.0)
    return exact, floor


def discretized_normal_mixture_entropy(mu_list: Sequence[float], sigma: float, truncation: tuple[int, int]) -> float:
    """Entropy of the uniform mixture of integer-binned normals, summed over a window.

    The mass outside ``truncation`` is dropped without renormalizing.
    """
    if not sigma > 0:
        raise DomainError("domain: sigma must be positive")
    lo, hi = truncation
    grid = np.arange(lo, hi + 1, dtype=float)
    mix = np.zeros_like(grid)
    for mu in mu_list:
        upper = (grid + 0.5 - mu) / sigma
        lower = (grid - 0.5 - mu) / sigma
        # use survival functions on the right tail to keep precision
        right = lower > 0
        mass = np.where(right, norm.sf(lower) - norm.sf(upper), norm.cdf(upper) - norm.cdf(lower))
        mix += np.clip(mass, 0.0, None)
    mix /= len(mu_list)
    mix = mix[mix > 0]
    return float(-np.sum(mix * np.log2(mix)))


def qubit_normal_mixture_entropy(theta: float, m: int) -> float:
    """Normal approximant of :func:`qubit_production_entropy` on the window ``[-2m, 2m]``."""
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    mus = [2 * (m - k) * s2 for k in range(2 * m + 1)]
    sigma = math.sqrt(2 * m * c2 * s2)
    return discretized_normal_mixture_entropy(mus, sigma, (-2 * m, 2 * m))
