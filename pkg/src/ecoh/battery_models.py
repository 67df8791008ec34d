"""Ladder batteries driving qubit gates, plus level-counting diagnostics."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .coherence import entropic_coherence
from .errors import DomainError, ResonanceError, ShapeMismatchError, SupportRangeError
from .quantum_core import Hamiltonian, PureState, as_density, moments, qfi
from .tep_channels import TepChannel, WorstCaseOptions, worst_case_infidelity

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class LadderBattery:
    d_B: int
    omega: float = 1.0

    def __post_init__(self):
        if self.d_B < 2:
            raise DomainError("ladder needs at least two levels")
        if not self.omega > 0:
            raise DomainError("ladder spacing must be positive")

    @property
    def hamiltonian(self) -> Hamiltonian:
        return ladder_hamiltonian(self.d_B, self.omega)


@dataclass(frozen=True)
class BatteryReport:
    coherence: float
    mean_energy: float
    variance: float
    qfi: float
    e_max: float
    n_levels_2emax: int


def ladder_hamiltonian(d_b: int, omega: float = 1.0) -> Hamiltonian:
    if d_b < 2:
        raise DomainError("ladder needs at least two levels")
    return Hamiltonian.from_energies(omega * np.arange(d_b, dtype=float))


def _check_range(d_b: int, n0: int, length: int):
    if length < 1 or n0 < 0:
        raise DomainError("need L >= 1 and n0 >= 0")
    if n0 + length > d_b:
        raise SupportRangeError(f"support exceeds battery: levels {n0}..{n0 + length - 1} vs d_B={d_b}")


def uniform_ladder_state(d_b: int, n0: int, length: int) -> PureState:
    """Equal superposition of ``length`` consecutive levels starting at ``n0``."""
    _check_range(d_b, n0, length)
    v = np.zeros(d_b, dtype=complex)
    v[n0 : n0 + length] = 1.0 / np.sqrt(length)
    return PureState(v)


def sine_ladder_state(d_b: int, n0: int, length: int) -> PureState:
    """Superposition with a half-period sine envelope over ``length`` levels.

    The envelope vanishes smoothly at both ends, which suppresses the edge
    error of the ladder channel compared to the flat profile.
    """
    _check_range(d_b, n0, length)
    v = np.zeros(d_b, dtype=complex)
    v[n0 : n0 + length] = np.sin(np.pi * np.arange(1, length + 1) / (length + 1))
    return PureState.normalized(v)


def qubit_ladder_channel(v, battery: LadderBattery, beta, h_s: Hamiltonian | None = None) -> TepChannel:
    """Joint unitary applying ``v`` inside every two-level total-energy block.

    In the block of total energy ``kω`` the ordered basis is ``|0,k>, |1,k-1>``.
    The two one-dimensional edge blocks ``|0,0>`` and ``|1,d_B-1>`` get the phase
    of the matching diagonal entry of ``v`` (1 when that entry vanishes), so
    identity and diagonal gates are reproduced exactly for every battery state.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (2, 2):
        raise ShapeMismatchError("shape mismatch: qubit gate must be 2x2")
    om = battery.omega
    if h_s is None:
        h_s = Hamiltonian.from_energies([0.0, om])
    elif h_s.dim != 2 or len(h_s.energies) != 2 or abs((h_s.energies[1] - h_s.energies[0]) - om) > 1e-12 * om:
        raise ResonanceError("resonance required: system gap must equal the ladder spacing")
    elif not h_s.is_diagonal or h_s.diagonal[0] > h_s.diagonal[1]:
        raise ResonanceError("resonance required: system Hamiltonian must be diag(E0, E0 + omega)")
    d_b = battery.d_B
    u = np.eye(2 * d_b, dtype=complex)
    for idx, x in ((0, v[0, 0]), (2 * d_b - 1, v[1, 1])):
        if abs(x) > 1e-12:
            u[idx, idx] = x / abs(x)
    for k in range(1, d_b):
        i, j = k, d_b + k - 1
        u[i, i], u[i, j] = v[0, 0], v[0, 1]
        u[j, i], u[j, j] = v[1, 0], v[1, 1]
    return TepChannel(h_s, battery.hamiltonian, as_density(beta), u)


def spectral_count(e: float, h: Hamiltonian) -> int:
    """Number of levels (with multiplicity) at energy at most ``e``."""
    tol = h.grouping_tol
    return int(sum(d for en, d in zip(h.energies, h.degeneracies) if en <= e + tol))


def battery_report(beta, h_b: Hamiltonian) -> BatteryReport:
    pops = h_b.level_populations(beta if isinstance(beta, PureState) else as_density(beta))
    e_max = float(h_b.energies[np.nonzero(pops > 1e-12)[0][-1]])
    mean, var = moments(beta, h_b)
    return BatteryReport(
        coherence=entropic_coherence(beta, h_b),
        mean_energy=mean,
        variance=var,
        qfi=qfi(beta, h_b),
        e_max=e_max,
        n_levels_2emax=spectral_count(2 * e_max, h_b),
    )


@dataclass(frozen=True)
class SweepConfig:
    gate: tuple = ((1 / np.sqrt(2), 1 / np.sqrt(2)), (1 / np.sqrt(2), -1 / np.sqrt(2)))
    L_list: tuple = (2, 4, 8, 16, 32, 64, 128)
    omega: float = 1.0
    profile: str = "sine"
    d_B: int | None = None
    starts: int = 8
    seed: int = 0
    max_iters: int = 3000

    def gate_matrix(self) -> np.ndarray:
        return np.asarray(self.gate, dtype=complex)


SWEEP_COLUMNS = (
    "L", "eps_choi", "eps_wc_estimate", "eps_wc_upper", "coherence_bits",
    "mean_energy", "variance", "qfi", "bound_value",
)


@dataclass
class SweepRow:
    L: int
    d_B: int
    eps_choi: float
    eps_wc_lower: float
    eps_wc_estimate: float
    eps_wc_upper: float
    diamond_lower: float
    diamond_upper: float
    converged: bool
    gap: float
    iterations: int
    coherence_bits: float
    mean_energy: float
    variance: float
    qfi: float
    e_max: float
    n_levels_2emax: int
    bound_value: float


FULL_SWEEP_COLUMNS = tuple(SweepRow.__dataclass_fields__)


PROFILES = {"uniform": uniform_ladder_state, "sine": sine_ladder_state}


def sweep_point(cfg: SweepConfig, length: int) -> SweepRow:
    from .bounds import coherence_lower_bound, qubit_constants

    if cfg.profile not in PROFILES:
        raise DomainError(f"unknown battery profile {cfg.profile!r}")
    d_b = cfg.d_B if cfg.d_B is not None else length + 2
    n0 = 1 if d_b >= length + 2 else 0
    battery = LadderBattery(d_b, cfg.omega)
    psi = PROFILES[cfg.profile](d_b, n0, length)
    v = cfg.gate_matrix()
    ch = qubit_ladder_channel(v, battery, psi)
    rep = worst_case_infidelity(ch, v, WorstCaseOptions(starts=cfg.starts, seed=cfg.seed, max_iters=cfg.max_iters))
    brep = battery_report(psi, battery.hamiltonian)
    bound = 0.0
    if rep.eps_wc_upper > 0:
        r2, lam = qubit_constants(v)
        if r2 > 0 and rep.eps_wc_upper < 1:
            bound = coherence_lower_bound((r2, lam), rep.eps_wc_upper, "qubit", d_s=2)
    return SweepRow(
        L=length,
        d_B=d_b,
        eps_choi=rep.eps_choi,
        eps_wc_lower=rep.eps_wc_lower,
        eps_wc_estimate=rep.eps_wc_estimate,
        eps_wc_upper=rep.eps_wc_upper,
        diamond_lower=rep.diamond_lower,
        diamond_upper=rep.diamond_upper,
        converged=rep.converged,
        gap=rep.gap,
        iterations=rep.iterations,
        coherence_bits=brep.coherence,
        mean_energy=brep.mean_energy,
        variance=brep.variance,
        qfi=brep.qfi,
        e_max=brep.e_max,
        n_levels_2emax=brep.n_levels_2emax,
        bound_value=bound,
    )


def _sweep_task(args):
    return sweep_point(*args)


def ladder_sweep(cfg: SweepConfig, workers: int = 1) -> list[SweepRow]:
    """Rows ordered as ``cfg.L_list`` regardless of which worker finishes first."""
    tasks = [(cfg, int(length)) for length in cfg.L_list]
    if workers <= 1 or len(tasks) < 2:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_task, tasks))


def fmt12(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def rows_to_csv(rows: list[SweepRow], columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        d = asdict(r)
        w.writerow([fmt12(d[c]) for c in columns])
    return buf.getvalue()


def loglog_slope(xs, ys) -> float:
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
