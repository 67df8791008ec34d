"""Coherence, dimension, energy and Fisher-information lower bounds for a qubit gate over an error grid,
plus the entropy-constrained energy and variance minima on a ladder against their asymptotes."""
import argparse
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ecoh.bounds import (
    GateInstance,
    bound_report,
    energy_bound_corollary,
    min_energy_at_coherence,
    min_variance_at_coherence,
    qfi_bound_corollary,
    qubit_constants,
    sigma_values,
)
from ecoh.cli import GATES
from ecoh.quantum_core import Hamiltonian


@dataclass
class Experiment:
    gate: str = "hadamard"
    alpha: float = 1.0
    eps_list: list = field(default_factory=lambda: [10.0**-k for k in range(2, 11)])
    ladder_dim: int = 4096
    coherences: list = field(default_factory=lambda: [2.0, 4.0, 6.0, 8.0, 10.0])


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--gate", choices=sorted(GATES), default=Experiment.gate)
    p.add_argument("--alpha", type=float, default=Experiment.alpha)
    exp = Experiment(**vars(p.parse_args()))

    g = GateInstance(Hamiltonian.from_energies([0.0, 1.0]), np.asarray(GATES[exp.gate], dtype=complex))
    r2q, lamq = qubit_constants(g.V_S, g.H_S)
    sigma_q = sigma_values(r2q, lamq, 2, exp.alpha)[0] if r2q else 0.0
    print(f"gate {exp.gate}: qubit constants r2={r2q}, lambda2={lamq:.4f}, sigma={sigma_q:.4g}")
    print(f"{'eps':>8} {'general':>8} {'prop':>8} {'qubit':>8} {'qubit-p':>8} {'dim':>10} {'energy':>10} {'qfi':>10}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for eps in exp.eps_list:
            rep = bound_report(g, eps, "qubit", exp.alpha)
            energy = energy_bound_corollary(r2q, sigma_q, 1.0, eps)
            qfi = qfi_bound_corollary(r2q, sigma_q, 1.0, 2, eps) if eps * 2 < 1 else float("nan")
            print(
                f"{eps:8.0e} {rep.coherence_bound_general:8.3f} {rep.coherence_bound_proportionate:8.3f} "
                f"{rep.coherence_bound_qubit:8.3f} {rep.coherence_bound_qubit_proportionate:8.3f} "
                f"{rep.dim_bound:10.4g} {energy:10.4g} {qfi:10.4g}"
            )

    h = Hamiltonian.from_energies(np.arange(float(exp.ladder_dim)))
    print(f"\nladder d_B={exp.ladder_dim}: least mean energy and variance at fixed coherence")
    print(f"{'C':>5} {'energy':>10} {'2^C/e-1/2':>10} {'variance':>10} {'2^2C/(2pi e)':>13}")
    for c in exp.coherences:
        e = min_energy_at_coherence(h, c).energy
        v = min_variance_at_coherence(h, c).variance
        print(f"{c:5.1f} {e:10.2f} {2**c / math.e - 0.5:10.2f} {v:10.2f} {2 ** (2 * c) / (2 * math.pi * math.e):13.2f}")


if __name__ == "__main__":
    main()
