"""Exact entropy of i.i.d. sums against the asymptotic lower bound, for a lattice and a non-lattice variable.

For the uniform three-point variable the sum fixes the multinomial counts, so the
exact entropy has the expansion asymptote - 1/(6N) nats; the last column shows it.
"""
import argparse
import math
from dataclasses import dataclass, field

from ecoh.iid_entropy import Basis, DiscreteRV, ExactReal, Prepartition, entropy_lower_bound, shannon_entropy, sum_distribution


@dataclass
class Experiment:
    n_list: list = field(default_factory=lambda: [250, 500, 1000, 2000, 4000])


def table(name, x, pre, n_list, correction=None):
    print(f"\n{name}")
    print(f"{'N':>6} {'exact':>12} {'bound':>12} {'gap':>11}" + (f" {'-1/(6N) bits':>13}" if correction else ""))
    for n in n_list:
        exact = shannon_entropy(sum_distribution(x, n))
        bound = entropy_lower_bound(x, n, pre).value
        line = f"{n:6d} {exact:12.6f} {bound:12.6f} {exact - bound:+11.3e}"
        if correction:
            line += f" {correction(n):+13.3e}"
        print(line)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-list", type=lambda t: [int(v) for v in t.split(",")])
    args = p.parse_args()
    exp = Experiment(**({"n_list": args.n_list} if args.n_list else {}))

    bern = DiscreteRV.from_values(["0", "1"], [0.5, 0.5])
    table("Bernoulli(1/2), lattice branch", bern, Prepartition((tuple(bern.values),)), exp.n_list)

    b2 = Basis(("1", "sqrt2"))
    three = DiscreteRV.from_values(["0", "1", "sqrt2"], [1 / 3] * 3, b2)
    pre = Prepartition(((ExactReal.parse("0", b2), ExactReal.parse("1", b2)), (ExactReal.parse("sqrt2", b2),)))
    table("uniform on {0, 1, sqrt2}, prepartition {{0,1},{sqrt2}}", three, pre, exp.n_list,
          correction=lambda n: -1 / (6 * n) / math.log(2))


if __name__ == "__main__":
    main()
