"""Hadamard on a ladder battery: worst-case error, battery coherence and the qubit bound versus L."""
import argparse
from dataclasses import dataclass

from ecoh.battery_models import FULL_SWEEP_COLUMNS, SweepConfig, ladder_sweep, loglog_slope, rows_to_csv


@dataclass
class Experiment:
    profile: str = "sine"
    l_max: int = 128
    starts: int = 8
    workers: int = 4
    out: str | None = None


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--profile", choices=("sine", "uniform"), default=Experiment.profile)
    p.add_argument("--l-max", type=int, default=Experiment.l_max)
    p.add_argument("--starts", type=int, default=Experiment.starts)
    p.add_argument("--workers", type=int, default=Experiment.workers)
    p.add_argument("--out")
    exp = Experiment(**vars(p.parse_args()))

    lengths = []
    length = 2
    while length <= exp.l_max:
        lengths.append(length)
        length *= 2
    rows = ladder_sweep(SweepConfig(L_list=tuple(lengths), profile=exp.profile, starts=exp.starts), workers=exp.workers)

    print(f"{'L':>5} {'eps_wc_upper':>13} {'coherence':>10} {'bound':>8}")
    for r in rows:
        print(f"{r.L:5d} {r.eps_wc_upper:13.4e} {r.coherence_bits:10.4f} {r.bound_value:8.4f}")
    print(f"log-log slope of eps_wc_upper vs L: {loglog_slope(lengths, [r.eps_wc_upper for r in rows]):.3f}")
    if exp.out:
        with open(exp.out, "w") as fh:
            fh.write(rows_to_csv(rows, FULL_SWEEP_COLUMNS))


if __name__ == "__main__":
    main()
