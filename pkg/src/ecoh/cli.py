"""Batch front end: ``ecoh coherence|battery-sweep|bounds|iid``.

Every run is determined by its resolved config and seed; the config and the
library version are embedded in the output (a JSON field, or ``#`` header lines
in CSV).  Exit codes: 0 success, 2 schema error, 3 numeric cap, 4 optimizer
non-convergence (results are still written), 1 any other domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .battery_models import FULL_SWEEP_COLUMNS, SweepConfig, fmt12, ladder_sweep
from .bounds import VARIANTS, BoundReport, GateInstance, SearchOptions, bound_report, r2_lambda2_search
from .coherence import entropic_coherence, is_incoherent, twirl
from .errors import DimensionLimitError, EcohError, SchemaError, SupportExplosionError
from .iid_entropy import (
    Basis,
    DiscreteRV,
    ExactReal,
    Prepartition,
    best_prepartition,
    entropy_lower_bound,
    maximal_span,
    shannon_entropy,
    sum_distribution,
)
from .quantum_core import DensityOperator, Hamiltonian, PureState, matrix_from_json, moments, qfi, von_neumann_entropy

EXIT_OK, EXIT_ERROR, EXIT_SCHEMA, EXIT_CAP, EXIT_NONCONVERGED = 0, 1, 2, 3, 4

GATES = {
    "hadamard": [[2**-0.5, 2**-0.5], [2**-0.5, -(2**-0.5)]],
    "x": [[0, 1], [1, 0]],
    "identity": [[1, 0], [0, 1]],
}

DEFAULTS = {
    "coherence": {"state": None, "hamiltonian": None},
    "battery-sweep": {
        "gate": "hadamard", "omega": 1.0, "L_list": [2, 4, 8, 16, 32, 64, 128], "d_B": None,
        "profile": "sine", "starts": 8, "max_iters": 3000, "workers": 1,
    },
    "bounds": {
        "gate_file": None, "gate": None, "eps_list": [1e-2, 1e-4, 1e-6, 1e-8], "variant": "general",
        "alpha": 1.0, "basis": None, "search_depth": 2, "random_samples": 16,
    },
    "iid": {"rv_file": None, "N_list": [500, 1000, 2000], "prepartition_file": None},
}

# ------------------------------------------------------------------ loading


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaError(f"schema: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema: {path} is not valid JSON: {exc}") from exc


def load_state(data: dict):
    """Pure state if ``re`` is a flat list, density operator if it is nested."""
    if not isinstance(data, dict) or "re" not in data:
        raise SchemaError("schema: state needs 'dim', 're' and 'im'")
    re = np.asarray(data["re"], dtype=object)
    if re.ndim == 1:
        return PureState.from_json(data)
    return DensityOperator(matrix_from_json(data))


def parse_gate(gate) -> np.ndarray:
    """A named gate, a ``{"dim","re","im"}`` matrix, or nested rows of numbers or ``[re, im]`` pairs."""
    if isinstance(gate, str):
        if gate not in GATES:
            raise SchemaError(f"schema: unknown gate {gate!r}; choose from {sorted(GATES)}")
        return np.asarray(GATES[gate], dtype=complex)
    if isinstance(gate, dict):
        return matrix_from_json(gate)
    try:
        v = np.array([[complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in r] for r in gate])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"schema: cannot read gate matrix: {exc}") from exc
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise SchemaError("schema: gate must be a square matrix")
    return v


def load_gate(cfg: dict) -> GateInstance:
    if cfg.get("gate_file"):
        data = _read_json(cfg["gate_file"])
    elif cfg.get("gate") in GATES:
        data = {"levels": ["0", "1"], "V_S": {"dim": 2, "re": GATES[cfg["gate"]]}}
    else:
        raise SchemaError("schema: bounds needs --gate-file or a named --gate")
    if not isinstance(data, dict) or "V_S" not in data:
        raise SchemaError("schema: gate file needs 'V_S'")
    v = matrix_from_json(data["V_S"])
    if "levels" in data:
        basis = cfg.get("basis") or data.get("basis") or ["1"]
        return GateInstance.from_exact([str(x) for x in data["levels"]], v, tuple(basis))
    if "H_S" not in data:
        raise SchemaError("schema: gate file needs 'H_S' or 'levels'")
    return GateInstance(Hamiltonian.from_json(data["H_S"]), v)


def load_rv(data: dict) -> DiscreteRV:
    if not isinstance(data, dict):
        raise SchemaError("schema: random variable must be a JSON object")
    if "values" in data:
        try:
            basis = Basis(tuple(data.get("basis", ["1"])))
            return DiscreteRV.from_values([str(v) for v in data["values"]], [float(p) for p in data["probs"]], basis)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"schema: {exc}") from exc
    return DiscreteRV.from_json(data)


def default_prepartition(x: DiscreteRV) -> Prepartition:
    chi = x.values
    if len(chi) > 1 and maximal_span(chi).kind != "not_lattice":
        return Prepartition((tuple(chi),))
    best = best_prepartition(chi)
    if best is None:
        raise EcohError("no non-degenerate prepartition: the variable is deterministic")
    return Prepartition(tuple(tuple(s) for s in best))


def load_prepartition(data, x: DiscreteRV) -> Prepartition:
    try:
        subsets = data["subsets"] if isinstance(data, dict) else data
        return Prepartition(tuple(tuple(ExactReal.parse(str(v), x.basis) for v in s) for s in subsets))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"schema: {exc}") from exc


# ----------------------------------------------------------------- commands


def cmd_coherence(cfg: dict) -> tuple[dict, list[dict], bool]:
    if not cfg.get("state") or not cfg.get("hamiltonian"):
        raise SchemaError("schema: coherence needs --state and --hamiltonian")
    rho = load_state(_read_json(cfg["state"]))
    h = Hamiltonian.from_json(_read_json(cfg["hamiltonian"]))
    m = rho.density() if isinstance(rho, PureState) else rho
    mean, var = moments(rho, h)
    row = {
        "coherence_bits": entropic_coherence(rho, h),
        "entropy": von_neumann_entropy(m),
        "twirled_entropy": von_neumann_entropy(twirl(m, h)),
        "is_incoherent": is_incoherent(m, h),
        "mean_energy": mean,
        "variance": var,
        "qfi": qfi(rho, h),
    }
    return row, [row], True


def cmd_battery_sweep(cfg: dict) -> tuple[list[dict], list[dict], bool]:
    v = parse_gate(cfg["gate"])
    sc = SweepConfig(
        gate=tuple(tuple(complex(z) for z in r) for r in v),
        L_list=tuple(int(x) for x in cfg["L_list"]),
        omega=float(cfg["omega"]),
        profile=cfg["profile"],
        d_B=cfg["d_B"],
        starts=int(cfg["starts"]),
        seed=int(cfg["seed"]),
        max_iters=int(cfg["max_iters"]),
    )
    rows = [asdict(r) for r in ladder_sweep(sc, workers=int(cfg["workers"]))]
    return rows, rows, all(r["converged"] for r in rows)


def cmd_bounds(cfg: dict) -> tuple[list[dict], list[dict], bool]:
    if cfg["variant"] not in VARIANTS:
        raise SchemaError(f"schema: variant must be one of {VARIANTS}")
    g = load_gate(cfg)
    opts = SearchOptions(
        degenerate_superposition_depth=int(cfg["search_depth"]),
        random_samples=int(cfg["random_samples"]),
        seed=int(cfg["seed"]),
    )
    search = r2_lambda2_search(g, opts)
    reports = [bound_report(g, float(e), cfg["variant"], float(cfg["alpha"]), opts, search) for e in cfg["eps_list"]]
    payload = [r.to_json() for r in reports]
    return payload, [_flat_bound_row(r) for r in reports], True


def _flat_bound_row(r: BoundReport) -> dict:
    d = r.to_json()
    d.pop("witness")
    d["flags"] = ";".join(f"{k}={v}" for k, v in sorted(d["flags"].items()))
    return d


def cmd_iid(cfg: dict) -> tuple[list[dict], list[dict], bool]:
    if not cfg.get("rv_file"):
        raise SchemaError("schema: iid needs --rv")
    x = load_rv(_read_json(cfg["rv_file"]))
    rows = []
    pre, pre_err = None, None
    if cfg.get("prepartition_file"):
        pre = load_prepartition(_read_json(cfg["prepartition_file"]), x)
    else:
        try:
            pre = default_prepartition(x)
        except EcohError as exc:
            pre_err = str(exc)
    for n in cfg["N_list"]:
        n = int(n)
        row = {"N": n, "exact_entropy": None, "bound": None, "gap": None, "branch": None, "status": "ok"}
        if pre is None:
            row["status"] = f"error: {pre_err}"
            rows.append(row)
            continue
        try:
            b = entropy_lower_bound(x, n, pre)
            row["bound"], row["branch"] = b.value, b.branch
            exact = shannon_entropy(sum_distribution(x, n))
            row["exact_entropy"], row["gap"] = exact, exact - b.value
        except (SupportExplosionError, DimensionLimitError) as exc:
            row["status"] = f"skipped: {exc}"
        except EcohError as exc:
            row["status"] = f"error: {exc}"
        rows.append(row)
    return rows, rows, True


COMMANDS = {
    "coherence": cmd_coherence,
    "battery-sweep": cmd_battery_sweep,
    "bounds": cmd_bounds,
    "iid": cmd_iid,
}


# ------------------------------------------------------------------ output


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            return str(x)
        return float(fmt12(x))
    if isinstance(x, complex):
        return [_jsonable(x.real), _jsonable(x.imag)]
    return x


def render(command: str, cfg: dict, payload, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        doc = {"command": command, "version": __version__, "config": cfg, "result": payload}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# version={__version__}\n")
    buf.write(f"# command={command}\n")
    buf.write("# config=" + json.dumps(_jsonable(cfg), sort_keys=True) + "\n")
    cols = list(FULL_SWEEP_COLUMNS) if command == "battery-sweep" else list(rows[0]) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r.get(c) is None else fmt12(r[c]) if isinstance(r[c], (int, float, np.number)) else r[c] for c in cols])
    return buf.getvalue()


# ------------------------------------------------------------------ parsing


def _num_list(text: str, kind=float) -> list:
    try:
        return [kind(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="output path (default stdout)")

    p = argparse.ArgumentParser(prog="ecoh", description="energy-coherence diagnostics and bounds")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coherence", parents=[common], help="coherence diagnostics of a state")
    c.add_argument("--state")
    c.add_argument("--hamiltonian")

    s = sub.add_parser("battery-sweep", parents=[common], help="ladder-battery sweep over L")
    s.add_argument("--gate", help=f"one of {sorted(GATES)}")
    s.add_argument("--omega", type=float)
    s.add_argument("--L-list", dest="L_list", type=lambda t: _num_list(t, int))
    s.add_argument("--d-B", dest="d_B", type=int)
    s.add_argument("--profile", choices=("sine", "uniform"))
    s.add_argument("--starts", type=int)
    s.add_argument("--max-iters", dest="max_iters", type=int)
    s.add_argument("--workers", type=int)

    b = sub.add_parser("bounds", parents=[common], help="coherence lower bounds for a gate")
    b.add_argument("--gate-file", dest="gate_file")
    b.add_argument("--gate", help=f"named qubit gate, one of {sorted(GATES)}")
    b.add_argument("--eps", dest="eps_list", type=_num_list)
    b.add_argument("--variant", choices=VARIANTS)
    b.add_argument("--alpha", type=float)
    b.add_argument("--basis", type=lambda t: [x for x in t.split(",") if x], help="exact basis, e.g. 1,sqrt2")
    b.add_argument("--search-depth", dest="search_depth", type=int)
    b.add_argument("--random-samples", dest="random_samples", type=int)

    i = sub.add_parser("iid", parents=[common], help="exact vs bound entropy of i.i.d. sums")
    i.add_argument("--rv", dest="rv_file")
    i.add_argument("--N-list", dest="N_list", type=lambda t: _num_list(t, int))
    i.add_argument("--prepartition", dest="prepartition_file")
    return p


def resolve_config(args: argparse.Namespace) -> tuple[dict, str, str | None]:
    """Defaults, then config file, then explicit flags."""
    cfg = dict(DEFAULTS[args.command])
    cfg.update({"seed": 0, "format": "csv" if args.command in ("battery-sweep", "iid") else "json"})
    if args.config:
        data = _read_json(args.config)
        if not isinstance(data, dict):
            raise SchemaError("schema: config file must hold a JSON object")
        unknown = set(data) - set(cfg) - {"out"}
        if unknown:
            raise SchemaError(f"schema: unknown config keys {sorted(unknown)}")
        cfg.update(data)
    out = cfg.pop("out", None)
    for k, v in vars(args).items():
        if k in ("command", "config"):
            continue
        if k == "out":
            out = v if v is not None else out
        elif v is not None:
            cfg[k] = v
    fmt = cfg.pop("format")
    if fmt not in ("json", "csv"):
        raise SchemaError("schema: format must be json or csv")
    return cfg, fmt, out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, fmt, out = resolve_config(args)
        payload, rows, ok = COMMANDS[args.command](cfg)
    except SchemaError as exc:
        print(f"ecoh: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (SupportExplosionError, DimensionLimitError) as exc:
        print(f"ecoh: numeric cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except EcohError as exc:
        print(f"ecoh: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = render(args.command, cfg, payload, rows, fmt)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("ecoh: optimizer did not converge on every point; see the 'converged' column", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
