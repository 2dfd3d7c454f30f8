"""Command-line interface: ``nmrqsim simulate|compare|gates|clusters``.

Exit codes: 0 success, 2 invalid input, 3 resource limit, 4 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .circuit import FORMULAS, build_fid_circuit
from .errors import ResourceError, ValidationError
from .hamiltonian import DENSE_LIMIT
from .spectro import AcquisitionConfig, acquire_fid, to_spectrum, trotter_error_sweep
from .spin_model import SpinSystem, decompose_clusters, load_spin_system
from .transpiler import resolve_topology, scaling_study

EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_INTERNAL = 0, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_inputs(path: Path) -> list[tuple[Path, SpinSystem]]:
    """A single JSON file or every ``*.json`` in a directory, sorted by name."""
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise ValidationError(f"no .json files in {path}")
    else:
        files = [path]
    return [(f, load_spin_system(f)) for f in files]


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ----------------------------------------------------------------- commands


def cmd_simulate(args: argparse.Namespace) -> int:
    src = Path(args.input)
    system = load_spin_system(src)
    cfg = AcquisitionConfig(
        n_points=args.points,
        sample_rate_hz=args.rate_hz,
        shots=args.shots,
        runs=args.runs,
        repetitions=args.reps,
        formula=args.formula,
        seed=args.seed,
    )
    out = Path(args.out_dir)
    manifest = {
        "command": "simulate",
        "argv": args.argv,
        "config": {**vars(cfg), "engine": args.engine, "line_broadening_hz": args.lb_hz},
        "input": str(src),
        "input_sha256": _sha256(src),
        "seed": args.seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if args.dump_circuit:
        circ = build_fid_circuit(system, cfg.dwell_s, cfg.repetitions, cfg.formula)
        _write(Path(args.dump_circuit), circ.dumps())
    fid = acquire_fid(system, cfg, args.engine)
    spec = to_spectrum(fid, args.lb_hz)
    # headers carry only deterministic fields so CSVs are byte-identical across runs
    ref = {"manifest": "manifest.json", "input_sha256": manifest["input_sha256"], "version": __version__}
    _write(out / "fid.csv", fid.to_csv(ref))
    _write(out / "spectrum.csv", spec.to_csv(ref))
    manifest["outputs"] = ["fid.csv", "spectrum.csv"]
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    peak = spec.freqs[spec.peak_bins(1)] if spec.freqs.size > 2 else []
    print(f"{system.name}: {system.n_spins} spins, {cfg.n_points} points, engine={args.engine}")
    if len(peak):
        print(f"strongest peak at {peak[0]:.2f} Hz")
    print(f"wrote {out / 'fid.csv'}, {out / 'spectrum.csv'}, {out / 'manifest.json'}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    dataset = [s for _, s in _load_inputs(Path(args.input))]
    for s in dataset:
        if s.n_spins > DENSE_LIMIT:
            raise ResourceError(f"{s.name}: {s.n_spins} spins exceeds the exact-reference limit of {DENSE_LIMIT}")
    cfg = AcquisitionConfig(n_points=args.points, sample_rate_hz=args.rate_hz, shots=0, runs=1)
    table = trotter_error_sweep(dataset, args.reps or (), args.orders or (), cfg)
    print(table.to_text())
    if args.csv:
        _write(Path(args.csv), table.to_csv())
    return EXIT_OK


def cmd_gates(args: argparse.Namespace) -> int:
    topo = resolve_topology(args.topology)
    dataset = [s for _, s in _load_inputs(Path(args.input))]
    study = scaling_study(dataset, topo, reps=args.reps, basis=args.basis, seed=args.seed)
    text = study.to_csv()
    if args.csv:
        _write(Path(args.csv), text)
    sys.stdout.write(text)
    for label, fit in (("count", study.count_fit), ("depth", study.depth_fit)):
        if fit is not None:
            a, b, c = fit.coeffs
            print(f"# quadratic fit {label}: {a:.4g} N^2 + {b:.4g} N + {c:.4g} (relative residual {fit.relative_residual:.3%})")
    if study.count_fit is None:
        print("# quadratic fit skipped: fewer than three distinct spin counts")
    return EXIT_OK


def cmd_clusters(args: argparse.Namespace) -> int:
    system = load_spin_system(Path(args.input))
    clusters = decompose_clusters(system, args.threshold_hz)
    print(f"{system.name}: {len(clusters)} cluster(s) at threshold {args.threshold_hz:g} Hz")
    for i, cl in enumerate(clusters):
        labels = " ".join(system.labels[k] for k in cl.members)
        print(f"  [{i}] size {cl.size}: {labels}")
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nmrqsim", description="Quantum-circuit NMR FID simulation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate an FID and its spectrum")
    sim.add_argument("--input", required=True, help="spin-system JSON file")
    sim.add_argument("--points", type=int, default=4096)
    sim.add_argument("--rate-hz", type=float, default=8000.0)
    sim.add_argument("--shots", type=int, default=4000, help="0 gives exact expectation values")
    sim.add_argument("--runs", type=int, default=5)
    sim.add_argument("--reps", type=int, default=1)
    sim.add_argument("--formula", choices=sorted(FORMULAS), default="lie")
    sim.add_argument("--engine", choices=("trotter", "exact"), default="trotter")
    sim.add_argument("--lb-hz", type=float, default=0.0, help="exponential line broadening")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out-dir", default=".")
    sim.add_argument("--dump-circuit", metavar="PATH", help="write the one-dwell circuit as text")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="cosine distance of product formulas to the exact spectrum")
    cmp_.add_argument("--input", required=True, help="JSON file or directory")
    cmp_.add_argument("--reps", type=_int_list, default=None, help="Lie-Trotter repetitions, e.g. 1,2,3,4")
    cmp_.add_argument("--orders", type=_int_list, default=None, help="Suzuki orders, e.g. 2,4")
    cmp_.add_argument("--points", type=int, default=4096)
    cmp_.add_argument("--rate-hz", type=float, default=8000.0)
    cmp_.add_argument("--csv", help="also write the table as CSV")
    cmp_.set_defaults(func=cmd_compare)

    gates = sub.add_parser("gates", help="routed two-qubit gate counts and depths")
    gates.add_argument("--input", required=True, help="JSON file or directory")
    gates.add_argument("--topology", default="heavy-hex-127", help="heavy-hex-N, path-N, ring-N or a JSON file")
    gates.add_argument("--reps", type=int, default=1)
    gates.add_argument("--basis", choices=("ecr", "cx"), default="ecr")
    gates.add_argument("--seed", type=int, default=0)
    gates.add_argument("--csv", help="also write the table to this file")
    gates.set_defaults(func=cmd_gates)

    cl = sub.add_parser("clusters", help="independent spin clusters of the coupling graph")
    cl.add_argument("--input", required=True)
    cl.add_argument("--threshold-hz", type=float, default=0.0)
    cl.set_defaults(func=cmd_clusters)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    if args.command == "compare" and not (args.reps or args.orders):
        args.reps = [1, 2, 3, 4]
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ResourceError, MemoryError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
