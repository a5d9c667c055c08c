"""Command-line entry point: ``ifmsim <simulate|silhouette|sample|estimate|sweep>``.

Exit codes: 0 success, 1 parse/usage error, 2 numeric or physics error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .circuitfile import load_circuit
from .errors import CircuitFileError, IFMError, PhaseUndefined
from .estimation import reconstruct_object, sweep
from .interferometer import evolve, reference_evolution, silhouette
from .measurement import CountRecord, sample
from .output import (
    dumps,
    fmt_complex,
    state_to_json,
    complex_pair,
    sweep_to_csv,
    sweep_to_jsonl,
    table,
)

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _element_label(el) -> str:
    if el.params:
        return f"{el.kind.value}({', '.join(f'{p:.6g}' for p in el.params)})"
    return el.kind.value


def cmd_simulate(args):
    parsed = load_circuit(args.circuit)
    circuit = parsed.circuit
    result = reference_evolution(circuit, parsed.input_state) if args.reference else evolve(
        circuit, parsed.input_state
    )
    names = list(circuit.registry.names)
    if args.format == "json":
        return dumps({
            "channels": names,
            "object_slot": circuit.object_slot,
            "reference": args.reference,
            "input": state_to_json(parsed.input_state),
            "trace": [
                {"element": el.kind.value, "channels": list(el.names), "params": list(el.params),
                 "state": state_to_json(st)}
                for el, st in zip(circuit.elements, result.trace)
            ],
            "final": state_to_json(result.final_state),
        })
    header = ["channel", "input"] + [
        f"{i + 1}:{_element_label(el)}" + ("*" if i == circuit.object_slot else "")
        for i, el in enumerate(circuit.elements)
    ]
    columns = [parsed.input_state, *result.trace]
    rows = [[n] + [fmt_complex(col[n]) for col in columns] for n in names]
    return table(header, rows)


def cmd_silhouette(args):
    parsed = load_circuit(args.circuit)
    sil = silhouette(parsed.circuit, parsed.input_state)
    names = list(parsed.circuit.registry.names)
    if args.format == "json":
        return dumps({
            "channels": names,
            "amplitude": state_to_json(sil.amplitude),
            "forward": {k: complex_pair(v) for k, v in sil.forward.items()},
            "reaction": {k: complex_pair(v) for k, v in sil.reaction.items()},
            "with_object": state_to_json(sil.evolved.final_state),
            "reference": state_to_json(sil.reference.final_state),
            "optical_theorem_residual": sil.optical_theorem_residual(),
        })
    rows = []
    for n in names:
        part = "forward" if n in sil.forward else "reaction"
        rows.append([n, part, fmt_complex(sil.evolved.final_state[n]),
                     fmt_complex(sil.reference.final_state[n]), fmt_complex(sil.amplitude[n])])
    out = table(["channel", "part", "with object", "reference", "silhouette"], rows)
    return out + f"\noptical theorem residual: {sil.optical_theorem_residual():.3g}"


def cmd_sample(args):
    parsed = load_circuit(args.circuit)
    circuit = parsed.circuit
    result = reference_evolution(circuit, parsed.input_state) if args.reference else evolve(
        circuit, parsed.input_state
    )
    record = sample(result.final_state, parsed.detectors, args.shots, args.seed, shards=args.shards)
    return dumps(record.to_dict())


def _read_record(path):
    try:
        return CountRecord.from_json(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from None
    except IFMError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_estimate(args):
    counts, reference = _read_record(args.counts), _read_record(args.reference)
    est = reconstruct_object(
        counts, reference, dark=args.dark, bright=args.bright,
        allow_undefined_phase=args.allow_undefined_phase,
    )
    d = est.to_dict()
    d["phase_undefined"] = not est.phase_defined
    if args.format == "pretty":
        lines = [f"W = {est.W:.6g} +- {est.sigma_W:.2g}" + (" (clamped)" if est.clamped_W else "")]
        if est.phase_defined:
            lines.append(f"cos chi = {est.cos_chi:.6g} +- {est.sigma_cos_chi:.2g}"
                         + (" (clamped)" if est.clamped_cos_chi else ""))
            lines.append(f"chi = {est.chi:.6g} rad (sign not observable)")
        else:
            lines.append("phase undefined: no resolved transmission")
        lines.append(f"t = {est.t:.6g}; object present: {est.object_present}")
        return "\n".join(lines)
    return dumps(d)


def parse_grid(text: str) -> list[float]:
    """``0,0.5,1`` or ``linspace:START:STOP:N``; ``pi`` expressions allowed."""
    from .circuitfile import parse_number

    try:
        if text.startswith("linspace:"):
            _, start, stop, n = text.split(":")
            return list(np.linspace(parse_number(start), parse_number(stop), int(n)))
        return [parse_number(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from None


def cmd_sweep(args):
    t_grid, chi_grid = parse_grid(args.t_grid), parse_grid(args.chi_grid)
    if not t_grid or not chi_grid:
        raise UsageError("grids must be non-empty")
    if any(not 0 <= t <= 1 for t in t_grid):
        raise UsageError("t grid values must lie in [0, 1]")
    rows = sweep(t_grid, chi_grid, args.shots, args.seed, workers=args.workers)
    if args.format == "json":
        return sweep_to_jsonl(rows).rstrip("\n")
    if args.format == "pretty":
        body = [[f"{r.t:.6g}", f"{r.chi:.6g}", f"{r.P1_exact:.6g}", f"{r.P2_exact:.6g}",
                 f"{r.W_est:.6g}", f"{r.sigma_W:.2g}",
                 "nan" if math.isnan(r.cos_chi_est) else f"{r.cos_chi_est:.6g}"] for r in rows]
        return table(["t", "chi", "P1", "P2", "W_est", "sigma_W", "cos_chi_est"], body)
    return sweep_to_csv(rows).rstrip("\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ifmsim", description="Interaction-free measurement simulator and estimator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, formats, default):
        sp.add_argument("--format", choices=formats, default=default)
        sp.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")

    sp = sub.add_parser("simulate", help="print the amplitude after every element")
    sp.add_argument("circuit", help="circuit file or bundled example name (e.g. ev_bomb)")
    sp.add_argument("--reference", action="store_true", help="replace the object by identity")
    common(sp, ["pretty", "json"], "pretty")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("silhouette", help="difference between runs with and without the object")
    sp.add_argument("circuit")
    common(sp, ["pretty", "json"], "pretty")
    sp.set_defaults(func=cmd_silhouette)

    sp = sub.add_parser("sample", help="sample detector counts")
    sp.add_argument("circuit")
    sp.add_argument("--shots", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--shards", type=int, default=1)
    sp.add_argument("--reference", action="store_true", help="sample the object-removed run")
    common(sp, ["json"], "json")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("estimate", help="reconstruct W and chi from two count records")
    sp.add_argument("counts", help="CountRecord JSON of the run with the object")
    sp.add_argument("reference", help="CountRecord JSON of the object-removed run")
    sp.add_argument("--dark", default="D_a")
    sp.add_argument("--bright", default="D_b")
    sp.add_argument("--allow-undefined-phase", action="store_true")
    common(sp, ["json", "pretty"], "json")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("sweep", help="simulate and reconstruct over a (t, chi) grid")
    sp.add_argument("--t-grid", required=True)
    sp.add_argument("--chi-grid", required=True)
    sp.add_argument("--shots", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--workers", type=int, default=1)
    common(sp, ["csv", "json", "pretty"], "csv")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        text = args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, CircuitFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PhaseUndefined as exc:
        print(f"error: {exc} (pass --allow-undefined-phase to report it)", file=sys.stderr)
        return EXIT_NUMERIC
    except (IFMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
