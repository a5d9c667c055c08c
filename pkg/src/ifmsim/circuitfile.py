"""Plain-text circuit description files.

One statement per line, ``#`` starts a comment::

    channel <name> <photon|excited|loss>
    bs <m1> <m2> <theta>
    absorber <mode> <excited> [@object]
    partial <mode> <loss> <t> <chi> [@object]
    mirror <mode> <out> [@object]
    input <mode>
    detector <name> <channel> [efficiency]

Numbers accept simple arithmetic with ``pi`` (``pi/4``, ``3*pi/8``, ``-0.5``),
written without spaces. Statements may appear in any order except that
elements are applied in file order. Without an ``@object`` tag the object
is the single lossy element (absorber, partial or mirror), if there is
exactly one.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple

from .errors import CircuitSemanticError, CircuitSyntaxError
from .interferometer import Circuit
from .measurement import DetectorConfig
from .state import (
    ChannelKind,
    ChannelLabel,
    ElementKind,
    StateVector,
    basis_state,
    make_beamsplitter,
    make_mirror_redirect,
    make_partial_object,
    make_perfect_absorber,
    make_registry,
)

OBJECT_TAG = "@object"
_KINDS = {"photon": ChannelKind.PHOTON, "excited": ChannelKind.EXCITED, "loss": ChannelKind.LOSS}
# statement -> (positional argument count, accepts @object)
_ELEMENT_ARITY = {"bs": (3, False), "absorber": (2, True), "partial": (4, True), "mirror": (2, True)}
_LOSSY_KINDS = (ElementKind.PERFECT_ABSORBER, ElementKind.PARTIAL_OBJECT, ElementKind.MIRROR_REDIRECT)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str
    kind: str = "syntax"

    def __str__(self):
        return f"line {self.line}, column {self.column}: {self.kind} error: {self.message}"


class Token(NamedTuple):
    text: str
    column: int


class ParsedCircuit(NamedTuple):
    circuit: Circuit
    detectors: DetectorConfig
    input_state: StateVector


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or a small arithmetic expression in ``pi``."""

    def ev(node):
        if isinstance(node, ast.Constant) and type(node.value) in (int, float):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"not a number: {text!r}")

    if len(text) > 64:
        raise ValueError("numeric expression too long")
    try:
        value = ev(ast.parse(text, mode="eval").body)
    except (SyntaxError, ZeroDivisionError, OverflowError, RecursionError, MemoryError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise ValueError(f"number must be finite: {text!r}")
    return value


def _tokenize(line: str) -> list[Token]:
    code = line.split("#", 1)[0]
    return [Token(m.group(), m.start() + 1) for m in re.finditer(r"\S+", code)]


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.diags: list[Diagnostic] = []
        self.channels: dict[str, tuple[ChannelLabel, int]] = {}
        self.statements: list[tuple[int, str, list[Token], Token | None]] = []

    def error(self, line, column, message, kind="syntax"):
        self.diags.append(Diagnostic(line, column, message, kind))

    def number(self, lineno, tok):
        try:
            return parse_number(tok.text)
        except ValueError as exc:
            self.error(lineno, tok.column, str(exc))
            return None

    def name(self, lineno, tok):
        if not tok.text.isidentifier():
            self.error(lineno, tok.column, f"{tok.text!r} is not a valid name")
            return False
        return True

    # first pass: syntax and channel declarations
    def scan(self):
        for lineno, line in enumerate(self.lines, start=1):
            toks = _tokenize(line)
            if not toks:
                continue
            head, args = toks[0], toks[1:]
            tag = None
            if args and args[-1].text == OBJECT_TAG:
                tag = args.pop()
            for tok in args:
                if tok.text.startswith("@"):
                    self.error(lineno, tok.column, f"unexpected tag {tok.text!r}")
                    break
            else:
                self.statement(lineno, head, args, tag)

    def statement(self, lineno, head, args, tag):
        kw = head.text
        if kw == "channel":
            if tag or len(args) != 2:
                self.error(lineno, head.column, "expected 'channel <name> <photon|excited|loss>'")
                return
            name, kind = args
            if not self.name(lineno, name):
                return
            if kind.text not in _KINDS:
                self.error(lineno, kind.column, f"unknown channel kind {kind.text!r}")
                return
            if name.text in self.channels:
                first = self.channels[name.text][1]
                self.error(lineno, name.column,
                           f"channel {name.text!r} already declared on line {first}", "semantic")
                return
            self.channels[name.text] = (ChannelLabel(_KINDS[kind.text], name.text), lineno)
        elif kw in _ELEMENT_ARITY:
            arity, taggable = _ELEMENT_ARITY[kw]
            if tag and not taggable:
                self.error(lineno, tag.column, f"'{kw}' cannot be tagged {OBJECT_TAG}")
            elif len(args) != arity:
                self.error(lineno, head.column, f"'{kw}' takes {arity} arguments, got {len(args)}")
            else:
                self.statements.append((lineno, kw, args, tag))
        elif kw in ("input", "detector"):
            if tag:
                self.error(lineno, tag.column, f"'{kw}' cannot be tagged {OBJECT_TAG}")
            elif kw == "input" and len(args) != 1:
                self.error(lineno, head.column, "expected 'input <mode>'")
            elif kw == "detector" and len(args) not in (2, 3):
                self.error(lineno, head.column, "expected 'detector <name> <channel> [efficiency]'")
            else:
                self.statements.append((lineno, kw, args, tag))
        else:
            self.error(lineno, head.column, f"unknown statement {kw!r}")

    def channel(self, lineno, tok, kind, role):
        if tok.text not in self.channels:
            self.error(lineno, tok.column, f"unknown channel {tok.text!r}", "semantic")
            return None
        label = self.channels[tok.text][0]
        if kind is not None and label.kind is not kind:
            self.error(lineno, tok.column,
                       f"{role} {tok.text!r} must be a channel of kind {kind.value}, not {label.kind.value}",
                       "semantic")
            return None
        return label

    # second pass: build elements, detectors, input
    def build(self):
        elements, lines, tagged = [], [], []
        ancilla_owner: dict[str, int] = {}
        assignments, efficiency, eff_line = {}, {}, {}
        input_label, input_line = None, None

        for lineno, kw, args, tag in self.statements:
            if kw == "input":
                if input_line is not None:
                    self.error(lineno, args[0].column,
                               f"input already given on line {input_line}", "semantic")
                    continue
                label = self.channel(lineno, args[0], ChannelKind.PHOTON, "input mode")
                if label is not None:
                    input_label, input_line = label, lineno
                continue
            if kw == "detector":
                det, ch = args[0], args[1]
                if not self.name(lineno, det):
                    continue
                if det.text == "no_click":
                    self.error(lineno, det.column, "'no_click' is a reserved name", "semantic")
                    continue
                label = self.channel(lineno, ch, None, "detector channel")
                eff = 1.0
                if len(args) == 3:
                    eff = self.number(lineno, args[2])
                    if eff is None:
                        continue
                    if not 0.0 < eff <= 1.0:
                        self.error(lineno, args[2].column,
                                   f"efficiency must lie in (0, 1], got {eff}", "semantic")
                        continue
                if label is None:
                    continue
                if label.name in assignments:
                    self.error(lineno, ch.column,
                               f"channel {label.name!r} is already watched by "
                               f"{assignments[label.name]!r}", "semantic")
                    continue
                if det.text in efficiency and efficiency[det.text] != eff:
                    self.error(lineno, det.column,
                               f"detector {det.text!r} given a different efficiency on line "
                               f"{eff_line[det.text]}", "semantic")
                    continue
                assignments[label.name] = det.text
                efficiency[det.text], eff_line[det.text] = eff, lineno
                continue

            element = self.element(lineno, kw, args)
            if element is None:
                continue
            for label, tok in zip(element.touched, args):
                if label.kind is ChannelKind.PHOTON:
                    continue
                if label.name in ancilla_owner:
                    self.error(lineno, tok.column,
                               f"channel {label.name!r} is already used by the element on line "
                               f"{ancilla_owner[label.name]}; each lossy element needs its own",
                               "semantic")
                    element = None
                    break
                ancilla_owner[label.name] = lineno
            if element is None:
                continue
            if tag is not None:
                if tagged:
                    self.error(lineno, tag.column,
                               f"second {OBJECT_TAG} tag (first on line {lines[tagged[0]]})",
                               "semantic")
                    continue
                tagged.append(len(elements))
            elements.append(element)
            lines.append(lineno)

        return elements, lines, tagged, assignments, efficiency, input_label

    def element(self, lineno, kw, args):
        P, E, L = ChannelKind.PHOTON, ChannelKind.EXCITED, ChannelKind.LOSS
        if kw == "bs":
            m1 = self.channel(lineno, args[0], P, "beamsplitter port")
            m2 = self.channel(lineno, args[1], P, "beamsplitter port")
            theta = self.number(lineno, args[2])
            if None in (m1, m2, theta):
                return None
            if m1 == m2:
                self.error(lineno, args[1].column, "beamsplitter ports must differ", "semantic")
                return None
            if not 0.0 <= theta <= math.pi / 2:
                self.error(lineno, args[2].column,
                           f"mixing angle must lie in [0, pi/2], got {theta}", "semantic")
                return None
            return make_beamsplitter(m1, m2, theta)
        if kw == "partial":
            mode = self.channel(lineno, args[0], P, "object mode")
            out = self.channel(lineno, args[1], L, "loss channel")
            t = self.number(lineno, args[2])
            chi = self.number(lineno, args[3])
            if None in (mode, out, t, chi):
                return None
            if not 0.0 <= t <= 1.0:
                self.error(lineno, args[2].column, f"t must lie in [0, 1], got {t}", "semantic")
                return None
            return make_partial_object(mode, t, chi, out)
        mode = self.channel(lineno, args[0], P, "object mode")
        if kw == "absorber":
            out = self.channel(lineno, args[1], E, "excitation channel")
            maker = make_perfect_absorber
        else:
            out = self.channel(lineno, args[1], L, "outgoing channel")
            maker = make_mirror_redirect
        if mode is None or out is None:
            return None
        return maker(mode, out)


def parse_circuit(text: str) -> ParsedCircuit:
    """Parse circuit text; raises CircuitSyntaxError / CircuitSemanticError.

    Every problem found is reported, each with a 1-based line and column.
    """
    p = _Parser(text)
    p.scan()
    if not p.channels and not p.diags:
        p.error(1, 1, "no channels declared")
    if any(d.kind == "syntax" for d in p.diags):
        raise CircuitSyntaxError(p.diags)

    elements, lines, tagged, assignments, efficiency, input_label = p.build()
    if not p.diags:
        if not elements:
            p.error(1, 1, "circuit has no elements", "semantic")
        elif not tagged:
            lossy = [i for i, el in enumerate(elements) if el.kind in _LOSSY_KINDS]
            if len(lossy) == 1:
                tagged = lossy
            else:
                p.error(lines[0], 1,
                        f"no {OBJECT_TAG} tag and {len(lossy)} lossy elements; tag the object",
                        "semantic")
    if p.diags:
        syntax = any(d.kind == "syntax" for d in p.diags)
        raise (CircuitSyntaxError if syntax else CircuitSemanticError)(p.diags)

    registry = make_registry(label for label, _ in p.channels.values())
    circuit = Circuit(registry, tuple(elements), tagged[0])
    if assignments:
        detectors = DetectorConfig(assignments, efficiency)
    else:
        detectors = DetectorConfig.ideal(registry)
    state = basis_state(registry, input_label.name) if input_label else circuit.default_input()
    return ParsedCircuit(circuit, detectors, state)



def format_circuit(
    circuit: Circuit,
    detectors: DetectorConfig | None = None,
    input_state: StateVector | None = None,
) -> str:
    """Write `circuit` back out in the file format; floats keep full precision."""
    out = [f"channel {label.name} {label.kind.value}" for label in circuit.registry]
    for i, el in enumerate(circuit.elements):
        tag = f" {OBJECT_TAG}" if i == circuit.object_slot else ""
        names = " ".join(el.names)
        if el.kind is ElementKind.BEAMSPLITTER:
            if tag:
                raise ValueError("a beamsplitter cannot be the tagged object in a circuit file")
            out.append(f"bs {names} {el.params[0]!r}")
        elif el.kind is ElementKind.PERFECT_ABSORBER:
            out.append(f"absorber {names}{tag}")
        elif el.kind is ElementKind.MIRROR_REDIRECT:
            out.append(f"mirror {names}{tag}")
        elif el.kind is ElementKind.PARTIAL_OBJECT:
            t, chi = el.params
            out.append(f"partial {names} {t!r} {chi!r}{tag}")
        else:
            raise ValueError(f"{el.kind.value} elements have no file representation")
    if input_state is not None:
        hot = [n for n, a in input_state.as_dict().items() if a != 0]
        if len(hot) != 1 or input_state[hot[0]] != 1:
            raise ValueError("only single-channel basis inputs can be written")
        out.append(f"input {hot[0]}")
    if detectors is not None:
        for channel, det in detectors.assignments.items():
            out.append(f"detector {det} {channel} {detectors.efficiency[det]!r}")
    return "\n".join(out) + "\n"


BUNDLED = ("ev_bomb", "ev_reference", "partial_object", "mirror")


def bundled_circuit_text(name: str) -> str:
    return resources.files("ifmsim").joinpath("circuits").joinpath(f"{name}.ifm").read_text("utf-8")


def read_circuit_text(source: str | Path) -> str:
    """Text of a circuit file, or of a bundled example when `source` names one."""
    path = Path(source)
    if path.exists():
        raw = path.read_bytes()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = raw[: exc.start].count(b"\n") + 1
            raise CircuitSyntaxError([Diagnostic(line, 1, "file is not valid UTF-8")]) from None
    if str(source) in BUNDLED:
        return bundled_circuit_text(str(source))
    raise FileNotFoundError(f"no circuit file {str(source)!r} and no bundled example of that name")


def load_circuit(source: str | Path) -> ParsedCircuit:
    return parse_circuit(read_circuit_text(source))
