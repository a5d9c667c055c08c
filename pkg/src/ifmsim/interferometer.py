"""Circuits, the Mach-Zehnder builder and the forward-scattering decomposition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChannelNotInRegistry, InvalidCircuit, InvalidObjectPlacement
from .state import (
    ChannelKind,
    ChannelRegistry,
    Element,
    StateVector,
    apply,
    basis_state,
    make_beamsplitter,
    make_identity,
    make_registry,
    photon,
)


@dataclass(frozen=True, eq=False)
class Circuit:
    registry: ChannelRegistry
    elements: tuple[Element, ...]
    object_slot: int

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        if not 0 <= self.object_slot < len(elements):
            raise InvalidCircuit(
                f"object slot {self.object_slot} out of range for {len(elements)} elements"
            )
        owner = {}
        for i, el in enumerate(elements):
            for ch in el.touched:
                self.registry.index(ch)  # raises ChannelNotInRegistry
                if ch.kind is ChannelKind.PHOTON:
                    continue
                if ch.name in owner:
                    raise InvalidCircuit(
                        f"ancilla channel {ch.name!r} is shared by elements "
                        f"{owner[ch.name]} and {i}"
                    )
                owner[ch.name] = i

    @property
    def object(self) -> Element:
        return self.elements[self.object_slot]

    def without_object(self) -> "Circuit":
        """Same circuit with the object replaced by identity on its channels."""
        elements = list(self.elements)
        elements[self.object_slot] = make_identity(self.object.touched)
        return Circuit(self.registry, tuple(elements), self.object_slot)

    def default_input(self) -> StateVector:
        photons = self.registry.of_kind(ChannelKind.PHOTON)
        first = photons[0] if photons else self.registry.labels[0]
        return basis_state(self.registry, first.name)


@dataclass(frozen=True)
class EvolutionResult:
    final_state: StateVector
    trace: tuple[StateVector, ...]


def build_mach_zehnder(obj: Element, theta1: float = np.pi / 4, theta2: float = np.pi / 4) -> Circuit:
    """Two beamsplitters on modes a and b with `obj` sitting in arm b.

    The registry is (a, b, ancillas of obj...), so for the perfect absorber it
    is the three-vector basis (photon in a, photon in b, absorber excited).
    """
    names = obj.names
    if "a" in names:
        raise InvalidObjectPlacement("the object must not touch mode 'a'")
    if "b" not in names:
        raise InvalidObjectPlacement("the object must act on mode 'b'")
    b = next(c for c in obj.touched if c.name == "b")
    if b.kind is not ChannelKind.PHOTON:
        raise InvalidObjectPlacement("channel 'b' must be a photon mode")
    a = photon("a")
    others = [c for c in obj.touched if c.name != "b"]
    registry = make_registry([a, b, *others])
    elements = (make_beamsplitter(a, b, theta1), obj, make_beamsplitter(a, b, theta2))
    return Circuit(registry, elements, object_slot=1)


def evolve(circuit: Circuit, input: StateVector | None = None) -> EvolutionResult:
    state = circuit.default_input() if input is None else input
    if state.registry != circuit.registry:
        raise ChannelNotInRegistry(
            f"input registry {state.registry.names} does not match circuit "
            f"registry {circuit.registry.names}"
        )
    trace = []
    for element in circuit.elements:
        state = apply(element, state)
        trace.append(state)
    return EvolutionResult(state, tuple(trace))


def reference_evolution(circuit: Circuit, input: StateVector | None = None) -> EvolutionResult:
    return evolve(circuit.without_object(), input)


@dataclass(frozen=True)
class Silhouette:
    """Difference between the evolution with and without the object.

    `forward` holds the photon-mode components (the forward-scattered wave),
    `reaction` the ancilla components (absorption / outgoing amplitude).
    """

    amplitude: StateVector
    forward: dict[str, complex]
    reaction: dict[str, complex]
    evolved: EvolutionResult
    reference: EvolutionResult

    def trace(self) -> tuple[StateVector, ...]:
        return tuple(e - r for e, r in zip(self.evolved.trace, self.reference.trace))

    def optical_theorem_residual(self) -> float:
        """2 Re<ref|sc> + <sc|sc>; unitarity forces this to vanish."""
        ref = self.reference.final_state.amplitudes
        sc = self.amplitude.amplitudes
        return float(2 * np.vdot(ref, sc).real + np.vdot(sc, sc).real)


def silhouette(circuit: Circuit, input: StateVector | None = None) -> Silhouette:
    evolved = evolve(circuit, input)
    reference = reference_evolution(circuit, input)
    diff = evolved.final_state - reference.final_state
    forward, reaction = {}, {}
    for label, amp in zip(circuit.registry, diff.amplitudes):
        target = forward if label.kind is ChannelKind.PHOTON else reaction
        target[label.name] = complex(amp)
    return Silhouette(diff, forward, reaction, evolved, reference)

