"""Channel registry, single-photon state vectors and unitary elements.

A state lives on an ordered list of channels. Each channel is one basis
direction: a photon in some interferometer mode, an excited absorber with no
photon left, or a photon that has left the interferometer for good. Lossy
objects are always written as unitaries that move amplitude into such an
ancilla channel, so the total probability stays exactly one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    ChannelNotInRegistry,
    DuplicateChannel,
    InvalidChannelKind,
    InvalidParameter,
    NotAState,
    NotUnitary,
)

UNITARY_TOL = 1e-10
NORM_TOL = 1e-10


class ChannelKind(enum.Enum):
    PHOTON = "photon"
    EXCITED = "excited"
    LOSS = "loss"


class ElementKind(enum.Enum):
    BEAMSPLITTER = "beamsplitter"
    PERFECT_ABSORBER = "absorber"
    PARTIAL_OBJECT = "partial"
    MIRROR_REDIRECT = "mirror"
    IDENTITY = "identity"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ChannelLabel:
    kind: ChannelKind
    name: str

    def __post_init__(self):
        if not isinstance(self.kind, ChannelKind):
            object.__setattr__(self, "kind", ChannelKind(self.kind))
        if not self.name or not str(self.name).isidentifier():
            raise InvalidParameter(f"channel name must be an identifier, got {self.name!r}")

    def __str__(self):
        return self.name


def photon(name: str) -> ChannelLabel:
    return ChannelLabel(ChannelKind.PHOTON, name)


def excited(name: str) -> ChannelLabel:
    return ChannelLabel(ChannelKind.EXCITED, name)


def loss(name: str) -> ChannelLabel:
    return ChannelLabel(ChannelKind.LOSS, name)


@dataclass(frozen=True)
class ChannelRegistry:
    """Ordered, name-unique channel list. The order is the basis order."""

    labels: tuple[ChannelLabel, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise InvalidParameter("a registry needs at least one channel")
        index = {}
        for i, label in enumerate(labels):
            if label.name in index:
                raise DuplicateChannel(f"channel {label.name!r} declared twice")
            index[label.name] = i
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.labels)

    def __iter__(self) -> Iterator[ChannelLabel]:
        return iter(self.labels)

    def __contains__(self, item):
        if isinstance(item, ChannelLabel):
            return self._index.get(item.name) is not None and self[item.name] == item
        return item in self._index

    def __getitem__(self, name: str) -> ChannelLabel:
        try:
            return self.labels[self._index[name]]
        except KeyError:
            raise ChannelNotInRegistry(f"channel {name!r} is not in the registry") from None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(label.name for label in self.labels)

    def index(self, channel: ChannelLabel | str) -> int:
        """Basis position of `channel`; labels must match in kind as well as name."""
        name = channel.name if isinstance(channel, ChannelLabel) else channel
        if name not in self._index:
            raise ChannelNotInRegistry(f"channel {name!r} is not in the registry")
        i = self._index[name]
        if isinstance(channel, ChannelLabel) and self.labels[i] != channel:
            raise ChannelNotInRegistry(
                f"channel {name!r} is registered as {self.labels[i].kind.value}, "
                f"not {channel.kind.value}"
            )
        return i

    def of_kind(self, kind: ChannelKind) -> tuple[ChannelLabel, ...]:
        return tuple(label for label in self.labels if label.kind is kind)


def make_registry(labels: Iterable[ChannelLabel]) -> ChannelRegistry:
    return ChannelRegistry(tuple(labels))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a registry.

    ``normalized=False`` marks a difference of two states (a silhouette),
    which carries no unit-norm requirement.
    """

    registry: ChannelRegistry
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != len(self.registry):
            raise InvalidParameter(
                f"{amps.shape[0]} amplitudes for {len(self.registry)} channels"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(self.norm_squared() - 1.0) > NORM_TOL:
            raise NotAState(f"state norm^2 is {self.norm_squared():.16g}, expected 1")

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __getitem__(self, name: str) -> complex:
        return complex(self.amplitudes[self.registry.index(name)])

    def as_dict(self) -> dict[str, complex]:
        return {n: complex(a) for n, a in zip(self.registry.names, self.amplitudes)}

    def inner(self, other: "StateVector") -> complex:
        """<self|other>, conjugating self."""
        if self.registry != other.registry:
            raise ChannelNotInRegistry("states live on different registries")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __sub__(self, other: "StateVector") -> "StateVector":
        if self.registry != other.registry:
            raise ChannelNotInRegistry("states live on different registries")
        return StateVector(self.registry, self.amplitudes - other.amplitudes, normalized=False)

    def allclose(self, other, atol=1e-12) -> bool:
        other_amps = other.amplitudes if isinstance(other, StateVector) else np.asarray(other)
        return bool(np.allclose(self.amplitudes, other_amps, rtol=0, atol=atol))

    def __repr__(self):
        body = ", ".join(f"{n}: {a:.6g}" for n, a in self.as_dict().items())
        return f"StateVector({body})"


def basis_state(registry: ChannelRegistry, name: str) -> StateVector:
    amps = np.zeros(len(registry), dtype=complex)
    amps[registry.index(name)] = 1.0
    return StateVector(registry, amps)


@dataclass(frozen=True, eq=False)
class Element:
    """A unitary acting on the channels in `touched`, identity elsewhere.

    `params` keeps the constructor arguments (theta, or t and chi) so the
    element can be written back out to a circuit file.
    """

    matrix: np.ndarray
    touched: tuple[ChannelLabel, ...]
    kind: ElementKind = ElementKind.CUSTOM
    params: tuple[float, ...] = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        touched = tuple(self.touched)
        if m.ndim != 2 or m.shape != (len(touched), len(touched)):
            raise InvalidParameter(
                f"matrix shape {m.shape} does not match {len(touched)} touched channels"
            )
        if len({c.name for c in touched}) != len(touched):
            raise DuplicateChannel("an element cannot touch the same channel twice")
        ok, dev = verify_unitary(m, UNITARY_TOL)
        if not ok:
            raise NotUnitary(f"element matrix deviates from unitarity by {dev:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "touched", touched)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.touched)

    def ancillas(self) -> tuple[ChannelLabel, ...]:
        return tuple(c for c in self.touched if c.kind is not ChannelKind.PHOTON)

    def __repr__(self):
        args = ", ".join(self.names)
        return f"Element({self.kind.value}: {args}; params={self.params})"


def verify_unitary(element, tol: float = UNITARY_TOL) -> tuple[bool, float]:
    """Return (is_unitary, max |U^dagger U - I|) for an Element or a bare matrix."""
    if tol <= 0:
        raise InvalidParameter("tolerance must be positive")
    m = element.matrix if isinstance(element, Element) else np.asarray(element, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False, float("inf")
    dev = float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))
    return dev <= tol, dev


def _require(label: ChannelLabel, kind: ChannelKind, role: str):
    if not isinstance(label, ChannelLabel):
        raise InvalidChannelKind(f"{role} must be a ChannelLabel, got {label!r}")
    if label.kind is not kind:
        raise InvalidChannelKind(
            f"{role} {label.name!r} must be a channel of kind {kind.value}, not {label.kind.value}"
        )


def make_beamsplitter(mode1: ChannelLabel, mode2: ChannelLabel, theta: float = np.pi / 4) -> Element:
    """Lossless beamsplitter with reflection amplitude ``i sin(theta)``.

    ``theta = pi/4`` is the 50% splitter; 0 transmits everything, pi/2
    reflects everything.
    """
    _require(mode1, ChannelKind.PHOTON, "beamsplitter port")
    _require(mode2, ChannelKind.PHOTON, "beamsplitter port")
    theta = float(theta)
    if not 0.0 <= theta <= np.pi / 2:
        raise InvalidParameter(f"mixing angle must lie in [0, pi/2], got {theta}")
    c, s = np.cos(theta), np.sin(theta)
    if theta == np.pi / 4:
        c = s = np.sqrt(0.5)  # exact 1/sqrt(2) for the golden amplitudes
    m = np.array([[c, 1j * s], [1j * s, c]])
    return Element(m, (mode1, mode2), ElementKind.BEAMSPLITTER, (theta,))


# photon amplitude on the mode goes to the ancilla; the ancilla's returns with a minus sign
_SWAP_BLOCK = np.array([[0, -1], [1, 0]], dtype=complex)


def make_perfect_absorber(mode: ChannelLabel, excited: ChannelLabel) -> Element:
    _require(mode, ChannelKind.PHOTON, "absorbed mode")
    _require(excited, ChannelKind.EXCITED, "excitation channel")
    return Element(_SWAP_BLOCK, (mode, excited), ElementKind.PERFECT_ABSORBER)


def make_mirror_redirect(mode: ChannelLabel, out: ChannelLabel) -> Element:
    """Perfect mirror sending the photon on `mode` out of the interferometer."""
    _require(mode, ChannelKind.PHOTON, "redirected mode")
    _require(out, ChannelKind.LOSS, "outgoing channel")
    return Element(_SWAP_BLOCK, (mode, out), ElementKind.MIRROR_REDIRECT)


def make_partial_object(mode: ChannelLabel, t: float, chi: float, loss: ChannelLabel) -> Element:
    """Object with transmission amplitude ``t exp(i chi)``, dilated onto `loss`.

    The remaining amplitude ``sqrt(1 - t^2)`` goes to the loss channel. The
    dilation's free phase is set equal to chi, which makes t=0, chi=0
    coincide with the perfect-absorber block.
    """
    _require(mode, ChannelKind.PHOTON, "object mode")
    _require(loss, ChannelKind.LOSS, "loss channel")
    t, chi = float(t), float(chi)
    if not 0.0 <= t <= 1.0 or not np.isfinite(t):
        raise InvalidParameter(f"transmission amplitude t must lie in [0, 1], got {t}")
    if not np.isfinite(chi):
        raise InvalidParameter(f"phase must be finite, got {chi}")
    r = np.sqrt(1.0 - t * t)
    phase = np.exp(1j * chi)
    m = np.array([[t * phase, -r * phase], [r, t]])
    return Element(m, (mode, loss), ElementKind.PARTIAL_OBJECT, (t, chi))


def make_identity(channels: Sequence[ChannelLabel]) -> Element:
    return Element(np.eye(len(channels)), tuple(channels), ElementKind.IDENTITY)


def make_custom(matrix, channels: Sequence[ChannelLabel]) -> Element:
    return Element(matrix, tuple(channels), ElementKind.CUSTOM)


def apply(element: Element, state: StateVector) -> StateVector:
    idx = [state.registry.index(c) for c in element.touched]
    amps = np.array(state.amplitudes)
    amps[idx] = element.matrix @ amps[idx]
    return StateVector(state.registry, amps, normalized=state.normalized)
