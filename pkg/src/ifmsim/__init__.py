"""Single-photon interferometer simulator for interaction-free measurement.

Objects are unitaries over explicit loss channels; the forward-scattered
wave is the difference between runs with and without the object, and the
object's loss W and phase chi are recovered from detector counts.
"""
from .interferometer import (
    Circuit,
    EvolutionResult,
    Silhouette,
    build_mach_zehnder,
    evolve,
    reference_evolution,
    silhouette,
)
from .measurement import CountRecord, DetectorConfig, calibrate, probabilities, sample
from .estimation import ObjectEstimate, estimate_cos_chi, estimate_W, reconstruct_object, sweep
from .state import (
    ChannelKind,
    ChannelLabel,
    Element,
    StateVector,
    apply,
    basis_state,
    excited,
    loss,
    make_beamsplitter,
    make_custom,
    make_identity,
    make_mirror_redirect,
    make_partial_object,
    make_perfect_absorber,
    make_registry,
    photon,
    verify_unitary,
)

__version__ = "0.1.0"
