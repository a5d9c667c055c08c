"""Recover an object's loss probability W and phase chi from detector counts.

For a symmetric Mach-Zehnder with the object in arm b and transmission
amplitude ``tau = t exp(i chi)``, the calibrated port probabilities are

    P1 = |1 - tau|^2 / 4,    P2 = |1 + tau|^2 / 4,

so ``P1 + P2 = (1 + t^2) / 2`` and ``P2 - P1 = t cos(chi)``. Inverting:

    W = 2 (1 - P1 - P2) = 1 - t^2,    cos(chi) = (P2 - P1) / sqrt(1 - W).

Only cos(chi) is observable: chi and -chi give identical counts, so the
returned chi is the principal value in [0, pi].
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ImplausibleInput, PhaseUndefined
from .interferometer import build_mach_zehnder, evolve, reference_evolution
from .measurement import CountRecord, DetectorConfig, calibrate, sample
from .state import loss, make_partial_object, photon

# beyond this, P1 + P2 > 1 cannot be blamed on shot noise
IMPLAUSIBLE_EXCESS = 0.1
# phase is reported undefined when 1 - W is within this many sigma of zero
PHASE_RESOLUTION_SIGMAS = 2.0


def estimate_W(P1: float, P2: float) -> tuple[float, bool]:
    """Return ``(W, clamped)``. Valid for 50% beamsplitters only."""
    if P1 < 0 or P2 < 0:
        raise ImplausibleInput(f"negative detection probability ({P1}, {P2})")
    if P1 + P2 > 1 + IMPLAUSIBLE_EXCESS:
        raise ImplausibleInput(f"P1 + P2 = {P1 + P2:.6g} exceeds 1 beyond any plausible noise")
    W = 2.0 * (1.0 - P1 - P2)
    clamped = min(max(W, 0.0), 1.0)
    return clamped, clamped != W


def estimate_cos_chi(P1: float, P2: float, W: float) -> tuple[float, bool]:
    """Return ``(cos chi, clamped)``; raises PhaseUndefined for W >= 1."""
    if W >= 1.0:
        raise PhaseUndefined("W = 1: nothing is transmitted, the phase is undefined")
    c = (P2 - P1) / math.sqrt(1.0 - W)
    clamped = min(max(c, -1.0), 1.0)
    return clamped, clamped != c


@dataclass(frozen=True)
class ObjectEstimate:
    P1: float
    P2: float
    W: float
    sigma_W: float
    cos_chi: float | None
    sigma_cos_chi: float | None
    chi: float | None
    t: float
    clamped_W: bool
    clamped_cos_chi: bool
    phase_defined: bool
    unequal_efficiency: bool = False

    @property
    def object_present(self) -> bool:
        """True when W is resolved from zero at the reporting significance."""
        return self.W > PHASE_RESOLUTION_SIGMAS * self.sigma_W

    def to_dict(self) -> dict:
        d = asdict(self)
        d["object_present"] = self.object_present
        return d


def _covariance(counts: CountRecord, reference: CountRecord, dark: str, bright: str) -> np.ndarray:
    """Covariance of (f_dark, f_bright, scale) from multinomial sampling."""
    n, n_ref = counts.shots, reference.shots
    fa, fb = counts.frequency(dark), counts.frequency(bright)
    s = reference.frequency(bright)
    cov = np.zeros((3, 3))
    cov[0, 0] = fa * (1 - fa) / n
    cov[1, 1] = fb * (1 - fb) / n
    cov[0, 1] = cov[1, 0] = -fa * fb / n
    cov[2, 2] = s * (1 - s) / n_ref
    return cov


def reconstruct_object(
    counts: CountRecord,
    reference: CountRecord,
    *,
    dark: str = "D_a",
    bright: str = "D_b",
    allow_undefined_phase: bool = False,
) -> ObjectEstimate:
    """Calibrate `counts` against the object-removed `reference` run and invert.

    Standard errors are first-order (delta method) in the multinomial
    frequencies of both runs. The phase is declared undefined when the
    transmitted probability ``1 - W`` is not resolved from zero at
    ``PHASE_RESOLUTION_SIGMAS``; unless `allow_undefined_phase` is set this
    raises PhaseUndefined.
    """
    cal = calibrate(reference, counts, dark=dark, bright=bright)
    P1, P2, s = cal.P1, cal.P2, cal.scale
    W, clamped_W = estimate_W(P1, P2)
    cov = _covariance(counts, reference, dark, bright)

    # gradients wrt (f_dark, f_bright, scale), P_i = f_i / s
    dP1 = np.array([1 / s, 0.0, -P1 / s])
    dP2 = np.array([0.0, 1 / s, -P2 / s])
    grad_W = -2.0 * (dP1 + dP2)
    sigma_W = float(math.sqrt(max(grad_W @ cov @ grad_W, 0.0)))

    transmitted = 1.0 - W
    phase_defined = transmitted > 0 and transmitted > PHASE_RESOLUTION_SIGMAS * sigma_W
    cos_chi = sigma_c = chi = None
    clamped_c = False
    if phase_defined:
        cos_chi, clamped_c = estimate_cos_chi(P1, P2, W)
        D = 2 * (P1 + P2) - 1  # unclamped 1 - W
        diff = P2 - P1
        dc_dP1 = -1 / math.sqrt(D) - diff / D**1.5
        dc_dP2 = 1 / math.sqrt(D) - diff / D**1.5
        grad_c = dc_dP1 * dP1 + dc_dP2 * dP2
        sigma_c = float(math.sqrt(max(grad_c @ cov @ grad_c, 0.0)))
        chi = math.acos(cos_chi)
    elif not allow_undefined_phase:
        raise PhaseUndefined(
            f"W = {W:.6g} +- {sigma_W:.2g}: transmitted fraction not resolved, phase undefined"
        )

    return ObjectEstimate(
        P1=P1,
        P2=P2,
        W=W,
        sigma_W=sigma_W,
        cos_chi=cos_chi,
        sigma_cos_chi=sigma_c,
        chi=chi,
        t=math.sqrt(transmitted),
        clamped_W=clamped_W,
        clamped_cos_chi=clamped_c,
        phase_defined=phase_defined,
        unequal_efficiency=cal.unequal_efficiency,
    )


def exact_port_probabilities(t: float, chi: float) -> tuple[float, float]:
    """(P1, P2) from simulating the Mach-Zehnder with a partial object."""
    circuit = build_mach_zehnder(make_partial_object(photon("b"), t, chi, loss("loss")))
    final = evolve(circuit).final_state
    return abs(final["a"]) ** 2, abs(final["b"]) ** 2


SWEEP_COLUMNS = (
    "t", "chi", "P1_exact", "P2_exact", "P1_emp", "P2_emp", "W_est", "sigma_W",
    "cos_chi_est", "sigma_cos_chi", "chi_est", "clamped_W", "clamped_cos_chi",
)


@dataclass(frozen=True)
class SweepRow:
    t: float
    chi: float
    P1_exact: float
    P2_exact: float
    P1_emp: float
    P2_emp: float
    W_est: float
    sigma_W: float
    cos_chi_est: float
    sigma_cos_chi: float
    chi_est: float
    clamped_W: bool
    clamped_cos_chi: bool


def _sweep_row(t, chi, shots, seed, row, reference):
    circuit = build_mach_zehnder(make_partial_object(photon("b"), t, chi, loss("loss")))
    config = DetectorConfig({"a": "D_a", "b": "D_b"})
    final = evolve(circuit).final_state
    P1, P2 = abs(final["a"]) ** 2, abs(final["b"]) ** 2
    counts = sample(final, config, shots, seed, stream=(1, row))
    est = reconstruct_object(counts, reference, allow_undefined_phase=True)
    nan = float("nan")
    return SweepRow(
        t=t, chi=chi, P1_exact=P1, P2_exact=P2,
        P1_emp=counts.frequency("D_a"), P2_emp=counts.frequency("D_b"),
        W_est=est.W, sigma_W=est.sigma_W,
        cos_chi_est=nan if est.cos_chi is None else est.cos_chi,
        sigma_cos_chi=nan if est.sigma_cos_chi is None else est.sigma_cos_chi,
        chi_est=nan if est.chi is None else est.chi,
        clamped_W=est.clamped_W, clamped_cos_chi=est.clamped_cos_chi,
    )


def sweep(
    t_grid: Sequence[float],
    chi_grid: Sequence[float],
    shots: int,
    seed: int,
    *,
    workers: int = 1,
) -> list[SweepRow]:
    """Simulate, sample and reconstruct every (t, chi) on the grid.

    Rows come out in grid order (t outer, chi inner). Row ``k`` samples from
    its own stream derived from `seed`, so results do not depend on `workers`.
    """
    t_grid, chi_grid = list(t_grid), list(chi_grid)
    if not t_grid or not chi_grid:
        raise ValueError("sweep grids must be non-empty")
    ref_circuit = build_mach_zehnder(make_partial_object(photon("b"), 1.0, 0.0, loss("loss")))
    ref_state = reference_evolution(ref_circuit).final_state
    reference = sample(ref_state, DetectorConfig({"a": "D_a", "b": "D_b"}), shots, seed, stream=(0,))

    jobs = [(t, chi) for t in t_grid for chi in chi_grid]
    args = [(float(t), float(c), shots, seed, k, reference) for k, (t, c) in enumerate(jobs)]
    if workers <= 1:
        return [_sweep_row(*a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: _sweep_row(*a), args))
