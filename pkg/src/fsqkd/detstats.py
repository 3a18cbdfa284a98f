"""Analytic detection model for the decoy-state time-bin link.

Cells are indexed by ``(basis, intensity)`` where basis is ``"Z"`` or ``"X"``
and intensity is ``"mu1"`` (signal) or ``"mu2"`` (decoy). X-basis pulses
carry half the Z-basis mean photon number.

Bob's passive splitter is treated as a basis choice: a pulse is sifted into
a cell with probability ``p_basis(a) * 0.5 * p_intensity(k)``, and the cell's
gain is evaluated with the efficiency of that basis arm alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .atmosphere import AttenuationBudget
from .receiver import (
    ReceiverModel,
    dark_click_probability,
    dead_time_factor,
)

BASES = ("Z", "X")
INTENSITIES = ("mu1", "mu2")
CELLS = tuple((b, k) for b in BASES for k in INTENSITIES)


class InfeasibleError(ArithmeticError):
    """No usable signal: the requested block can never be collected."""


@dataclass(frozen=True)
class SourceModel:
    mu1: float = 0.5
    mu2: float = 0.25
    p_basis_z: float = 0.5
    p_mu1: float = 0.5
    clock_rate_hz: float = 1e9
    misalignment_error: float = 0.01

    def __post_init__(self):
        if not self.mu1 > self.mu2 > 0:
            raise ValueError(f"need mu1 > mu2 > 0, got mu1={self.mu1}, mu2={self.mu2}")
        for name in ("p_basis_z", "p_mu1"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if not self.clock_rate_hz > 0:
            raise ValueError(f"clock_rate_hz must be > 0, got {self.clock_rate_hz}")
        if not 0.0 <= self.misalignment_error <= 0.5:
            raise ValueError(
                f"misalignment_error must be in [0, 0.5], got {self.misalignment_error}"
            )

    def p_basis(self, basis: str) -> float:
        return self.p_basis_z if basis == "Z" else 1.0 - self.p_basis_z

    def p_intensity(self, which: str) -> float:
        return self.p_mu1 if which == "mu1" else 1.0 - self.p_mu1

    def intensity(self, basis: str, which: str) -> float:
        mu = self.mu1 if which == "mu1" else self.mu2
        return mu if basis == "Z" else mu / 2.0

    def intensities(self, basis: str) -> tuple[float, float]:
        return self.intensity(basis, "mu1"), self.intensity(basis, "mu2")


@dataclass(frozen=True)
class PulseObservables:
    gain: dict[tuple[str, str], float]
    qber: dict[tuple[str, str], float]

    def overall_qber(self, basis: str, source: SourceModel) -> float:
        num = sum(
            source.p_intensity(k) * self.gain[basis, k] * self.qber[basis, k]
            for k in INTENSITIES
        )
        den = sum(source.p_intensity(k) * self.gain[basis, k] for k in INTENSITIES)
        return num / den if den > 0 else 0.5


@dataclass(frozen=True)
class ExpectedCounts:
    n: dict[tuple[str, str], int]
    m: dict[tuple[str, str], int]
    total_pulses: int
    dead_time: dict[str, float] = field(default_factory=lambda: {"Z": 1.0, "X": 1.0})

    def __post_init__(self):
        for cell in CELLS:
            if not 0 <= self.m[cell] <= self.n[cell]:
                raise ValueError(f"cell {cell}: need 0 <= m <= n, got {self.m[cell]}, {self.n[cell]}")

    def n_basis(self, basis: str) -> int:
        return sum(self.n[basis, k] for k in INTENSITIES)

    def m_basis(self, basis: str) -> int:
        return sum(self.m[basis, k] for k in INTENSITIES)


def gain(mu: float, eta: float, p_dc: float) -> float:
    """Click probability of a threshold detector for a Poissonian pulse."""
    return -math.expm1(math.log1p(-p_dc) - mu * eta) if p_dc < 1 else 1.0


def qber(mu: float, eta: float, p_dc: float, e_intrinsic: float) -> float:
    """Error rate: intrinsic error on signal clicks, 1/2 on dark-only clicks."""
    d = gain(mu, eta, p_dc)
    if d == 0:
        return 0.5
    no_signal = math.exp(-mu * eta)
    err = e_intrinsic * -math.expm1(-mu * eta) + 0.5 * p_dc * no_signal
    return min(0.5, max(0.0, err / d))


def intrinsic_error(basis: str, source: SourceModel, rx: ReceiverModel) -> float:
    e = source.misalignment_error
    if basis == "X":
        e += (1.0 - rx.interferometer_visibility) / 2.0
    return min(0.5, e)


def _transmittance(budget) -> float:
    if isinstance(budget, AttenuationBudget):
        return budget.transmittance
    return float(budget)


def observables(
    source: SourceModel, rx: ReceiverModel, budget: AttenuationBudget | float
) -> PulseObservables:
    """Per-cell gain and QBER; ``budget`` may also be a bare transmittance."""
    tau = _transmittance(budget)
    p_dc = dark_click_probability(rx.detector, source.clock_rate_hz)
    gains, qbers = {}, {}
    for b, k in CELLS:
        eta = rx.arm_efficiency(b, tau)
        mu = source.intensity(b, k)
        gains[b, k] = gain(mu, eta, p_dc)
        qbers[b, k] = qber(mu, eta, p_dc, intrinsic_error(b, source, rx))
    return PulseObservables(gains, qbers)


def arm_click_probability(
    basis: str, source: SourceModel, rx: ReceiverModel, tau: float
) -> float:
    """Per-slot click probability of ``basis``'s detector, all of Alice's states."""
    p_dc = dark_click_probability(rx.detector, source.clock_rate_hz)
    eta = rx.arm_efficiency(basis, tau)
    total = 0.0
    for a in BASES:
        for k in INTENSITIES:
            weight = source.p_basis(a) * source.p_intensity(k)
            total += weight * gain(source.intensity(a, k), eta, p_dc)
    return rx.basis_split * total


def dead_time_factors(source: SourceModel, rx: ReceiverModel, tau: float) -> dict[str, float]:
    return {
        b: dead_time_factor(
            rx.detector, arm_click_probability(b, source, rx, tau) * source.clock_rate_hz
        )
        for b in BASES
    }


def sift_probability(basis: str, which: str, source: SourceModel, rx: ReceiverModel) -> float:
    return source.p_basis(basis) * rx.basis_split * source.p_intensity(which)


def expected_counts(
    source: SourceModel,
    rx: ReceiverModel,
    budget: AttenuationBudget | float,
    n_z_target: float,
) -> tuple[ExpectedCounts, PulseObservables]:
    """Expected sifted counts for a block holding ``n_z_target`` Z detections.

    The number of emitted pulses is solved for so that the dead-time derated
    Z-basis detections equal the target; every cell is then floored.
    """
    if not n_z_target > 0:
        raise ValueError(f"n_z_target must be > 0, got {n_z_target}")
    tau = _transmittance(budget)
    obs = observables(source, rx, tau)
    dead = dead_time_factors(source, rx, tau)

    rate = {
        cell: sift_probability(*cell, source, rx) * obs.gain[cell] * dead[cell[0]]
        for cell in CELLS
    }
    z_rate = rate["Z", "mu1"] + rate["Z", "mu2"]
    if z_rate <= 0:
        raise InfeasibleError("combined Z-basis gain is zero; no key can be sifted")
    total_pulses = math.ceil(n_z_target / z_rate)

    n, m = {}, {}
    for cell in CELLS:
        n[cell] = math.floor(total_pulses * rate[cell])
        m[cell] = math.floor(obs.qber[cell] * n[cell])
    return ExpectedCounts(n, m, total_pulses, dead), obs
