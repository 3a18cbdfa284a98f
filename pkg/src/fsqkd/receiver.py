"""Receiver hardware: detector presets, insertion losses and saturation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Literal

from .atmosphere import MIR4000, NIR800, NIR1550, OpticalCarrier

Basis = Literal["Z", "X"]


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float
    dark_count_rate_hz: float
    dead_time_s: float = 25e-9
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if self.dark_count_rate_hz < 0:
            raise ValueError(
                f"dark_count_rate_hz must be >= 0, got {self.dark_count_rate_hz}"
            )
        if self.dead_time_s < 0:
            raise ValueError(f"dead_time_s must be >= 0, got {self.dead_time_s}")


@dataclass(frozen=True)
class ReceiverModel:
    """Bob's apparatus behind the telescope.

    The passive 50:50 splitter picks the measurement basis. The X arm carries
    the unbalanced interferometer, hence its larger insertion loss and the
    extra intrinsic error ``(1 - interferometer_visibility) / 2``.
    """

    detector: DetectorModel
    z_insertion_db: float = 1.0
    x_insertion_db: float = 3.0
    basis_split: float = 0.5
    interferometer_visibility: float = 0.98

    def __post_init__(self):
        if self.z_insertion_db < 0 or self.x_insertion_db < 0:
            raise ValueError("insertion losses must be >= 0")
        if self.basis_split != 0.5:
            raise ValueError(f"basis_split is fixed at 0.5, got {self.basis_split}")
        if not 0.0 < self.interferometer_visibility <= 1.0:
            raise ValueError(
                "interferometer_visibility must be in (0, 1], "
                f"got {self.interferometer_visibility}"
            )

    def insertion_db(self, basis: Basis) -> float:
        if basis == "Z":
            return self.z_insertion_db
        if basis == "X":
            return self.x_insertion_db
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")

    def arm_efficiency(self, basis: Basis, channel_transmittance: float) -> float:
        """Click efficiency for a photon already routed into ``basis``'s arm."""
        return (
            channel_transmittance
            * 10.0 ** (-self.insertion_db(basis) / 10.0)
            * self.detector.efficiency
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ReceiverModel":
        data = dict(data)
        det = DetectorModel(**data.pop("detector"))
        return cls(detector=det, **data)


@dataclass(frozen=True)
class HardwarePreset:
    name: str
    carrier: OpticalCarrier
    receiver: ReceiverModel = field(repr=False)


def _preset(name, carrier, eta, dark_hz):
    det = DetectorModel(efficiency=eta, dark_count_rate_hz=dark_hz, label=name)
    return HardwarePreset(name, carrier, ReceiverModel(detector=det))


PRESETS: dict[str, HardwarePreset] = {
    p.name: p
    for p in (
        _preset("NIR800", NIR800, 0.90, 1.0),
        _preset("NIR1550", NIR1550, 0.90, 1.0),
        _preset("MIR_UPCONV", MIR4000, 0.127, 1.0),
        _preset("MIR_REALISTIC", MIR4000, 0.05, 100.0),
        _preset("MIR_OPTIMIZED", MIR4000, 0.80, 100.0),
    )
}


def preset(name: str) -> tuple[ReceiverModel, OpticalCarrier]:
    """Look up a hardware trace by name.

    Returns
    -------
    (ReceiverModel, OpticalCarrier)
    """
    try:
        p = PRESETS[name.upper()]
    except KeyError:
        valid = ", ".join(PRESETS)
        raise KeyError(f"unknown hardware preset {name!r}; valid: {valid}") from None
    return p.receiver, p.carrier


def with_detector(rx: ReceiverModel, **changes) -> ReceiverModel:
    return replace(rx, detector=replace(rx.detector, **changes))


def end_to_end_efficiency(
    rx: ReceiverModel, basis: Basis, channel_transmittance: float
) -> float:
    """Probability that one transmitted photon clicks in ``basis``'s detector."""
    if not 0.0 <= channel_transmittance <= 1.0:
        raise ValueError(
            f"channel_transmittance must be in [0, 1], got {channel_transmittance}"
        )
    return rx.basis_split * rx.arm_efficiency(basis, channel_transmittance)


def dark_click_probability(det: DetectorModel, clock_rate_hz: float) -> float:
    """Dark-count probability in one qubit slot (both time bins gated)."""
    if not clock_rate_hz > 0:
        raise ValueError(f"clock_rate_hz must be > 0, got {clock_rate_hz}")
    return min(1.0, det.dark_count_rate_hz / clock_rate_hz)


def dead_time_factor(det: DetectorModel, click_rate_hz: float) -> float:
    """Non-paralyzable throughput factor ``1 / (1 + R * tau_dead)``."""
    if click_rate_hz < 0:
        raise ValueError(f"click_rate_hz must be >= 0, got {click_rate_hz}")
    return 1.0 / (1.0 + click_rate_hz * det.dead_time_s)
