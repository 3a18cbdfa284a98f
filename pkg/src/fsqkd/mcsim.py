"""Pulse-level Monte Carlo of the detection chain.

Pulses are generated in fixed-size blocks, each with its own child stream of
``numpy.random.SeedSequence(seed)``; the block layout never depends on the
worker count, so any number of threads yields bit-identical counts. Dead
time couples neighbouring pulses and is therefore applied afterwards in one
ordered pass over the click stream of each detector.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .detstats import (
    BASES,
    CELLS,
    INTENSITIES,
    ExpectedCounts,
    PulseObservables,
    SourceModel,
    dead_time_factors,
    intrinsic_error,
    observables,
)
from .receiver import ReceiverModel, dark_click_probability

BLOCK_SIZE = 1 << 20
Z_LIMIT = 5.0


@dataclass(frozen=True)
class McConfig:
    seed: int
    n_pulses: int
    source: SourceModel
    receiver: ReceiverModel
    channel_transmittance: float

    def __post_init__(self):
        if self.n_pulses < 1:
            raise ValueError(f"n_pulses must be >= 1, got {self.n_pulses}")
        if not 0.0 <= self.channel_transmittance <= 1.0:
            raise ValueError("channel_transmittance must be in [0, 1]")


@dataclass
class McResult:
    counts: ExpectedCounts
    observables: PulseObservables
    live_trials: dict[tuple[str, str], int]
    raw_clicks: dict[str, int]
    accepted_clicks: dict[str, int]

    @property
    def throughput(self) -> dict[str, float]:
        return {
            b: self.accepted_clicks[b] / self.raw_clicks[b] if self.raw_clicks[b] else 1.0
            for b in BASES
        }


@dataclass
class McReport:
    gain_z: dict[tuple[str, str], float]
    qber_z: dict[tuple[str, str], float]
    throughput_z: dict[str, float]
    result: McResult = field(repr=False)
    limit: float = Z_LIMIT

    @property
    def flags(self) -> list[str]:
        out = [f"gain{c}" for c, z in self.gain_z.items() if abs(z) > self.limit]
        out += [f"qber{c}" for c, z in self.qber_z.items() if abs(z) > self.limit]
        out += [f"dead_time[{b}]" for b, z in self.throughput_z.items() if abs(z) > self.limit]
        return out

    @property
    def ok(self) -> bool:
        return not self.flags


_BASIS_CODE = {"Z": 0, "X": 1}
_INT_CODE = {"mu1": 0, "mu2": 1}


def _simulate_chunk(cfg: McConfig, seed_seq: np.random.SeedSequence, start: int, size: int):
    rng = np.random.default_rng(seed_seq)
    src, rx = cfg.source, cfg.receiver
    p_dc = dark_click_probability(rx.detector, src.clock_rate_hz)

    alice_x = rng.random(size) >= src.p_basis_z
    decoy = rng.random(size) >= src.p_mu1
    bob_x = rng.random(size) >= rx.basis_split

    mu = np.where(decoy, src.mu2, src.mu1) * np.where(alice_x, 0.5, 1.0)
    photons = rng.poisson(mu)
    eta = np.where(
        bob_x,
        rx.arm_efficiency("X", cfg.channel_transmittance),
        rx.arm_efficiency("Z", cfg.channel_transmittance),
    )
    # threshold detector: click if at least one photon survives
    signal = rng.binomial(photons, eta) > 0
    dark = rng.random(size) < p_dc
    click = signal | dark

    e_int = np.where(
        bob_x, intrinsic_error("X", src, rx), intrinsic_error("Z", src, rx)
    )
    signal_err = rng.random(size) < e_int
    dark_err = rng.random(size) < 0.5
    # signal + dark together: keep one of the two outcomes at random
    use_dark = dark & (~signal | (rng.random(size) < 0.5))
    error = np.where(use_dark, dark_err, signal_err) & click

    idx = np.arange(start, start + size, dtype=np.int64)
    sifted = alice_x == bob_x
    out = {}
    for b in BASES:
        arm = bob_x == bool(_BASIS_CODE[b])
        arm_click = click & arm
        cells = {}
        for k in INTENSITIES:
            in_cell = sifted & arm & (decoy == bool(_INT_CODE[k]))
            cells[k] = idx[in_cell]
        out[b] = {
            "click_idx": idx[arm_click],
            "click_sifted": sifted[arm_click],
            "click_decoy": decoy[arm_click],
            "click_error": error[arm_click],
            "cell_idx": cells,
        }
    return out


def _apply_dead_time(click_idx: np.ndarray, dead_slots: int) -> np.ndarray:
    """Boolean mask of clicks that find the detector live (non-paralyzable)."""
    keep = np.zeros(click_idx.size, dtype=bool)
    if dead_slots <= 0:
        keep[:] = True
        return keep
    next_live = -1
    for i, t in enumerate(click_idx.tolist()):
        if t >= next_live:
            keep[i] = True
            next_live = t + dead_slots + 1
    return keep


def simulate_block(cfg: McConfig, workers: int = 1, block_size: int = BLOCK_SIZE) -> McResult:
    n_blocks = math.ceil(cfg.n_pulses / block_size)
    children = np.random.SeedSequence(cfg.seed).spawn(n_blocks)
    spans = [
        (children[i], i * block_size, min(block_size, cfg.n_pulses - i * block_size))
        for i in range(n_blocks)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda s: _simulate_chunk(cfg, *s), spans))
    else:
        chunks = [_simulate_chunk(cfg, *s) for s in spans]

    dead_slots = round(cfg.receiver.detector.dead_time_s * cfg.source.clock_rate_hz)
    n, m, live = {}, {}, {}
    raw, accepted, throughput = {}, {}, {}
    for b in BASES:
        click_idx = np.concatenate([c[b]["click_idx"] for c in chunks])
        sifted = np.concatenate([c[b]["click_sifted"] for c in chunks])
        decoy = np.concatenate([c[b]["click_decoy"] for c in chunks])
        error = np.concatenate([c[b]["click_error"] for c in chunks])
        keep = _apply_dead_time(click_idx, dead_slots)
        raw[b] = int(click_idx.size)
        accepted[b] = int(keep.sum())
        throughput[b] = accepted[b] / raw[b] if raw[b] else 1.0
        kept_idx = click_idx[keep]
        for k in INTENSITIES:
            sel = keep & sifted & (decoy == bool(_INT_CODE[k]))
            n[b, k] = int(sel.sum())
            m[b, k] = int((sel & error).sum())
            trials = np.concatenate([c[b]["cell_idx"][k] for c in chunks])
            live[b, k] = int(trials.size) - _count_dead(trials, kept_idx, dead_slots)

    gains = {c: n[c] / live[c] if live[c] else 0.0 for c in CELLS}
    qbers = {c: m[c] / n[c] if n[c] else 0.5 for c in CELLS}
    counts = ExpectedCounts(n, m, cfg.n_pulses, throughput)
    return McResult(counts, PulseObservables(gains, qbers), live, raw, accepted)


def _count_dead(trials: np.ndarray, accepted: np.ndarray, dead_slots: int) -> int:
    """Trials falling inside a dead window ``(a, a + dead_slots]``."""
    if dead_slots <= 0 or accepted.size == 0 or trials.size == 0:
        return 0
    hi = np.searchsorted(trials, accepted + dead_slots, side="right")
    lo = np.searchsorted(trials, accepted, side="right")
    return int((hi - lo).sum())


def compare_to_analytic(
    cfg: McConfig, workers: int = 1, result: McResult | None = None
) -> McReport:
    """z-scores of the simulated cells against the analytic detection model."""
    res = simulate_block(cfg, workers) if result is None else result
    ana = observables(cfg.source, cfg.receiver, cfg.channel_transmittance)
    ana_dead = dead_time_factors(cfg.source, cfg.receiver, cfg.channel_transmittance)

    gain_z, qber_z, dead_z = {}, {}, {}
    for c in CELLS:
        p = ana.gain[c]
        gain_z[c] = _zscore(res.observables.gain[c], p, res.live_trials[c])
        q = ana.qber[c]
        qber_z[c] = _zscore(res.observables.qber[c], q, res.counts.n[c])
    for b in BASES:
        dead_z[b] = _zscore(res.throughput[b], ana_dead[b], res.raw_clicks[b])
    return McReport(gain_z, qber_z, dead_z, res)


def _zscore(observed: float, expected: float, trials: int) -> float:
    if trials == 0:
        return 0.0
    var = expected * (1.0 - expected) / trials
    if var == 0:
        return 0.0 if observed == expected else math.inf
    return (observed - expected) / math.sqrt(var)
