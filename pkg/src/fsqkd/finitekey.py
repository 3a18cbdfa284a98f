"""Finite-key security analysis for 3-state BB84 with one decoy intensity.

The statistical bounds follow the standard one-decoy treatment: Hoeffding
fluctuations on the per-intensity counts, vacuum and single-photon bounds
obtained from the two intensities, and a random-sampling correction that
carries the X-basis single-photon error rate over to the Z-basis phase
error rate.

The secrecy parameter is split evenly across ``EPS_SPLIT`` applications of
the concentration bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .atmosphere import AttenuationBudget
from .detstats import ExpectedCounts, PulseObservables, SourceModel

EPS_SPLIT = 21
EC_EFFICIENCY = 1.12


@dataclass(frozen=True)
class SecurityBudget:
    eps_sec: float = 1e-15
    eps_cor: float = 1e-15
    ec_efficiency: float = EC_EFFICIENCY
    n_z: float = 1e8

    def __post_init__(self):
        for name in ("eps_sec", "eps_cor"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.n_z < 1:
            raise ValueError(f"n_z must be >= 1, got {self.n_z}")
        if self.ec_efficiency < 1:
            raise ValueError(f"ec_efficiency must be >= 1, got {self.ec_efficiency}")

    @property
    def eps_statistical(self) -> float:
        return self.eps_sec / EPS_SPLIT


@dataclass(frozen=True)
class DecoyBounds:
    s_z0_lower: float
    s_z1_lower: float
    s_x1_lower: float
    v_x1_upper: float
    phi_z_upper: float
    s_z0_upper: float = 0.0
    s_x0_upper: float = 0.0
    n_z: int = 0
    feasible: bool = True


@dataclass(frozen=True)
class KeyLength:
    skl_bits: int
    feasible: bool
    bound_bits: float
    ec_leakage_bits: float
    pa_cost_bits: float


@dataclass(frozen=True)
class KeyRateResult:
    skl_bits: int
    skr_per_pulse: float
    feasible: bool
    total_pulses: int
    q_z: float
    q_x: float
    bounds: DecoyBounds | None
    budget_breakdown: AttenuationBudget | None = None
    observables: PulseObservables | None = None
    counts: ExpectedCounts | None = field(default=None, repr=False)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def ec_leakage(q_z: float, budget: SecurityBudget, n_z: float | None = None) -> float:
    """Bits revealed by error correction plus verification."""
    n = budget.n_z if n_z is None else n_z
    return budget.ec_efficiency * n * binary_entropy(q_z) + math.log2(2.0 / budget.eps_cor)


def pa_cost(budget: SecurityBudget) -> float:
    return 6.0 * math.log2(19.0 / budget.eps_sec)


def hoeffding_delta(n: float, eps: float) -> float:
    """One-sided Hoeffding deviation ``sqrt(n/2 * ln(1/eps))``."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    return math.sqrt(n / 2.0 * math.log(1.0 / eps))


def tau(n: int, intensities, probabilities) -> float:
    """Probability that a pulse holds exactly ``n`` photons."""
    return sum(
        p * math.exp(-k) * k**n / math.factorial(n)
        for k, p in zip(intensities, probabilities)
    )


def sampling_correction(eps: float, rate: float, s_a: float, s_b: float) -> float:
    """Random-sampling deviation between two error rates estimated on
    ``s_a`` and ``s_b`` single-photon events."""
    if rate <= 0.0 or s_a <= 0 or s_b <= 0:
        return 0.0
    if rate >= 0.5:
        return 0.0
    spread = rate * (1.0 - rate)
    arg = (s_a + s_b) / (s_a * s_b * spread) / eps**2
    if arg <= 1.0:
        return 0.0
    return math.sqrt((s_a + s_b) * spread / (s_a * s_b * math.log(2)) * math.log2(arg))


def _basis_bounds(n_cells, m_cells, intensities, probs, eps, finite_size):
    """Vacuum/single-photon bounds for one basis.

    ``n_cells`` and ``m_cells`` are (signal, decoy) count pairs.
    """
    k1, k2 = intensities
    p1, p2 = probs
    n_tot = sum(n_cells)
    m_tot = sum(m_cells)
    dn = hoeffding_delta(n_tot, eps) if finite_size else 0.0
    dm = hoeffding_delta(m_tot, eps) if finite_size else 0.0

    n1_plus = math.exp(k1) / p1 * (n_cells[0] + dn)
    n2_minus = math.exp(k2) / p2 * (n_cells[1] - dn)
    m1_plus = math.exp(k1) / p1 * (m_cells[0] + dm)
    m2_minus = math.exp(k2) / p2 * (m_cells[1] - dm)
    m2_plus = math.exp(k2) / p2 * (m_cells[1] + dm)

    t0 = tau(0, intensities, probs)
    t1 = tau(1, intensities, probs)

    s0_lower = t0 / (k1 - k2) * (k1 * n2_minus - k2 * n1_plus)
    s0_lower = min(max(0.0, s0_lower), n_tot)
    s0_upper = 2.0 * (t0 * m2_plus + dn)
    s0_upper = min(max(0.0, s0_upper), n_tot)

    s1_lower = (
        t1 * k1 / (k2 * (k1 - k2))
        * (n2_minus - (k2 / k1) ** 2 * n1_plus - (k1**2 - k2**2) / k1**2 * s0_upper / t0)
    )
    v1_upper = t1 / (k1 - k2) * (m1_plus - m2_minus)
    return {
        "n": n_tot,
        "s0_lower": s0_lower,
        "s0_upper": s0_upper,
        "s1_lower": s1_lower,
        "v1_upper": v1_upper,
    }


def decoy_bounds(
    counts: ExpectedCounts,
    observables: PulseObservables | None,
    source: SourceModel,
    budget: SecurityBudget,
    finite_size: bool = True,
) -> DecoyBounds:
    """Statistical bounds on vacuum/single-photon events and the phase error.

    ``observables`` is accepted for interface symmetry; the bounds only use
    the observed counts. X-basis bounds use the halved X intensities.
    ``finite_size=False`` drops every fluctuation term (asymptotic limit).
    """
    eps = budget.eps_statistical
    probs = (source.p_mu1, 1.0 - source.p_mu1)
    z = _basis_bounds(
        (counts.n["Z", "mu1"], counts.n["Z", "mu2"]),
        (counts.m["Z", "mu1"], counts.m["Z", "mu2"]),
        source.intensities("Z"), probs, eps, finite_size,
    )
    x = _basis_bounds(
        (counts.n["X", "mu1"], counts.n["X", "mu2"]),
        (counts.m["X", "mu1"], counts.m["X", "mu2"]),
        source.intensities("X"), probs, eps, finite_size,
    )
    n_z = z["n"]
    feasible = z["s1_lower"] > 0 and x["s1_lower"] > 0

    s_z0 = z["s0_lower"]
    s_z1 = min(max(0.0, z["s1_lower"]), n_z - s_z0)
    s_x1 = min(max(0.0, x["s1_lower"]), x["n"])
    v_x1 = min(max(0.0, x["v1_upper"]), x["n"])

    if feasible and s_x1 > 0:
        ratio = v_x1 / s_x1
        corr = sampling_correction(eps, ratio, s_z1, s_x1) if finite_size else 0.0
        phi = min(0.5, ratio + corr)
    else:
        phi = 0.5

    return DecoyBounds(
        s_z0_lower=s_z0,
        s_z1_lower=s_z1,
        s_x1_lower=s_x1,
        v_x1_upper=v_x1,
        phi_z_upper=phi,
        s_z0_upper=z["s0_upper"],
        s_x0_upper=x["s0_upper"],
        n_z=n_z,
        feasible=feasible,
    )


def secure_key_length(
    bounds: DecoyBounds,
    q_z: float,
    budget: SecurityBudget,
    n_z: float | None = None,
) -> KeyLength:
    """Evaluate the secure-key-length bound and floor it to whole bits.

    ``n_z`` defaults to ``budget.n_z``; pass the realised sifted count when it
    differs from the target.
    """
    leak = ec_leakage(q_z, budget, n_z)
    cost = pa_cost(budget)
    bound = (
        bounds.s_z0_lower
        + bounds.s_z1_lower * (1.0 - binary_entropy(bounds.phi_z_upper))
        - leak
        - cost
    )
    if not bounds.feasible or bound <= 0:
        return KeyLength(0, False, bound, leak, cost)
    skl = math.floor(bound)
    return KeyLength(skl, skl > 0, bound, leak, cost)


def skr_per_pulse(skl: float, total_pulses: float) -> float:
    if not total_pulses > 0:
        raise ValueError(f"total_pulses must be > 0, got {total_pulses}")
    return skl / total_pulses
