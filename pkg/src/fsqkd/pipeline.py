"""Single-distance evaluation: channel -> receiver -> counts -> key length."""

from __future__ import annotations

from .atmosphere import (
    AbsorptionTable,
    AttenuationBudget,
    OpticalCarrier,
    PathGeometry,
    WeatherScenario,
    total_budget,
)
from .detstats import InfeasibleError, SourceModel, expected_counts
from .finitekey import (
    KeyRateResult,
    SecurityBudget,
    decoy_bounds,
    secure_key_length,
    skr_per_pulse,
)
from .receiver import ReceiverModel


def key_rate_for_budget(
    budget: AttenuationBudget | float,
    source: SourceModel,
    rx: ReceiverModel,
    security: SecurityBudget,
    finite_size: bool = True,
) -> KeyRateResult:
    breakdown = budget if isinstance(budget, AttenuationBudget) else None
    try:
        counts, obs = expected_counts(source, rx, budget, security.n_z)
    except InfeasibleError:
        return KeyRateResult(0, 0.0, False, 0, 0.5, 0.5, None, breakdown)
    n_z = counts.n_basis("Z")
    q_z = counts.m_basis("Z") / n_z if n_z else 0.5
    n_x = counts.n_basis("X")
    q_x = counts.m_basis("X") / n_x if n_x else 0.5
    bounds = decoy_bounds(counts, obs, source, security, finite_size=finite_size)
    key = secure_key_length(bounds, q_z, security, n_z=n_z)
    return KeyRateResult(
        skl_bits=key.skl_bits,
        skr_per_pulse=skr_per_pulse(key.skl_bits, counts.total_pulses),
        feasible=key.feasible,
        total_pulses=counts.total_pulses,
        q_z=q_z,
        q_x=q_x,
        bounds=bounds,
        budget_breakdown=breakdown,
        observables=obs,
        counts=counts,
    )


def evaluate_link(
    carrier: OpticalCarrier,
    rx: ReceiverModel,
    geom: PathGeometry,
    weather: WeatherScenario,
    source: SourceModel | None = None,
    security: SecurityBudget | None = None,
    table: AbsorptionTable | None = None,
) -> KeyRateResult:
    budget = total_budget(carrier, geom, weather, table)
    return key_rate_for_budget(
        budget,
        SourceModel() if source is None else source,
        rx,
        SecurityBudget() if security is None else security,
    )
