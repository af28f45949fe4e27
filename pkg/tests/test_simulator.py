import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transuq.space import PhysicalInputs, PolicyLevels, default_space, denormalize
from transuq.simulator import (
    CATEGORY_FOSSIL,
    CATEGORY_RENEWABLE,
    GLOBAL,
    OUTPUT_NAMES,
    RegionState,
    SimConfig,
    SimulationError,
    Technology,
    apply_inputs,
    capital_recovery_factor,
    carbon_price_at,
    default_config,
    extract_outputs,
    lcoe,
    load_config,
    preference,
    save_config,
    save_sim_output_csv,
    sim_output_summary,
    simulate,
    step,
)

NO_POLICY = PolicyLevels(0.0, {}, {}, 0.0, 0.0)


def make_tech(tid="t", category=CATEGORY_RENEWABLE, invest=1000.0, om=10.0,
              fuel=0.0, cf=0.5, lifetime=30.0, lead=1.0, ef=0.0, learn=0.0,
              w0=100.0):
    return Technology(tid, category, invest, om, fuel, cf, lifetime, lead,
                      ef, learn, w0)


def make_state(shares, techs, region="R1", demand=1000.0, growth=0.02,
               rho=0.07, gamma=None):
    return RegionState(
        region=region,
        shares=dict(zip([t.id for t in techs], shares)),
        demand=demand,
        demand_growth=growth,
        discount_rate={t.id: rho for t in techs},
        gamma=gamma or {},
    )


def test_crf_values_and_zero_limit():
    assert capital_recovery_factor(0.0, 20.0) == 0.05
    assert capital_recovery_factor(1e-13, 20.0) == 0.05
    # Continuity across the switch to the closed form.
    assert capital_recovery_factor(1e-9, 20.0) == pytest.approx(0.05, rel=1e-7)
    # Closed form at a representative rate.
    rho, life = 0.07, 30.0
    expected = rho * (1 + rho) ** life / ((1 + rho) ** life - 1)
    assert capital_recovery_factor(rho, life) == pytest.approx(expected, rel=1e-15)
    arr = capital_recovery_factor(np.array([0.0, 0.07]), np.array([20.0, 30.0]))
    assert arr.shape == (2,)
    assert arr[0] == 0.05


def test_crf_rejects_bad_arguments():
    with pytest.raises(SimulationError, match="non-negative"):
        capital_recovery_factor(-0.01, 20.0)
    with pytest.raises(SimulationError, match="lifetime"):
        capital_recovery_factor(0.05, 0.0)


def test_lcoe_oracle():
    # CRF(0, 20) = 1/20; 0.05 * 876 * 1000 / (8760 * 0.5) = 10.
    tech = make_tech(invest=876.0, om=0.0, fuel=0.0, cf=0.5, lifetime=20.0)
    state = make_state([1.0], [tech], rho=0.0)
    assert lcoe(tech, state, NO_POLICY, 2022) == pytest.approx(10.0, rel=1e-12)


def test_lcoe_components_add_linearly():
    tech = make_tech(om=12.0, fuel=7.0, ef=1.0)
    state = make_state([1.0], [tech])
    base = lcoe(tech, state, NO_POLICY, 2030)

    carbon = PolicyLevels(0.0, {}, {}, 31.0, 31.0)
    assert lcoe(tech, state, carbon, 2030) - base == pytest.approx(31.0, rel=1e-12)

    fit = PolicyLevels(0.0, {tech.id: 15.0}, {}, 0.0, 0.0)
    assert lcoe(tech, state, fit, 2030) - base == pytest.approx(-15.0, rel=1e-12)

    gamma_state = make_state([1.0], [tech], gamma={tech.id: 5.0})
    assert lcoe(tech, gamma_state, NO_POLICY, 2030) - base == pytest.approx(5.0, rel=1e-12)

    half = PolicyLevels(0.0, {}, {}, 0.0, 0.0)
    half = PolicyLevels(0.0, {}, {tech.id: 0.5}, 0.0, 0.0)
    capital = base - tech.om_cost - tech.fuel_cost
    assert lcoe(tech, state, half, 2030) - base == pytest.approx(-0.5 * capital,
                                                                 rel=1e-12)


def test_lcoe_lead_time_compounds_investment():
    tech = make_tech(om=0.0, lead=2.0)
    state = make_state([1.0], [tech], rho=0.10)
    no_lead = lcoe(tech, state, NO_POLICY, 2030, grid_lead=0.0)
    with_grid = lcoe(tech, state, NO_POLICY, 2030, grid_lead=1.0)
    assert with_grid == pytest.approx(no_lead * 1.10, rel=1e-12)


def test_lcoe_rejects_zero_capacity_factor():
    tech = make_tech(cf=0.0)
    state = make_state([1.0], [tech])
    with pytest.raises(SimulationError, match="capacity factor"):
        lcoe(tech, state, NO_POLICY, 2030)


def test_carbon_price_interpolates_and_clamps():
    pol = PolicyLevels(0.0, {}, {}, 10.0, 66.0)
    assert carbon_price_at(pol, 2022) == 10.0
    assert carbon_price_at(pol, 2050) == 66.0
    assert carbon_price_at(pol, 2036) == pytest.approx(38.0)
    assert carbon_price_at(pol, 2010) == 10.0
    assert carbon_price_at(pol, 2080) == 66.0


def test_preference_oracle():
    assert preference(30.0, 40.0, 10.0) == 0.7310585786300049
    assert preference(40.0, 30.0, 10.0) == 1.0 - 0.7310585786300049
    assert preference(25.0, 25.0, 10.0) == 0.5


@given(a=st.floats(min_value=-500, max_value=500),
       b=st.floats(min_value=-500, max_value=500),
       s=st.floats(min_value=0.1, max_value=100))
@settings(max_examples=200, deadline=None)
def test_preference_complement_exact(a, b, s):
    assert preference(a, b, s) + preference(b, a, s) == 1.0
    assert 0.0 <= preference(a, b, s) <= 1.0


def test_preference_cheaper_wins_more():
    assert preference(20.0, 40.0, 10.0) > preference(30.0, 40.0, 10.0) > 0.5


def test_preference_rejects_bad_spread():
    with pytest.raises(SimulationError, match="choice_spread"):
        preference(1.0, 2.0, 0.0)


def test_step_identical_costs_is_stationary():
    techs = [make_tech("a"), make_tech("b")]
    state = make_state([0.3, 0.7], techs)
    new_state, _ = step(state, techs, NO_POLICY, 2022.0, 0.25)
    assert new_state.shares["a"] == 0.3
    assert new_state.shares["b"] == 0.7


@given(raw=st.lists(st.floats(min_value=0.01, max_value=1.0),
                    min_size=2, max_size=6),
       oms=st.lists(st.floats(min_value=0.0, max_value=300.0),
                    min_size=6, max_size=6))
@settings(max_examples=60, deadline=None)
def test_step_conserves_share_sum(raw, oms):
    total = sum(raw)
    shares = [r / total for r in raw]
    techs = [make_tech(f"t{i}", om=oms[i]) for i in range(len(shares))]
    state = make_state(shares, techs)
    new_state, _ = step(state, techs, NO_POLICY, 2022.0, 0.25)
    assert abs(sum(new_state.shares.values()) - 1.0) <= 1e-9
    assert all(0.0 <= s <= 1.0 for s in new_state.shares.values())


def _fossil_delta(phase_out):
    techs = [make_tech("coal", CATEGORY_FOSSIL, om=20.0),
             make_tech("solar", CATEGORY_RENEWABLE, om=40.0)]
    state = make_state([0.6, 0.4], techs)
    policy = PolicyLevels(phase_out, {}, {}, 0.0, 0.0)
    new_state, _ = step(state, techs, policy, 2022.0, 0.25)
    return new_state.shares["coal"] - 0.6


def test_phase_out_scales_clean_to_fossil_inflow_linearly():
    # Inflow into the fossil fleet from clean sources shrinks as (1 - p);
    # the outflow (at p = 1) is untouched.
    full = _fossil_delta(1.0)
    inflow_half = _fossil_delta(0.5) - full
    inflow_none = _fossil_delta(0.0) - full
    assert inflow_none > 0
    assert inflow_half == pytest.approx(0.5 * inflow_none, rel=1e-9)
    assert _fossil_delta(1.0) < _fossil_delta(0.5) < _fossil_delta(0.0)


def test_full_phase_out_fossil_share_never_grows(space):
    u = np.full(space.dimension, 0.5)
    for rid in ("CN", "US", "IN", "RGN", "RGS"):
        u[space.index_of(f"{rid}_phase_out")] = 1.0
    config = default_config()
    trace: list[np.ndarray] = []
    simulate(config, denormalize(space, u), share_trace=trace)
    fossil = np.array([t.category == CATEGORY_FOSSIL for t in config.technologies])
    totals = np.array([s[:, fossil].sum(axis=1) for s in trace])
    assert np.all(np.diff(totals, axis=0) <= 1e-12)


def test_dispatch_and_weighted_cost():
    # Equal capacity factors: generation splits by share; with investment,
    # fuel, and carbon all zero the LCOE is the O&M cost, so the weighted
    # cost is 0.25 * 40 + 0.75 * 80 = 70.
    techs = [make_tech("cheap", invest=0.0, om=40.0),
             make_tech("dear", invest=0.0, om=80.0)]
    state = make_state([0.25, 0.75], techs, demand=876.0)
    config = SimConfig(technologies=tuple(techs), regions=(state,),
                       report_years=(2022,), grid_lead=0.0)
    out = simulate(config)
    cell = out.results[(2022, "R1")]
    assert cell.weighted_cost == pytest.approx(70.0, rel=1e-14)
    assert cell.generation["cheap"] == pytest.approx(0.25 * 876.0, rel=1e-14)
    # K [GW] = gen [TWh] / (8.76 * cf)
    assert cell.capacity["cheap"] == pytest.approx(0.25 * 876.0 / (8.76 * 0.5),
                                                   rel=1e-12)
    assert cell.emissions == 0.0
    assert cell.renewables_share == pytest.approx(1.0)


def test_emissions_are_generation_weighted():
    techs = [make_tech("coal", CATEGORY_FOSSIL, ef=0.95),
             make_tech("solar", CATEGORY_RENEWABLE, ef=0.0)]
    state = make_state([0.5, 0.5], techs, demand=1000.0)
    config = SimConfig(technologies=tuple(techs), regions=(state,),
                       report_years=(2022,))
    out = simulate(config)
    cell = out.results[(2022, "R1")]
    # TWh * tCO2/MWh = MtCO2
    assert cell.emissions == pytest.approx(500.0 * 0.95, rel=1e-12)


def test_learning_by_doing_update():
    techs = [make_tech("a", invest=1000.0, learn=-0.3, w0=100.0, cf=0.5),
             make_tech("b", invest=1000.0, om=60.0, learn=0.0, w0=100.0, cf=0.5)]
    state = make_state([0.5, 0.5], techs, demand=876.0, growth=0.0)
    dt = 0.25
    new_state, new_techs = step(state, techs, NO_POLICY, 2022.0, dt)

    def cap(share):
        return 876.0 * share / (8.76 * 0.5)

    k_before = {t.id: cap(state.shares[t.id]) for t in techs}
    k_after = {t.id: cap(new_state.shares[t.id]) for t in techs}
    for t, new in zip(techs, new_techs):
        adds = max(k_after[t.id] - k_before[t.id], 0.0) \
            + k_before[t.id] * dt / t.lifetime
        assert new.cumulative_capacity == pytest.approx(t.cumulative_capacity + adds,
                                                        rel=1e-12)
        expected_invest = t.investment_cost * (
            new.cumulative_capacity / t.cumulative_capacity) ** t.learning_exponent
        assert new.investment_cost == pytest.approx(expected_invest, rel=1e-12)
    # The cheaper technology gains share, so its cost falls through learning.
    assert new_techs[0].investment_cost < techs[0].investment_cost


def test_apply_inputs_techno_mapping(space):
    config = default_config()
    u = np.full(space.dimension, 0.5)
    u[space.index_of("coal_price")] = 1.0  # -> 1.3x
    u[space.index_of("om_mult")] = 1.0  # -> 1.2x
    u[space.index_of("vre_cf_mult")] = 1.0  # -> 1.1x
    u[space.index_of("nonvre_invest_mult")] = 0.0  # -> 0.8x
    u[space.index_of("discount_shift")] = 0.0  # -> -0.03
    u[space.index_of("demand_growth_shift")] = 1.0  # -> +0.2
    u[space.index_of("grid_lead")] = 1.0  # -> 1.0 year
    u[space.index_of("solar_lead")] = 1.0  # -> 1.5 years
    run = apply_inputs(config, denormalize(space, u))

    ids = run.tech_ids
    coal, solar = ids.index("coal"), ids.index("solar")
    assert run.fuel[coal] == pytest.approx(26.0 * 1.3, rel=1e-12)
    assert run.om[solar] == pytest.approx(8.0 * 1.2, rel=1e-12)
    assert run.cf[solar] == pytest.approx(0.20 * 1.1, rel=1e-12)
    assert run.cf[coal] == pytest.approx(0.55, rel=1e-12)
    assert run.invest[coal] == pytest.approx(2200.0 * 0.8, rel=1e-12)
    assert run.invest[solar] == pytest.approx(900.0, rel=1e-12)
    # lead = technology lead + config grid lead + grid_lead input
    assert run.lead[solar] == pytest.approx(1.5 + 0.5 + 1.0, rel=1e-12)
    # Most rates drop by 0.03; the solar rate in the US (0.065) hits none of
    # the floors, RGN's 0.06 shifts to 0.03, still above the 0.02 floor.
    rgn = run.region_ids.index("RGN")
    assert run.rho[rgn, solar] == pytest.approx(0.06 - 0.03, rel=1e-12)
    us = run.region_ids.index("US")
    assert run.growth[us] == pytest.approx(0.015 * 1.2, rel=1e-12)


def test_discount_floor_applies(space):
    config = default_config()
    inputs = PhysicalInputs(values={"discount_shift": -0.5}, policies={})
    run = apply_inputs(config, inputs)
    assert np.all(run.rho == 0.02)


def test_initial_share_sum_checked():
    techs = [make_tech("a"), make_tech("b")]
    state = make_state([0.5, 0.6], techs)
    config = SimConfig(technologies=tuple(techs), regions=(state,),
                       report_years=(2030,))
    with pytest.raises(SimulationError, match="initial shares sum"):
        simulate(config)


def test_config_validation_errors():
    techs = (make_tech("a"),)
    state = make_state([1.0], list(techs))
    with pytest.raises(SimulationError, match="start_year"):
        SimConfig(techs, (state,), start_year=2050, end_year=2022).validate()
    with pytest.raises(SimulationError, match="timestep"):
        SimConfig(techs, (state,), timestep=0.0).validate()
    with pytest.raises(SimulationError, match="not on the timestep grid"):
        SimConfig(techs, (state,), timestep=3.0, report_years=(2023,)).validate()
    with pytest.raises(SimulationError, match="not on the timestep grid"):
        SimConfig(techs, (state,), report_years=(2060,)).validate()
    with pytest.raises(SimulationError, match="must be positive"):
        SimConfig(techs, (state,), substitution_speed=0.0).validate()
    with pytest.raises(SimulationError, match="must divide"):
        simulate(SimConfig(techs, (state,), end_year=2049, timestep=2.0,
                           report_years=(2024,)))


def test_simulate_is_deterministic(space, small_design):
    config = default_config()
    inputs = denormalize(space, small_design.points[0])
    a = extract_outputs(simulate(config, inputs), GLOBAL, 2050)
    b = extract_outputs(simulate(config, inputs), GLOBAL, 2050)
    assert a == b
    assert set(a) == set(OUTPUT_NAMES)


def test_simulate_share_conservation_default_run(space, small_design):
    config = default_config()
    trace: list[np.ndarray] = []
    simulate(config, denormalize(space, small_design.points[1]), share_trace=trace)
    assert len(trace) == round((2050 - 2022) / 0.25)
    for shares in trace:
        assert np.all(np.abs(shares.sum(axis=1) - 1.0) <= 1e-9)
        assert shares.min() >= 0.0


def test_extract_outputs_unknown_key(space):
    out = simulate(default_config())
    with pytest.raises(SimulationError, match="report years are"):
        extract_outputs(out, GLOBAL, 2031)
    with pytest.raises(SimulationError, match="no results"):
        extract_outputs(out, "XX", 2030)


def test_global_aggregates_regions():
    out = simulate(default_config())
    regions = [r for r in out.regions if r != GLOBAL]
    for year in (2030, 2050):
        total = sum(out.results[(year, r)].emissions for r in regions)
        assert out.results[(year, GLOBAL)].emissions == pytest.approx(total, rel=1e-12)
        cap = sum(out.results[(year, r)].capacity["solar"] for r in regions)
        assert out.results[(year, GLOBAL)].capacity["solar"] == pytest.approx(
            cap, rel=1e-12)


def test_config_json_roundtrip(tmp_path):
    config = default_config()
    path = tmp_path / "config.json"
    save_config(config, path)
    assert load_config(path) == config


def test_sim_output_files(tmp_path):
    out = simulate(default_config())
    path = tmp_path / "sim.csv"
    save_sim_output_csv(out, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "region,technology,year,capacity_GW,generation_TWh"
    # 3 years x (5 regions + global) x 8 technologies
    assert len(lines) - 1 == 3 * 6 * 8

    summary = sim_output_summary(out)
    assert summary[GLOBAL]["2050"]["emissions_Mt"] == out.results[(2050, GLOBAL)].emissions
