"""Acceptance checks for the assembled pipeline.

One test per headline requirement, each asserting the stated tolerance and
printing a PASS line with the measured numbers. Shared artifacts (the 500-run
design, its simulations, the fitted emulators) are module fixtures so the
whole file runs in a couple of minutes.
"""

import time

import numpy as np
import pytest

from transuq.cli import load_model_store
from transuq.emulator import (
    KernelConfig,
    MEAN_ZERO,
    TrainingSet,
    build_model,
    fit,
    log_marginal_likelihood,
    loo_validate,
    predict,
    split,
    validate_on_test,
)
from transuq.scenarios import (
    default_targets,
    compare_scenarios,
    figure_grid,
    make_scenario,
    propagate,
    reports_to_csv,
    sample_scenario,
    support_design,
)
from transuq.sensitivity import rank_inputs, sweep_all
from transuq.simulator import default_config, extract_outputs, simulate
from transuq.space import (
    InputDef,
    KIND_TECHNO,
    ParameterSpace,
    denormalize,
    lhs_sample,
)

PHASE_IDS = ("CN_phase_out", "US_phase_out", "IN_phase_out",
             "RGN_phase_out", "RGS_phase_out")

DURATIONS: dict[str, float] = {}


def _global_emissions_2050(config, space, row):
    out = simulate(config, denormalize(space, row))
    return extract_outputs(out, "global", 2050)["emissions_Mt"]


@pytest.fixture(scope="module")
def design500(space):
    start = time.perf_counter()
    design = lhs_sample(500, space, seed=2050)
    DURATIONS["design500"] = time.perf_counter() - start
    return design


@pytest.fixture(scope="module")
def emissions2050(design500, space, config):
    start = time.perf_counter()
    y = np.array([_global_emissions_2050(config, space, row)
                  for row in design500.points])
    DURATIONS["emissions2050"] = time.perf_counter() - start
    return y


@pytest.fixture(scope="module")
def fidelity_model(design500, emissions2050):
    """80/20 protocol on the 500-run design: 400 train, 100 held out."""
    start = time.perf_counter()
    train, test = split(design500.points, emissions2050, "emissions_Mt", 2050,
                        train_fraction=0.8, seed=0)
    model = fit(train, n_restarts=3, seed=0)
    DURATIONS["fidelity_model"] = time.perf_counter() - start
    return model, train, test


@pytest.fixture(scope="module")
def endtoend_model(design500, emissions2050, space, config):
    """Propagation emulator: the global design plus stratified coverage of
    the scenario support, so the evaluated cell is an interpolation region."""
    start = time.perf_counter()
    spec = make_scenario(space, package="baseline")
    aug = support_design(spec, space, 100, seed=7)
    y_aug = np.array([_global_emissions_2050(config, space, row) for row in aug])
    x = np.vstack([design500.points, aug])
    y = np.concatenate([emissions2050, y_aug])
    model = fit(TrainingSet(x, y, "emissions_Mt", 2050), n_restarts=3, seed=0)
    DURATIONS["endtoend_model"] = time.perf_counter() - start
    return model


def test_design_stratification_and_speed(space):
    assert space.dimension == 30
    for n in (4, 500):
        points = lhs_sample(n, space, seed=11 + n).points
        for j in range(space.dimension):
            bins = np.sort(np.floor(points[:, j] * n).astype(int))
            assert np.array_equal(bins, np.arange(n)), \
                f"dimension {j} misses a 1/{n} bin"
    start = time.perf_counter()
    lhs_sample(500, space, seed=1)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(f"\nPASS design stratification: one point per bin for n in (4, 500), "
          f"d=30; 500x30 generated in {elapsed * 1000:.0f} ms")


def test_share_conservation_over_random_inputs(space, config):
    rng = np.random.default_rng(2022)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(1000):
        trace: list[np.ndarray] = []
        simulate(config, denormalize(space, rng.random(space.dimension)),
                 share_trace=trace)
        assert len(trace) == round((2050 - 2022) / 0.25)
        for shares in trace:
            worst = max(worst, float(np.abs(shares.sum(axis=1) - 1.0).max()))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-9
    assert elapsed < 60.0
    print(f"\nPASS share conservation: 1000 runs, max |sum-1| = {worst:.2e} "
          f"at quarterly steps 2022-2050, {elapsed:.1f} s single-threaded")


def test_phaseout_monotonicity(space, config):
    rng = np.random.default_rng(7)
    levels = (0.0, 0.25, 0.5, 0.75, 1.0)
    years = (2030, 2040, 2050)
    phase_idx = [space.index_of(i) for i in PHASE_IDS]
    violations = 0
    for _ in range(100):
        u = rng.random(space.dimension)
        per_year = {y: [] for y in years}
        for level in levels:
            v = u.copy()
            v[phase_idx] = level
            out = simulate(config, denormalize(space, v))
            for y in years:
                per_year[y].append(extract_outputs(out, "global", y)["emissions_Mt"])
        for y in years:
            e = per_year[y]
            violations += sum(e[k + 1] > e[k] + 1e-9 for k in range(len(e) - 1))
    assert violations == 0
    print("\nPASS phase-out monotonicity: 100 inputs x levels (0,.25,.5,.75,1), "
          "emissions at 2030/2040/2050 non-increasing, 0 violations")


def test_gp_correctness(fidelity_model):
    model, train, _ = fidelity_model

    # (a) interpolation at every training point within 3 sqrt(nugget)
    mean, _ = predict(model, train.x)
    interp_tol = 3.0 * np.sqrt(model.kernel.nugget) * model.y_scale
    interp_worst = float(np.abs(mean - train.y).max())
    assert interp_worst <= interp_tol

    # (b) two-point posterior against the dense hand formulas
    kernel = KernelConfig(1.2, (0.35,), 1e-6)
    x2 = np.array([[0.2], [0.7]])
    y2 = np.array([1.0, -1.0])
    two = build_model(TrainingSet(x2, y2, "hand", 2030), kernel,
                      mean=MEAN_ZERO, standardize=False)
    probes = np.array([[0.1], [0.5], [0.9]])
    k_xx = 1.2 * np.exp(-0.5 * (x2 - x2.T) ** 2 / 0.35 ** 2) + 1e-6 * np.eye(2)
    k_sx = 1.2 * np.exp(-0.5 * (probes - x2.T) ** 2 / 0.35 ** 2)
    k_inv = np.linalg.inv(k_xx)
    hand_mean = k_sx @ k_inv @ y2
    hand_var = 1.2 - np.einsum("ij,jk,ik->i", k_sx, k_inv, k_sx)
    got_mean, got_var = predict(two, probes)
    hand_worst = float(max(np.abs(got_mean - hand_mean).max(),
                           np.abs(got_var - hand_var).max()))
    assert hand_worst <= 1e-8

    # (c) leave-one-out calibration on data drawn from the model's own prior
    rng = np.random.default_rng(6)
    xp = rng.random((400, 4))
    prior_kernel = KernelConfig(1.0, (0.6, 0.6, 0.6, 0.6), 1e-4)
    d2 = ((xp[:, None, :] - xp[None, :, :]) ** 2 / 0.6 ** 2).sum(-1)
    cov = np.exp(-0.5 * d2) + 1e-4 * np.eye(400)
    yp = np.linalg.cholesky(cov) @ rng.standard_normal(400)
    prior_model = build_model(TrainingSet(xp, yp, "prior", 2030), prior_kernel,
                              mean=MEAN_ZERO, standardize=False)
    coverage = loo_validate(prior_model).coverage95
    assert 0.88 <= coverage <= 0.99

    # (d) analytic likelihood gradient against central differences
    rng = np.random.default_rng(3)
    xg = rng.random((40, 3))
    yg = np.sin(3 * xg[:, 0]) - xg[:, 1] ** 2 + 0.5 * xg[:, 2]
    kg = KernelConfig(0.8, (0.4, 0.6, 0.5), 1e-4)
    theta = np.log(np.array([kg.signal_variance, *kg.lengthscales, kg.nugget]))
    _, grad = log_marginal_likelihood(kg, xg, yg, with_grad=True)
    h = 1e-6
    rel_worst = 0.0
    for i in range(len(theta)):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h

        def value(t):
            k = KernelConfig(float(np.exp(t[0])), tuple(np.exp(t[1:-1])),
                             float(np.exp(t[-1])))
            return log_marginal_likelihood(k, xg, yg)

        fd = (value(tp) - value(tm)) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-10)
        rel_worst = max(rel_worst, abs(grad[i] - fd) / max(abs(fd), 1e-10))

    print(f"\nPASS gp correctness: interpolation {interp_worst:.3g} <= "
          f"{interp_tol:.3g}; hand posterior within {hand_worst:.2e}; "
          f"prior-draw LOO coverage {coverage:.3f} in [0.88, 0.99]; "
          f"gradient rel err {rel_worst:.2e} <= 1e-4")


def test_emulator_fidelity_on_heldout(fidelity_model):
    model, train, test = fidelity_model
    assert train.x.shape[0] == 400 and test.x.shape[0] == 100
    report = validate_on_test(model, test)
    sd = float(test.y.std())
    assert report.rmse <= 0.15 * sd
    assert 0.85 <= report.coverage95 <= 1.0
    print(f"\nPASS emulator fidelity: 400 training runs, held-out RMSE "
          f"{report.rmse:.1f} = {report.rmse / sd:.3f} sd (<= 0.15 sd), "
          f"95% coverage {report.coverage95:.2f} in [0.85, 1.0]")


def test_endtoend_distribution_match(endtoend_model, space, config):
    start = time.perf_counter()
    key = ("global", "emissions_Mt", 2050)

    emu_spec = make_scenario(space, package="baseline", n=20000, seed=123)
    samples = sample_scenario(emu_spec, space)
    draws = propagate({key: endtoend_model}, samples, seed=123)[key]
    mean_sd = float(np.mean(np.sqrt(predict(endtoend_model, samples)[1])))

    direct_spec = make_scenario(space, package="baseline", n=2000, seed=123)
    direct = np.array([_global_emissions_2050(config, space, row)
                       for row in sample_scenario(direct_spec, space)])

    iqr = float(np.quantile(direct, 0.75) - np.quantile(direct, 0.25))
    med_gap = abs(float(np.median(draws) - np.median(direct)))
    med_tol = max(0.1 * iqr, 2.0 * mean_sd)
    assert med_gap <= med_tol
    q_gaps = {}
    for q in (0.05, 0.95):
        q_gaps[q] = abs(float(np.quantile(draws, q) - np.quantile(direct, q)))
        assert q_gaps[q] <= 0.2 * iqr

    elapsed = time.perf_counter() - start
    total = elapsed + sum(DURATIONS.values())
    assert total < 600.0
    print(f"\nPASS end-to-end: 20000 emulated vs 2000 direct draws, "
          f"median gap {med_gap:.0f} <= {med_tol:.0f}, quantile gaps "
          f"q05 {q_gaps[0.05]:.0f} / q95 {q_gaps[0.95]:.0f} <= {0.2 * iqr:.0f}, "
          f"pipeline total {total:.0f} s < 600 s")


def test_oaat_recovery():
    toy = ParameterSpace(tuple(
        InputDef(f"x{i}", KIND_TECHNO, 0.0, 1.0, "u") for i in range(1, 5)))
    x = lhs_sample(200, toy, seed=17).points
    y = 5.0 * x[:, 0] + 0.5 * x[:, 1] + 0.1 * x[:, 2]
    model = fit(TrainingSet(x, y, "toy", 2030), n_restarts=2, seed=0)
    table = sweep_all(model, toy)
    ranking = rank_inputs([table])
    assert ranking.input_ids[:3] == ("x1", "x2", "x3")
    irrelevant = float(table.indices[list(table.input_ids).index("x4")])
    assert irrelevant < 0.02
    print(f"\nPASS sensitivity recovery: ranking {ranking.input_ids}, "
          f"irrelevant input index {irrelevant:.4f} < 0.02")


def test_direct_simulation_directional_medians(space, config):
    def cell_median(package, ambition, lead_band):
        spec = make_scenario(space, package=package, ambition=ambition,
                             lead_band=lead_band, n=200, seed=31)
        vals = np.array([_global_emissions_2050(config, space, row)
                         for row in sample_scenario(spec, space)])
        return float(np.median(vals))

    med = {(pkg, band): cell_median(pkg, amb, band)
           for pkg, amb in (("baseline", 1.0), ("sub-cp-phase", 1.0))
           for band in ("fast", "slow")}
    assert med[("baseline", "fast")] <= med[("baseline", "slow")]
    assert med[("sub-cp-phase", "fast")] <= med[("baseline", "fast")]
    assert med[("sub-cp-phase", "slow")] <= med[("baseline", "slow")]
    print("\nPASS directional medians (2050 emissions, direct simulation): "
          f"current policy fast {med[('baseline', 'fast')]:.0f} <= slow "
          f"{med[('baseline', 'slow')]:.0f}; high ambition <= current within "
          f"each band ({med[('sub-cp-phase', 'fast')]:.0f} / "
          f"{med[('sub-cp-phase', 'slow')]:.0f})")


def test_robustness_grid_determinism(space, workspace, tmp_path):
    models = load_model_store(workspace / "models")
    cells = figure_grid(space, n=1500, seed=77)
    assert len(cells) == 60
    targets = default_targets()

    outputs = []
    for run in ("a", "b"):
        reports = compare_scenarios(cells, models, targets, space)
        path = tmp_path / f"reports_{run}.csv"
        reports_to_csv(reports, path)
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    print("\nPASS robustness determinism: 60-cell grid, two runs, "
          f"byte-identical CSV ({len(outputs[0])} bytes)")
