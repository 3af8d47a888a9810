"""
Screening-test accuracy over time
=================================

A screening test splits the cohort into test-positives (group 1) and
test-negatives (group 0).  With disease prevalence known, the transform turns
the two groups' event hazards into time-cumulative predictive values and
accuracy: cumulative PPV, NPV, sensitivity, and specificity.  The baseline
state is user-supplied -- it encodes the test's performance at time zero,
and a zero baseline would sit on the guard that keeps denominators positive.
"""

from hazard_transform import (
    ConstantHazard,
    Scenario,
    SystemKind,
    confidence_band,
    estimate_driver,
    fit_plugin,
    make_system,
    oracle_parameter,
    simulate_dataset,
)

# Baseline (U0, V0, W0, X0) = (PPV, NPV, sensitivity, specificity) at time 0.
kind = SystemKind(
    name="screening",
    prevalence=0.2,
    initial_value=[0.7, 0.9, 0.6, 0.92],
)

# Test-positives fail fast (rate 1.2), test-negatives slowly (rate 0.25).
sc = Scenario(
    system=kind,
    hazards={
        "positive": ConstantHazard(rate_value=1.2, horizon=1.0),
        "negative": ConstantHazard(rate_value=0.25, horizon=1.0),
    },
    n=600,
    seed=3,
)
ds = simulate_dataset(sc)
sizes = {g: sum(1 for r in ds.records if r.group == g) for g in (0, 1)}
print(f"test-negative / test-positive sizes: {sizes}")

# ---------------------------------------------------------------------------
# Fit and report each accuracy component with its 95% band at the horizon.
driver, meta = estimate_driver(ds, kind)
fit = fit_plugin(make_system(kind), driver, meta)
band = confidence_band(fit, level=0.95)
truth = oracle_parameter(sc.hazards, kind)

point, lo, hi = band.value_at(1.0)
exact = truth.value_at(1.0)
print("\n  component          estimate   lower   upper   exact")
for i, label in enumerate(fit.state_labels):
    print(
        f"  {label:<16}   {point[i]:8.4f}  {lo[i]:6.4f}  {hi[i]:6.4f}  {exact[i]:6.4f}"
    )

# The headline component for this system is cumulative sensitivity.
headline = kind.headline_index
print(f"\nheadline component: {fit.state_labels[headline]} (index {headline})")
