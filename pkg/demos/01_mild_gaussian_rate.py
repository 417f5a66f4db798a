"""Contraction of a Gaussian prior under a mildly ill-posed operator.

The operator damps frequency k by (1+k^2)^(-1/2). The prior has smoothness
delta = 1 and the truth sits just inside the Sobolev ball of order 1, so the
posterior should shrink around the truth like n^(-1/5). We run twenty
replicates per sample size, take the median contraction radius and fit a
power law on the log-log scale.
"""
from contract_bench import GaussianPriorSpec, RateScenario, fit_rate, run_experiment, theoretical_rate

scenario = RateScenario(
    operator={"kind": "mild_power", "params": {"alpha": 1.0}, "K_max": 2000},
    prior=GaussianPriorSpec(1.0).to_dict(),
    truth={"kind": "sobolev", "gamma": 1.0},
    n_grid=[1e2, 1e3, 1e4, 1e5, 1e6],
    replicates=20,
    seed=1,
)

rate = theoretical_rate(scenario)
print(f"predicted rate: {rate.descriptor}")

table = run_experiment(scenario)
ns, medians = table.median_radii()
print("\n       n   median radius   radius / xi_n")
for n, r in zip(ns, medians):
    print(f"{n:8.0e}   {r:13.5f}   {r / rate.xi(n):13.4f}")

fit = fit_rate(table)
print(f"\nfitted slope {fit.slope:.4f} +/- {fit.slope_std_error:.4f}"
      f" (theory {fit.theoretical_exponent:.4f}, verdict {fit.verdict})")
