"""Recovering the initial condition of the heat equation.

Backward heat flow damps frequency k by exp(-T k^2), so information is lost
exponentially fast and the best possible rate is only a power of 1/log n.
We watch the median contraction radius crawl downward over four decades of
n and check how much posterior mass lies outside M (log n)^(-1/2), with M
taken from a pilot run at the smallest sample size.
"""
import numpy as np

from contract_bench import GaussianPriorSpec, RateScenario, run_experiment, theoretical_rate

base = dict(
    operator={"kind": "heat", "params": {"T": 0.1}, "K_max": 26},
    prior=GaussianPriorSpec(2.0).to_dict(),
    truth={"kind": "sobolev", "gamma": 1.0},
    replicates=20,
)

pilot = RateScenario.from_dict(dict(base, n_grid=[1e3], seed=40))
rate = theoretical_rate(pilot)
M = np.median([r.radius for r in run_experiment(pilot).rows]) / rate.xi(1e3)
print(f"{rate.descriptor}; pilot M = {M:.3f}")

scenario = RateScenario.from_dict(dict(base, n_grid=[1e3, 1e4, 1e5, 1e6], seed=4, M=float(M)))
table = run_experiment(scenario)
ns, med = table.median_radii()
for n, r in zip(ns, med):
    mass = np.median([row.mass_outside for row in table.rows if row.n == n])
    print(f"n={n:8.0e}  median radius {r:.4f}  xi_n {rate.xi(n):.4f}  mass outside M xi_n {mass:.4f}")
