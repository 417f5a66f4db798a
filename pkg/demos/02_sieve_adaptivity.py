"""A sieve prior adapts to the unknown smoothness of the truth.

The prior draws a truncation level M from an exponential pmf and then M
Gaussian coefficients, with no smoothness parameter at all. Posterior
sampling uses reversible-jump MCMC. The same prior should track n^(-1/5)
for a truth of smoothness 1 and n^(-2/7) for smoothness 2, up to log
factors. Chains here are short so the script finishes in a few minutes;
the acceptance suite uses 20000 iterations and more replicates.
"""
from contract_bench import (
    CoefficientDensity,
    RateScenario,
    ScaleSchedule,
    SievePriorSpec,
    TruncationPmf,
    fit_rate,
    run_experiment,
    theoretical_rate,
)

prior = SievePriorSpec(TruncationPmf("exponential", b=1.0), CoefficientDensity.gaussian(),
                       ScaleSchedule("constant", 1.0))

for gamma in (1.0, 2.0):
    scenario = RateScenario(
        operator={"kind": "mild_power", "params": {"alpha": 1.0}, "K_max": 200},
        prior=prior.to_dict(),
        truth={"kind": "sobolev", "gamma": gamma},
        n_grid=[1e2, 1e3, 1e4, 1e5, 1e6],
        replicates=3,
        seed=3,
        mcmc={"iters": 5000, "burn_in": 1500},
    )
    fit = fit_rate(run_experiment(scenario))
    print(f"gamma={gamma:g}: {theoretical_rate(scenario).descriptor}")
    print(f"  fitted slope {fit.slope:.3f}, expected about {fit.theoretical_exponent:.3f}")
