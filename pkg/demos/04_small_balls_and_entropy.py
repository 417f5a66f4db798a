"""Prior mass near the truth and the size of the model.

Contraction needs two ingredients: the prior must put enough mass in small
balls around A f0, and the support must not be too rich. The first is
measured by the concentration function, compared here with an importance
sampling estimate of the small-ball probability. The second is the metric
entropy of the image of the RKHS unit ball, which for exp(-c0 k^beta)
decay grows like (log 1/eps)^(1 + 1/beta).
"""
import math

import numpy as np

from contract_bench import GaussianPriorSpec, SequenceVector, make_operator
from contract_bench.smallball import (
    concentration_function,
    entropy_constant,
    rkhs_cover_count,
    smallball_tilted,
)

op = make_operator("mild_power", {"alpha": 1.0}, 400)
prior = GaussianPriorSpec(1.0)
f0 = SequenceVector(np.arange(1, 401.0) ** -1.51)
b = op.rho * f0.coeffs

print("    eps   phi(eps)   -log P(ball) (tilted MC)")
for eps in (0.1, 0.03, 0.01, 0.003):
    phi = concentration_function(prior, op, b, eps).total
    est = smallball_tilted(prior, op, f0, eps, 20_000, seed=0)
    print(f"{eps:7.3f}  {phi:9.3f}   {-est.log_estimate:9.3f}")

print("\nentropy of the RKHS ball under exp(-k) decay")
sev = make_operator("severe_exp", {"beta": 1.0, "c0": 1.0}, 36)
A = entropy_constant(1.0, 1.0)
for j in range(1, 7):
    eps = 10.0**-j
    lc = rkhs_cover_count(sev, prior, eps)
    print(f"eps=1e-{j}  log N = {lc:8.2f}   ratio to (log 1/eps)^2 = {lc / math.log(1 / eps) ** 2:.3f}"
          f"   (asymptotic {A:.3f})")
