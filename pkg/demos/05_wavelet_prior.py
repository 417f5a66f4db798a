"""A uniform wavelet prior on a deconvolution problem.

The Meyer wavelet rows are band limited in frequency, so they plug directly
into the Fourier diagonalisation of convolution. The prior draws a radius B
and uniform coefficients in the Besov box of that radius. We check a prior
draw against its envelope, then sample the posterior by Metropolis and see
the posterior mean approach the truth. The truth has |u| = 1 on every
level, the edge of the smallest box, and the chain stays at B = 1 because
larger boxes are penalised by their volume.
"""
import numpy as np

from contract_bench import (
    MCMCConfig,
    RadiusPmf,
    WaveletPriorSpec,
    besov_norm,
    make_operator,
    sample_wavelet_prior,
    simulate_observation,
    wavelet_posterior_mcmc,
)
from contract_bench.rate_harness import make_truth
from contract_bench.wavelets import required_K, wavelet_analysis

J = 3
K = required_K(J)
spec = WaveletPriorSpec(1.5, RadiusPmf("stretched", D=1.0, nu=1.0))

draw = sample_wavelet_prior(spec, J, seed=0)
print(f"prior draw: B = {draw.B}, Besov norm {besov_norm(draw.coeffs, 1.5, np.inf, np.inf):.3f}")

op = make_operator("deconvolution", {"atoms": [[0.0, 0.7], [0.05, 0.3]], "alpha": 1.0}, K)
f0 = make_truth({"kind": "holder", "gamma": 1.5, "J_max": J}, K)
truth_wc = wavelet_analysis(f0, J).flat()
for n in (1e2, 1e4):
    obs = simulate_observation(f0, op, n, seed=1)
    chain = wavelet_posterior_mcmc(spec, obs, MCMCConfig(iters=4000, burn_in=1000), seed=2, J_max=J)
    dist = np.linalg.norm(chain.mean() - truth_wc)
    print(f"n={n:6.0e}: posterior mean is {dist:.4f} from the truth, radii visited {np.unique(chain.dims).tolist()}")
