"""How a prior over subset sizes reshapes a DPP.

Run with ``python demos/01_size_priors.py``.
"""
import numpy as np

from seqgdpp import GDPP
from seqgdpp.kernel import log_prob_ensemble, marginal_kernel

rng = np.random.default_rng(0)

# Six items in 2-d; nearby items are similar, so the DPP avoids picking both.
X = rng.normal(size=(6, 2))
L = np.exp(-0.5 * np.sum((X[:, None] - X[None]) ** 2, axis=-1))
print("L-ensemble kernel:\n", np.round(L, 3))

# A plain DPP has an implicit size distribution set by the eigenvalues.
dpp = GDPP(L, np.ones(7))
print("\nsize distribution of the plain DPP:", np.round(dpp.mixture_weights, 3))
print("expected size from trace(K):", round(float(np.trace(marginal_kernel(L))), 3))

# Pin the size to three: the model becomes a 3-DPP.
k3 = GDPP(L, np.eye(7)[3])
print("\nsize distribution with a Dirac prior at 3:", np.round(k3.mixture_weights, 3))

# A bump around 2 trades off the prior against the eigenvalue sums.
prior = np.exp(-((np.arange(7) - 2.0) ** 2))
bump = GDPP(L, prior)
print("size distribution with a bump at 2:", np.round(bump.mixture_weights, 3))

# Same subset, three different probabilities.
y = [0, 3]
print(f"\nP({y}):  DPP {np.exp(log_prob_ensemble(L, y)):.4f}  "
      f"3-DPP {np.exp(k3.log_prob(y)):.4f}  bump {np.exp(bump.log_prob(y)):.4f}")

# Two-phase sampling: draw a size from the mixture weights, then a k-DPP.
draws = bump.sample_many(20_000, rng)
sizes = np.bincount([len(d) for d in draws], minlength=7) / len(draws)
print("\nempirical sizes:", np.round(sizes, 3))
print("exact sizes:    ", np.round(bump.mixture_weights, 3))
