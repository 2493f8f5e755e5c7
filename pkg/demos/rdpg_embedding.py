"""Embed a random dot product graph and recover its latent positions.

Latent positions are drawn from a flat Dirichlet on the simplex, a graph
is sampled from their inner products, and the adjacency spectral
embedding is aligned back to the truth with Procrustes.
"""

import numpy as np

from lpgoos import (KernelSpec, LatentDistribution, ase, procrustes, sample_graph,
                    sample_latent, select_dimension)

n = 1500
dist = LatentDistribution.dirichlet([1.0, 1.0, 1.0], drop_last=True)
X = sample_latent(dist, n, seed=0)
A = sample_graph(KernelSpec("dot-product"), X, rho=1.0, seed=1)
print("vertices %d, edges %d" % (A.n, A.n_edges))

# two eigenvalues stand clear of the bulk, but the first dominates so much
# that the profile-likelihood elbow stops at one; the true rank is two
emb = ase(A, 2, n_head=20)
print("top eigenvalues:", np.round(emb.spectrum_head[:6], 2))
print("elbow at d =", select_dimension(emb.spectrum_head))

# embeddings are identified only up to an orthogonal transform
W = procrustes(emb.Z, X)
err = np.linalg.norm(emb.Z @ W - X, axis=1)
print("mean aligned error %.4f, worst %.4f" % (err.mean(), err.max()))
