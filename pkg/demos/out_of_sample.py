"""Place new vertices into an existing embedding without re-embedding.

A graph on 1000 vertices is embedded once. Another 200 vertices arrive
later with only their edges to the original vertices known; each is
placed by least squares against the in-sample configuration. The result
is compared with embedding all 1200 vertices from scratch.
"""

import numpy as np

from lpgoos import (KernelSpec, LatentDistribution, ase, oos_embed_batch, procrustes,
                    sample_graph, sample_latent, sample_oos_connections_batch)

spec = KernelSpec("dot-product")
dist = LatentDistribution.dirichlet([1.0, 1.0, 1.0], drop_last=True)
X = sample_latent(dist, 1000, seed=0)
X_new = sample_latent(dist, 200, seed=1)

A = sample_graph(spec, X, rho=1.0, seed=2)
emb = ase(A, 2)

# column j holds the edges from new vertex j to the 1000 in-sample vertices
B = sample_oos_connections_batch(X_new, X, spec, rho=1.0, seed=3)
T = oos_embed_batch(emb, B)

W = procrustes(emb.Z, X)
in_err = np.linalg.norm(emb.Z @ W - X, axis=1).mean()
out_err = np.linalg.norm(T @ W - X_new, axis=1).mean()
print("in-sample mean error      %.4f" % in_err)
print("out-of-sample mean error  %.4f" % out_err)
