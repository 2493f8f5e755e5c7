"""Low-rank reconstruction of a kernel matrix from a sampled block.

Only the columns indexed by a random subset S are touched. The sketch
rebuilds the whole matrix from those columns and the rank-d part of the
S-by-S block.
"""

import numpy as np

from lpgoos import KernelSpec, LatentDistribution, kernel_matrix, nystrom_reconstruct, \
    nystrom_sketch, sample_latent

X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 800, seed=0)
K = kernel_matrix(KernelSpec("gaussian", sigma=1.0), X)
rng = np.random.default_rng(1)

for m in (10, 25, 50, 100):
    S = np.sort(rng.choice(800, size=m, replace=False))
    for d in (3, 6):
        R = nystrom_reconstruct(nystrom_sketch(K, S, min(d, m)))
        rel = np.linalg.norm(R - K) / np.linalg.norm(K)
        print("m=%4d d=%d  relative Frobenius error %.2e" % (m, d, rel))
