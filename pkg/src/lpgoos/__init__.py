"""Latent position graphs: simulation, spectral embedding and out-of-sample extension."""

from .errors import (ClusteringError, ConfigurationError, DegenerateLabelsError,
                     DegenerateSpectrumError, DomainError, IndefiniteSpectrumError,
                     IngestionError, LpgoosError, NumericalError, ProvenanceError)
from .inference import (GmmModel, LinearClassifier, OneVsRestClassifier, PermutationReport,
                        adjusted_rand_index, fit_gmm, fit_linear, fit_one_vs_rest,
                        misclassification_rate, permutation_test_ari, predict)
from .kernels import (EmpiricalFeatureMap, KernelSpec, build_empirical_feature_map,
                      eval_kernel, feature_map_at, kernel_block, kernel_matrix)
from .lpgraph import (Adjacency, LatentDistribution, LatentSample, SparsityWarning,
                      check_sparsity, quadrant_labels, read_edge_list, sample_adjacency,
                      sample_graph, sample_latent, sample_oos_connections,
                      sample_oos_connections_batch, sparsity_schedule, write_edge_list)
from .oos import (NystromSketch, OosResult, nystrom_reconstruct, nystrom_sketch, oos_embed,
                  oos_embed_batch)
from .spectral import (Embedding, EigenPairs, ase, procrustes, select_dimension,
                       spectral_norm, top_eigenpairs)
from .verify import (BoundReport, RateCurve, check_concentration, concentration_bound,
                     error_curves, implied_constant, insample_error_curve, oos_error_curve,
                     projection_difference, rate_exponent)

__version__ = "0.1.0"
