"""Threshold-free sparsification and homology inference for manifold samples."""

from .complex import (ComplexTooLarge, FilteredCliqueComplex, ZeroLnfs, adaptive_rips,
                      build_single_scale_complex, build_two_scale_complex, edge_scale,
                      vietoris_rips)
from .geometry import (DimensionMismatch, DuplicatePointsWarning, EmptyCloud, PointCloud,
                       SpatialIndex, SubspaceBasis, ZeroVector, ball_is_empty, build_index,
                       load_points, nearest_neighbor, principal_angle, save_points,
                       vector_subspace_angle)
from .homology import (BoundaryMatrix, ImageRankResult, MissingFace, betti_numbers,
                       boundary_matrix, persistent_image_rank)
from .lean import (EmptyLeanSet, LeanPoint, LeanSet, MissingNormal, OutOfRange, build_lean_set,
                   build_reduced_lean_set, c_beta, is_beta_good, lean_feature_size,
                   lean_feature_sizes, noise_filter, reduce_lean_set)
from .pipeline import (ConfigError, InferenceReport, PipelineConfig, h_scaled_diagnostic,
                       lean_topo, theory_rho)
from .samplers import (UnderSampled, add_normal_noise, sample_circle, sample_helix_loop,
                       sample_neck_curve, sample_sphere, sample_torus)
from .sparsify import (MissingLnfs, SparseSample, UniformityReport, lean_sparsify,
                       verify_uniformity)
from .tangent import (InsufficientCandidates, TangentEstimate, estimate_all_normals,
                      estimate_tangent_basis)

__version__ = "0.1.0"
