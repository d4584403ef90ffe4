"""Bayesian nonparametric PCA.

Collapsed Gibbs sampling of an orthonormal latent factor model with an
Indian buffet process activation prior, plus estimators of the latent
subspace dimension. The heavy lifting lives in the `_bnppca` extension.
"""

from ._bnppca import (
    ChainTrace,
    GroundTruth,
    Hyperparams,
    Rng,
    alignment_scores,
    conditional_mmse_P,
    generate_preset,
    ibp_log_prob,
    k_ks,
    k_mmap,
    match_columns,
    projection_cdf,
    run_chain,
    sample_bingham_sphere,
    sample_ibp,
    sample_sig,
    sample_uniform_stiefel,
    sample_vmf_sphere,
    sig_log_density,
    stiefel_log_volume,
    vmf_log_density,
)

__all__ = [
    "ChainTrace",
    "GroundTruth",
    "Hyperparams",
    "Rng",
    "alignment_scores",
    "conditional_mmse_P",
    "generate_preset",
    "ibp_log_prob",
    "k_ks",
    "k_mmap",
    "match_columns",
    "projection_cdf",
    "run_chain",
    "sample_bingham_sphere",
    "sample_ibp",
    "sample_sig",
    "sample_uniform_stiefel",
    "sample_vmf_sphere",
    "sig_log_density",
    "stiefel_log_volume",
    "vmf_log_density",
]

__version__ = "1.0.0"
