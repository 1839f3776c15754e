"""Finite-sample certificates for Laplace approximations of generalized posteriors.

Given a model (log-likelihood, log-prior and constant oracles) the package
locates the likelihood and posterior modes, certifies the regularity
constants on balls around them, and evaluates explicit bounds on the total
variation and Wasserstein-1 distances and on the mean and covariance errors
between the posterior and its Gaussian (Laplace) approximation.
"""
from .errors import (AssumptionViolation, CertificateError, CurvatureError, InfeasibleRadius,
                     ModeNotFound, OracleUnavailable)
from .model import FAMILIES, ModelDescriptor, build_model
from .geometry import Geometry, analyze, curvature, find_mode, shifted_pair
from .certificates import (AssumptionReport, ConstantOracle, ConstantSet, GridOptions,
                           feasible_radius_interval, optimize_radii, verify_assumptions)
from .bounds import (BoundReport, BoundValue, credible_adjust, effective_dimension, fisher_cap,
                     univariate_stein_bound)
from .pipeline import Certificate, CertifyOptions, certify, is_certifiable
from .oracle import PosteriorTruth, importance_truth_md, quadrature_truth_1d

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport", "AssumptionViolation", "BoundReport", "BoundValue", "Certificate",
    "CertificateError", "CertifyOptions", "ConstantOracle", "ConstantSet", "CurvatureError",
    "FAMILIES", "Geometry", "GridOptions", "InfeasibleRadius", "ModeNotFound", "ModelDescriptor",
    "OracleUnavailable", "PosteriorTruth", "analyze", "build_model", "certify", "credible_adjust",
    "curvature", "effective_dimension", "feasible_radius_interval", "find_mode", "fisher_cap",
    "importance_truth_md", "is_certifiable", "optimize_radii", "quadrature_truth_1d",
    "shifted_pair", "univariate_stein_bound", "verify_assumptions",
]
