#
# Copyright 2026 The adlis Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""Laplace-based importance sampling for latent Gaussian models."""

from ._adlis import (
    BadInit,
    DegenerateWeights,
    DimensionUnsupported,
    DomainError,
    Error,
    GenericPathUnsupported,
    IncompatibleMethod,
    InvalidEstimatorSpec,
    MaxIterationsExceeded,
    Model,
    NonConvergentQuadrature,
    NonPositiveCurvature,
    NotPositiveDefinite,
    ShapeMismatch,
    TooShort,
    ess,
    evaluate,
    evaluate_pm,
    evaluate_rqmc,
    fit_laplace,
    latent_posterior_cdf,
    make_model,
    quadrature_marginal,
    sample,
    sample_index,
    sobol_points,
    u_grid_scan,
)

__version__ = "0.1.0"
