/*
 * Copyright 2026 The adlis Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <stdexcept>
#include <string>

namespace adlis {

/// Base class for every error raised by the engine. `module()` names the
/// subsystem that raised it so front-ends can report it.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

#define ADLIS_DEFINE_ERROR(Name, Module)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(Module, #Name ": " + what) {} \
  };

// numerics
ADLIS_DEFINE_ERROR(NotPositiveDefinite, "numerics")
ADLIS_DEFINE_ERROR(ShapeMismatch, "numerics")
ADLIS_DEFINE_ERROR(DomainError, "numerics")
ADLIS_DEFINE_ERROR(DimensionUnsupported, "numerics")
// laplace
ADLIS_DEFINE_ERROR(MaxIterationsExceeded, "laplace")
ADLIS_DEFINE_ERROR(NonPositiveCurvature, "laplace")
ADLIS_DEFINE_ERROR(GenericPathUnsupported, "laplace")
// estimators / samplers
ADLIS_DEFINE_ERROR(InvalidEstimatorSpec, "estimators")
ADLIS_DEFINE_ERROR(BadInit, "samplers")
ADLIS_DEFINE_ERROR(IncompatibleMethod, "samplers")
ADLIS_DEFINE_ERROR(NonFiniteGradient, "samplers")
// recovery
ADLIS_DEFINE_ERROR(DegenerateWeights, "recovery")
// diagnostics
ADLIS_DEFINE_ERROR(TooShort, "diagnostics")
ADLIS_DEFINE_ERROR(NonConvergentQuadrature, "diagnostics")

#undef ADLIS_DEFINE_ERROR

}  // namespace adlis
