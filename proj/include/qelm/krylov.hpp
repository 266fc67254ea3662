#pragma once

#include <functional>

#include "qelm/tensor.hpp"

namespace qelm {

/// Linear map H acting on tensors of a fixed shape. Lanczos assumes H is Hermitian.
using LinearMap = std::function<DenseTensor(const DenseTensor&)>;

struct KrylovOptions {
  int krylov_dim = 25;
  /// Bound on the estimated 2-norm error of the result, relative to ||v||.
  double tol = 1e-10;
  /// Substep budget when one Krylov space cannot cover the whole prefactor.
  int max_substeps = 256;
};

struct KrylovResult {
  DenseTensor state;
  bool converged = true;
  int substeps = 0;
  int matvecs = 0;
  double error_estimate = 0.0;
};

/// exp(prefactor * H) v by Lanczos projection.
///
/// When the residual estimate of a single m-dimensional space exceeds `tol`,
/// the prefactor is split into substeps (each with a fresh Krylov space) in
/// the manner of Expokit. `converged` is false only if the substep budget is
/// exhausted; the returned state is then the best available estimate.
KrylovResult krylov_expm_apply(const LinearMap& apply_h, const DenseTensor& v, cplx prefactor,
                               const KrylovOptions& options = {});

}  // namespace qelm
