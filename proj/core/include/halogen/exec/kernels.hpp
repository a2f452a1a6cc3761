//===- kernels.hpp - reference stencil program builders --------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Programmatic builders for the stencil programs the tests and benchmarks
// run: explicit heat diffusion, a second-order acoustic wave update, and a
// plain copy. The spatial derivative is a star-shaped central-difference
// Laplacian whose taps and weights are selected by the order parameter.
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_EXEC_KERNELS_HPP
#define HALOGEN_EXEC_KERNELS_HPP

#include "halogen/exec/buffer.hpp"
#include "halogen/ir/diagnostics.hpp"
#include "halogen/ir/ir.hpp"

#include <memory>
#include <string>
#include <vector>

namespace halogen::exec {

/// What program to build. `kind` is one of "heat", "wave", "copy"; `order`
/// is the discretization order of the Laplacian (2, 4, or 8) and is ignored
/// by "copy"; the iteration domain is [0, extent)^rank.
struct KernelSpec {
  std::string kind = "heat";
  int rank = 2;
  std::int64_t extent = 64;
  int order = 2;
};

/// Star taps of the order-`order` Laplacian, ascending: {1}, {1, 2} or
/// {1, 2, 4}.
std::vector<std::int64_t> laplacianTaps(int order);

/// Weight of the +/-k pair (k a tap) or of the center point (k == 0) for a
/// one-dimensional Laplacian of the given order.
double laplacianWeight(int order, std::int64_t k);

/// Halo width the kernel needs on every face: the largest tap.
std::int64_t haloWidth(const KernelSpec &spec);

/// Builds a verified module holding one time-step function @step whose
/// arguments rotate per step via the module's time-slot groups.
ir::Expected<ir::ModuleOp> buildKernel(const KernelSpec &spec);

/// Allocates and deterministically fills one buffer per field argument of
/// the module's stencil entry function.
std::vector<std::shared_ptr<Buffer>> initialFields(const ir::Operation &module);

} // namespace halogen::exec

#endif // HALOGEN_EXEC_KERNELS_HPP
