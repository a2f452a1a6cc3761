//===- simulator.hpp - deterministic multi-rank executor -------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_EXEC_SIMULATOR_HPP
#define HALOGEN_EXEC_SIMULATOR_HPP

#include "halogen/dialects/mpi.hpp"
#include "halogen/exec/buffer.hpp"
#include "halogen/ir/ir.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace halogen::exec {

/// Geometry of a decomposed module, reconstructed from its process-grid
/// attribute and the embedded pre-decomposition reference module.
struct DecompGeometry {
  std::vector<std::int64_t> grid;
  ir::Bounds domain;
  std::vector<std::int64_t> coreSize;
  std::vector<ir::Bounds> globalBounds;
  std::vector<ir::Bounds> localBounds;
  std::vector<ir::Scalar> elems;
  ir::ModuleOp reference;

  std::int64_t ranks() const;
  /// Core region owned by `coord`, in global logical coordinates.
  ir::Bounds coreOf(const std::vector<std::int64_t> &coord) const;
};

ir::Expected<DecompGeometry> geometryOf(const ir::Operation &module);

/// Local buffers for one rank: every cell of each local field is filled
/// from the matching global cell (cores and halos alike, so boundary halos
/// start with the same data the undecomposed program sees).
std::vector<std::shared_ptr<Buffer>>
scatterRank(const DecompGeometry &g,
            const std::vector<std::shared_ptr<Buffer>> &globalInit,
            std::int64_t rank);

/// Copy the core region owned by `rank` from its local buffers into the
/// global buffers (one per field, shaped like the global fields).
void gatherRank(const DecompGeometry &g, std::int64_t rank,
                const std::vector<std::shared_ptr<Buffer>> &local,
                std::vector<std::shared_ptr<Buffer>> &globalOut);

struct SimOptions {
  std::int64_t timesteps = 1;
  std::uint64_t seed = 0;
  ir::mpi::AbiTable abi = ir::mpi::AbiTable::standard();
};

struct SimResult {
  bool ok = false;
  /// Deadlock or trap report; empty on success.
  std::string error;
  /// Gathered global fields in final binding order.
  std::vector<std::shared_ptr<Buffer>> fields;
  /// Dynamic op counts summed over the ranks.
  std::map<std::string, std::int64_t> opCounts;
  std::vector<std::map<std::string, std::int64_t>> rankOpCounts;
};

/// Run a decomposed module on every rank of its process grid over an
/// in-memory transport, one rank at a time under a seeded cooperative
/// scheduler, then gather the cores. The module's lowering level is
/// detected from its contents: a "run" function is invoked once with the
/// step count, otherwise the step function is re-invoked per step with
/// halo swaps executed natively. Message matching has no wildcards, so the
/// gathered result is independent of the seed.
SimResult simulate(ir::Operation &module,
                   const std::vector<std::shared_ptr<Buffer>> &globalInit,
                   const SimOptions &opts);

} // namespace halogen::exec

#endif // HALOGEN_EXEC_SIMULATOR_HPP
