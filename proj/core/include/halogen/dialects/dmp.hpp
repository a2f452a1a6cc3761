//===- dmp.hpp - distributed-memory decomposition helpers ------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_DIALECTS_DMP_HPP
#define HALOGEN_DIALECTS_DMP_HPP

#include "halogen/ir/attributes.hpp"
#include "halogen/ir/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace halogen::ir::dmp {

/// Row-major process grid: the last dimension varies fastest.
std::int64_t rankFromCoord(const std::vector<std::int64_t> &coord,
                           const std::vector<std::int64_t> &grid);
std::vector<std::int64_t> coordFromRank(std::int64_t rank,
                                        const std::vector<std::int64_t> &grid);

/// Face neighbor of `rank` one step along `dir` (one nonzero entry, +/-1).
/// Returns -1 when the neighbor falls outside the grid; there is no wrap.
std::int64_t neighborRank(std::int64_t rank,
                          const std::vector<std::int64_t> &dir,
                          const std::vector<std::int64_t> &grid);

/// How a global iteration space is split across a process grid and which
/// halo regions neighboring processes exchange.
class DecompositionStrategy {
public:
  virtual ~DecompositionStrategy() = default;
  virtual std::string name() const = 0;

  /// Piece `part` of [0, extent) split into `parts` consecutive intervals.
  virtual Interval localInterval(std::int64_t extent, std::int64_t parts,
                                 std::int64_t part) const = 0;

  /// Core region owned by `coord`, in global logical coordinates.
  Bounds localBounds(const Bounds &global,
                     const std::vector<std::int64_t> &grid,
                     const std::vector<std::int64_t> &coord) const;

  /// Halo exchange declarations for one local buffer, in buffer-local
  /// zero-based coordinates. The buffer is coreSize[d] + haloBelow[d] +
  /// haloAbove[d] wide per dimension; exchanges cover faces only and are
  /// emitted dimension-major, negative direction before positive. With an
  /// empty `coord` every direction is declared (the template form carried
  /// on dmp.swap); otherwise directions without a neighbor in `grid` are
  /// dropped.
  std::vector<ExchangeAttr>
  exchanges(const std::vector<std::int64_t> &coreSize,
            const std::vector<std::int64_t> &haloBelow,
            const std::vector<std::int64_t> &haloAbove,
            const std::vector<std::int64_t> &grid = {},
            const std::vector<std::int64_t> &coord = {}) const;
};

/// Axis-aligned slicing: dimension d of the global bounds is split into
/// grid[d] consecutive runs, the first (extent mod parts) runs one element
/// longer, so sizes differ by at most one and concatenate exactly.
class StandardSlicing final : public DecompositionStrategy {
public:
  std::string name() const override { return "standard-slicing"; }
  Interval localInterval(std::int64_t extent, std::int64_t parts,
                         std::int64_t part) const override;
};

} // namespace halogen::ir::dmp

#endif // HALOGEN_DIALECTS_DMP_HPP
