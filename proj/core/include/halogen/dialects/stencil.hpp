//===- stencil.hpp - stencil dialect helpers --------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_DIALECTS_STENCIL_HPP
#define HALOGEN_DIALECTS_STENCIL_HPP

#include "halogen/ir/ir.hpp"

#include <cstdint>
#include <vector>

namespace halogen::ir::stencil {

/// Per-dimension hull of the relative offsets one apply operand is read at.
/// Both vectors have the apply's rank; an operand that is never accessed
/// hulls to all zeros.
struct AccessExtent {
  std::vector<std::int64_t> lo; // most negative offset per dim (<= 0)
  std::vector<std::int64_t> hi; // most positive offset per dim (>= 0)

  /// Halo widths implied by the extent: points read below/above the core.
  std::vector<std::int64_t> haloBelow() const;
  std::vector<std::int64_t> haloAbove() const;

  friend bool operator==(const AccessExtent &, const AccessExtent &) = default;
};

/// Scan the apply body for stencil.access ops reading region argument
/// `argIdx` and hull their offsets. `rank` supplies the extent rank when
/// the operand is never accessed.
AccessExtent inferAccessExtent(const Operation &applyOp, int argIdx, int rank);

/// Rank of an apply op: the rank of its first result's bounds when known,
/// otherwise of the first operand temp with known bounds, otherwise -1.
int applyRank(const Operation &applyOp);

} // namespace halogen::ir::stencil

#endif // HALOGEN_DIALECTS_STENCIL_HPP
