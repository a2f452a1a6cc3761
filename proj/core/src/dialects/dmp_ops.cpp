//===- dmp_ops.cpp - distributed-memory dialect ops ---------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "contracts.hpp"
#include "registration.hpp"

#include "halogen/dialects/dmp.hpp"
#include "halogen/ir/dialect.hpp"

namespace halogen::ir {

using namespace contract;

namespace dmp {

std::int64_t rankFromCoord(const std::vector<std::int64_t> &coord,
                           const std::vector<std::int64_t> &grid) {
  std::int64_t rank = 0;
  for (size_t d = 0; d < grid.size(); ++d)
    rank = rank * grid[d] + coord[d];
  return rank;
}

std::vector<std::int64_t> coordFromRank(std::int64_t rank,
                                        const std::vector<std::int64_t> &grid) {
  std::vector<std::int64_t> coord(grid.size());
  for (size_t d = grid.size(); d-- > 0;) {
    coord[d] = rank % grid[d];
    rank /= grid[d];
  }
  return coord;
}

std::int64_t neighborRank(std::int64_t rank,
                          const std::vector<std::int64_t> &dir,
                          const std::vector<std::int64_t> &grid) {
  std::vector<std::int64_t> coord = coordFromRank(rank, grid);
  for (size_t d = 0; d < grid.size(); ++d) {
    coord[d] += dir[d];
    if (coord[d] < 0 || coord[d] >= grid[d])
      return -1;
  }
  return rankFromCoord(coord, grid);
}

Bounds DecompositionStrategy::localBounds(
    const Bounds &global, const std::vector<std::int64_t> &grid,
    const std::vector<std::int64_t> &coord) const {
  Bounds local;
  for (int d = 0; d < global.rank(); ++d) {
    Interval piece = localInterval(global.size(d), grid[d], coord[d]);
    local.dims.push_back(
        {global.dims[d].lb + piece.lb, global.dims[d].lb + piece.ub});
  }
  return local;
}

std::vector<ExchangeAttr> DecompositionStrategy::exchanges(
    const std::vector<std::int64_t> &coreSize,
    const std::vector<std::int64_t> &haloBelow,
    const std::vector<std::int64_t> &haloAbove,
    const std::vector<std::int64_t> &grid,
    const std::vector<std::int64_t> &coord) const {
  const size_t rank = coreSize.size();
  std::vector<ExchangeAttr> out;
  for (size_t d = 0; d < rank; ++d) {
    for (int sign : {-1, +1}) {
      std::int64_t width = sign < 0 ? haloBelow[d] : haloAbove[d];
      if (width == 0)
        continue;
      if (!coord.empty()) {
        std::vector<std::int64_t> dir(rank, 0);
        dir[d] = sign;
        if (neighborRank(rankFromCoord(coord, grid), dir, grid) < 0)
          continue;
      }
      ExchangeAttr e;
      e.at.resize(rank);
      e.size.resize(rank);
      e.offset.assign(rank, 0);
      e.to.assign(rank, 0);
      for (size_t k = 0; k < rank; ++k) {
        e.at[k] = haloBelow[k]; // core start
        e.size[k] = coreSize[k];
      }
      if (sign < 0) {
        e.at[d] = 0;
        e.size[d] = width;
        e.offset[d] = width;
      } else {
        e.at[d] = haloBelow[d] + coreSize[d];
        e.size[d] = width;
        e.offset[d] = -width;
      }
      e.to[d] = sign;
      out.push_back(std::move(e));
    }
  }
  return out;
}

Interval StandardSlicing::localInterval(std::int64_t extent,
                                        std::int64_t parts,
                                        std::int64_t part) const {
  std::int64_t base = extent / parts;
  std::int64_t rem = extent % parts;
  std::int64_t lb = part * base + std::min(part, rem);
  std::int64_t size = base + (part < rem ? 1 : 0);
  return {lb, lb + size};
}

} // namespace dmp

namespace {

void verifyDmpSwap(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  if (!expectOperands(op, 1, diags) || !op.operands[0])
    return;
  if (!op.operands[0]->type.isBufferLike()) {
    opError(op, diags, "dmp.swap operates on a buffer-like value");
    return;
  }
  std::vector<std::int64_t> shape = op.operands[0]->type.allocShape();
  const size_t rank = shape.size();

  const Attribute *gridA = expectAttr(op, "grid", diags);
  if (gridA) {
    const auto *grid = gridA->dynAs<GridAttr>();
    if (!grid)
      opError(op, diags, "grid must be a #dmp.grid attribute");
    else
      for (std::int64_t g : grid->dims)
        if (g < 1)
          opError(op, diags, "grid dimensions must be at least 1");
  }

  const Attribute *exA = expectAttr(op, "exchanges", diags);
  if (!exA)
    return;
  const auto *arr = exA->dynAs<ArrayAttr>();
  if (!arr) {
    opError(op, diags, "exchanges must be an array of #dmp.exchange");
    return;
  }
  for (const Attribute &a : arr->elems) {
    const auto *e = a.dynAs<ExchangeAttr>();
    if (!e) {
      opError(op, diags, "exchanges must be an array of #dmp.exchange");
      return;
    }
    if (e->at.size() != rank || e->size.size() != rank ||
        e->offset.size() != rank || e->to.size() != rank) {
      opError(op, diags, "exchange rank does not match the buffer rank");
      continue;
    }
    int nonzero = 0;
    for (std::int64_t t : e->to) {
      if (t != 0)
        ++nonzero;
      if (t < -1 || t > 1)
        opError(op, diags, "exchange direction entries must be -1, 0, or 1");
    }
    if (nonzero != 1)
      opError(op, diags,
              "exchange direction must have exactly one nonzero entry");
    for (size_t d = 0; d < rank; ++d) {
      if (e->size[d] < 1)
        opError(op, diags, "exchange region is empty in dimension " +
                               std::to_string(d));
      auto inBuffer = [&](std::int64_t lo) {
        return lo >= 0 && lo + e->size[d] <= shape[d];
      };
      if (!inBuffer(e->at[d]) || !inBuffer(e->at[d] + e->offset[d])) {
        opError(op, diags, "exchange region exceeds the buffer");
        break;
      }
    }
  }
}

} // namespace

void registerDmpOps() {
  auto &reg = DialectRegistry::get();
  reg.registerDialect("dmp");
  reg.registerOp({"dmp.swap", verifyDmpSwap});
}

} // namespace halogen::ir
