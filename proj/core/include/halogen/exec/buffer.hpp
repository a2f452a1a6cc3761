//===- buffer.hpp - runtime storage for buffer-like values ----*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_EXEC_BUFFER_HPP
#define HALOGEN_EXEC_BUFFER_HPP

#include "halogen/ir/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace halogen::exec {

/// Runtime storage behind one buffer-like SSA value: row-major elements
/// plus the logical lower bound carried by field types. Plain memrefs keep
/// an all-zero lower bound; element access is always by raw (zero-based)
/// flat index, logical coordinates are translated by the caller.
struct Buffer {
  ir::Scalar elem = ir::Scalar::F64;
  std::vector<std::int64_t> shape;
  std::vector<std::int64_t> lb;
  std::vector<unsigned char> data;

  static std::shared_ptr<Buffer> make(ir::Scalar elem,
                                      std::vector<std::int64_t> shape,
                                      std::vector<std::int64_t> lb = {});
  static std::shared_ptr<Buffer> forBounds(ir::Scalar elem,
                                           const ir::Bounds &bounds);
  std::shared_ptr<Buffer> clone() const;

  int rank() const { return static_cast<int>(shape.size()); }
  std::int64_t count() const;
  int elemWidth() const;
  ir::Bounds bounds() const;

  /// Row-major flat index of a raw coordinate; no range check.
  std::int64_t flatIndex(const std::vector<std::int64_t> &raw) const;
  bool rawInBounds(const std::vector<std::int64_t> &raw) const;

  double getF64(std::int64_t i) const;
  void setF64(std::int64_t i, double v);
  float getF32(std::int64_t i) const;
  void setF32(std::int64_t i, float v);
  std::int64_t getInt(std::int64_t i) const;
  void setInt(std::int64_t i, std::int64_t v);

  /// Copy element `srcIdx` of `src` over element `dstIdx`; element types
  /// must match.
  void copyElem(std::int64_t dstIdx, const Buffer &src, std::int64_t srcIdx);
};

/// Deterministic initializer: a fixed 64-bit mix of the field index and
/// the global logical coordinate, mapped into [0, 1).
double initValue(int fieldIdx, const std::vector<std::int64_t> &coord);

/// Fill every element from initValue using the buffer's own logical bounds.
void fillInit(Buffer &b, int fieldIdx);

/// FNV-1a fingerprint of the raw element bytes.
std::uint64_t fingerprint(const Buffer &b);

bool bitwiseEqual(const Buffer &a, const Buffer &b);

/// Elementwise |a-b| <= tol for float buffers (exact equality for ints).
/// On failure `firstDiff` names the first differing flat index and values.
bool approxEqual(const Buffer &a, const Buffer &b, double tol,
                 std::string &firstDiff);

} // namespace halogen::exec

#endif // HALOGEN_EXEC_BUFFER_HPP
