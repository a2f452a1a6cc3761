//===- types.hpp - IR type descriptors ------------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_TYPES_HPP
#define HALOGEN_IR_TYPES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace halogen::ir {

enum class Scalar { I1, I32, I64, F32, F64, Index };

const char *scalarName(Scalar s);
bool isFloatScalar(Scalar s);
bool isIntScalar(Scalar s);
/// Storage size of one element in bytes (index is 64-bit signed).
int scalarByteWidth(Scalar s);

/// One half-open interval [lb, ub). lb < ub is enforced by the verifier,
/// not the constructor, so partially-built bounds can exist transiently.
struct Interval {
  std::int64_t lb = 0;
  std::int64_t ub = 0;

  std::int64_t size() const { return ub - lb; }
  bool contains(std::int64_t p) const { return p >= lb && p < ub; }
  bool containsInterval(const Interval &o) const {
    return o.lb >= lb && o.ub <= ub;
  }
  friend bool operator==(const Interval &, const Interval &) = default;
};

/// Per-dimension half-open bounds. Rank is the number of dimensions.
struct Bounds {
  std::vector<Interval> dims;

  Bounds() = default;
  explicit Bounds(std::vector<Interval> d) : dims(std::move(d)) {}

  int rank() const { return static_cast<int>(dims.size()); }
  std::int64_t size(int d) const { return dims[d].size(); }
  std::int64_t numPoints() const;
  bool wellFormed() const;
  bool contains(const Bounds &inner) const;
  /// Widen by per-dimension amounts: [lb - lo[d], ub + hi[d]).
  Bounds widened(const std::vector<std::int64_t> &lo,
                 const std::vector<std::int64_t> &hi) const;
  /// Translate every interval by off[d].
  Bounds shifted(const std::vector<std::int64_t> &off) const;
  /// Interval hull of two bounds of equal rank.
  static Bounds hull(const Bounds &a, const Bounds &b);

  std::string str() const;
  friend bool operator==(const Bounds &, const Bounds &) = default;
};

struct TypeDesc;

/// memref-style buffer: raw zero-based indexing, row-major layout.
struct BufferType {
  Scalar elem = Scalar::F64;
  std::vector<std::int64_t> shape;
  friend bool operator==(const BufferType &, const BufferType &) = default;
};

/// stencil field: a buffer addressed by logical (possibly negative)
/// coordinates carried in the type.
struct FieldType {
  Scalar elem = Scalar::F64;
  Bounds bounds;
  friend bool operator==(const FieldType &, const FieldType &) = default;
};

/// stencil temp: value-semantics intermediate. Bounds may be deferred
/// (printed "?") until bounds propagation runs.
struct TempType {
  Scalar elem = Scalar::F64;
  std::optional<Bounds> bounds;
  friend bool operator==(const TempType &, const TempType &) = default;
};

enum class MpiKind { Request, Status, Datatype };

struct MpiType {
  MpiKind kind = MpiKind::Request;
  friend bool operator==(const MpiType &, const MpiType &) = default;
};

/// Opaque pointer (!llvm.ptr). Produced only by pointer-extraction ops.
struct PtrType {
  friend bool operator==(const PtrType &, const PtrType &) = default;
};

struct FuncType {
  std::vector<TypeDesc> ins;
  std::vector<TypeDesc> outs;
  friend bool operator==(const FuncType &, const FuncType &);
};

struct TypeDesc {
  std::variant<Scalar, BufferType, FieldType, TempType, MpiType, PtrType,
               FuncType>
      kind;

  TypeDesc() : kind(Scalar::F64) {}
  TypeDesc(Scalar s) : kind(s) {}
  TypeDesc(BufferType t) : kind(std::move(t)) {}
  TypeDesc(FieldType t) : kind(std::move(t)) {}
  TypeDesc(TempType t) : kind(std::move(t)) {}
  TypeDesc(MpiType t) : kind(t) {}
  TypeDesc(PtrType t) : kind(t) {}
  TypeDesc(FuncType t) : kind(std::move(t)) {}

  bool isScalar() const { return std::holds_alternative<Scalar>(kind); }
  bool isScalar(Scalar s) const {
    return isScalar() && std::get<Scalar>(kind) == s;
  }
  bool isInt() const { return isScalar() && isIntScalar(scalar()); }
  bool isFloat() const { return isScalar() && isFloatScalar(scalar()); }
  Scalar scalar() const { return std::get<Scalar>(kind); }

  template <typename T> bool is() const {
    return std::holds_alternative<T>(kind);
  }
  template <typename T> const T &as() const { return std::get<T>(kind); }
  template <typename T> T &as() { return std::get<T>(kind); }
  template <typename T> const T *dynAs() const {
    return std::get_if<T>(&kind);
  }

  /// Buffer-like types have storage: BufferType and FieldType.
  bool isBufferLike() const { return is<BufferType>() || is<FieldType>(); }
  /// Element type of a buffer-like or temp type.
  Scalar elemType() const;
  /// Allocation shape of a buffer-like type (field shape from bounds).
  std::vector<std::int64_t> allocShape() const;

  std::string str() const;
  friend bool operator==(const TypeDesc &, const TypeDesc &) = default;
};

} // namespace halogen::ir

#endif // HALOGEN_IR_TYPES_HPP
