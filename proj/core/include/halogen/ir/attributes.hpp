//===- attributes.hpp - IR attribute values -------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_ATTRIBUTES_HPP
#define HALOGEN_IR_ATTRIBUTES_HPP

#include "halogen/ir/types.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace halogen::ir {

struct Attribute;

/// Integer attribute with a declared width. Index-typed integers print bare.
struct IntAttr {
  std::int64_t value = 0;
  Scalar type = Scalar::Index;
  friend bool operator==(const IntAttr &, const IntAttr &) = default;
};

/// Float attribute. The payload is the raw bit pattern so printing and
/// comparison are exact for every value including NaNs.
struct FloatAttr {
  std::uint64_t bits = 0;
  Scalar type = Scalar::F64;

  static FloatAttr fromDouble(double v);
  static FloatAttr fromFloat(float v);
  double asDouble() const;
  float asFloat() const;
  friend bool operator==(const FloatAttr &, const FloatAttr &) = default;
};

struct StringAttr {
  std::string value;
  friend bool operator==(const StringAttr &, const StringAttr &) = default;
};

struct ArrayAttr {
  std::vector<Attribute> elems;
  friend bool operator==(const ArrayAttr &, const ArrayAttr &);
};

struct TypeAttr {
  TypeDesc type;
  friend bool operator==(const TypeAttr &, const TypeAttr &) = default;
};

/// #dmp.grid<AxBx...>: process grid topology.
struct GridAttr {
  std::vector<std::int64_t> dims;
  friend bool operator==(const GridAttr &, const GridAttr &) = default;
};

/// #dmp.exchange<at [..] size [..] source offset [..] to [..]>.
/// Regions are in buffer-local (allocation-relative, zero-based) coordinates.
/// `at`/`size` describe the receive region; the send region is the same
/// shape displaced by `offset`; `to` is the neighbor direction, exactly one
/// entry in {-1, 0, 1} nonzero.
struct ExchangeAttr {
  std::vector<std::int64_t> at;
  std::vector<std::int64_t> size;
  std::vector<std::int64_t> offset;
  std::vector<std::int64_t> to;
  friend bool operator==(const ExchangeAttr &, const ExchangeAttr &) = default;
};

struct Attribute {
  std::variant<IntAttr, FloatAttr, StringAttr, ArrayAttr, TypeAttr, GridAttr,
               ExchangeAttr>
      kind;

  Attribute() : kind(IntAttr{}) {}
  Attribute(IntAttr a) : kind(a) {}
  Attribute(FloatAttr a) : kind(a) {}
  Attribute(StringAttr a) : kind(std::move(a)) {}
  Attribute(ArrayAttr a) : kind(std::move(a)) {}
  Attribute(TypeAttr a) : kind(std::move(a)) {}
  Attribute(GridAttr a) : kind(std::move(a)) {}
  Attribute(ExchangeAttr a) : kind(std::move(a)) {}

  static Attribute makeIndex(std::int64_t v) {
    return Attribute(IntAttr{v, Scalar::Index});
  }
  static Attribute makeString(std::string s) {
    return Attribute(StringAttr{std::move(s)});
  }
  static Attribute makeIndexArray(const std::vector<std::int64_t> &vs);

  template <typename T> bool is() const {
    return std::holds_alternative<T>(kind);
  }
  template <typename T> const T &as() const { return std::get<T>(kind); }
  template <typename T> const T *dynAs() const {
    return std::get_if<T>(&kind);
  }

  std::string str() const;
  friend bool operator==(const Attribute &, const Attribute &) = default;
};

/// Convenience: read an array-of-index attribute back into a vector.
/// Returns false if the attribute has a different shape.
bool attrToIndexVector(const Attribute &a, std::vector<std::int64_t> &out);

/// Shortest decimal token that parses back to the identical bit pattern.
/// Integer-valued floats get a trailing ".0" so the token stays lexically
/// distinct from integer literals.
std::string formatFloatToken(const FloatAttr &f);

} // namespace halogen::ir

#endif // HALOGEN_IR_ATTRIBUTES_HPP
