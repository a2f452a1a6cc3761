//===- attributes.cpp - IR attribute values --------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/attributes.hpp"

#include <charconv>
#include <cstring>
#include <sstream>

namespace halogen::ir {

FloatAttr FloatAttr::fromDouble(double v) {
  FloatAttr a;
  a.type = Scalar::F64;
  std::memcpy(&a.bits, &v, sizeof v);
  return a;
}

FloatAttr FloatAttr::fromFloat(float v) {
  FloatAttr a;
  a.type = Scalar::F32;
  std::uint32_t b32;
  std::memcpy(&b32, &v, sizeof v);
  a.bits = b32;
  return a;
}

double FloatAttr::asDouble() const {
  double v;
  std::uint64_t b = bits;
  std::memcpy(&v, &b, sizeof v);
  return v;
}

float FloatAttr::asFloat() const {
  float v;
  std::uint32_t b = static_cast<std::uint32_t>(bits);
  std::memcpy(&v, &b, sizeof v);
  return v;
}

Attribute Attribute::makeIndexArray(const std::vector<std::int64_t> &vs) {
  ArrayAttr arr;
  for (auto v : vs)
    arr.elems.push_back(makeIndex(v));
  return Attribute(std::move(arr));
}

bool operator==(const ArrayAttr &a, const ArrayAttr &b) {
  return a.elems == b.elems;
}

namespace {

void printIntList(std::ostringstream &os, const std::vector<std::int64_t> &vs) {
  os << "[";
  for (size_t i = 0; i < vs.size(); ++i)
    os << (i ? "," : "") << vs[i];
  os << "]";
}

} // namespace

std::string formatFloatToken(const FloatAttr &f) {
  // Shortest decimal form that parses back to the identical bit pattern.
  char buf[64];
  std::to_chars_result r{};
  if (f.type == Scalar::F32)
    r = std::to_chars(buf, buf + sizeof buf, f.asFloat());
  else
    r = std::to_chars(buf, buf + sizeof buf, f.asDouble());
  std::string s(buf, r.ptr);
  // Keep float tokens lexically distinct from integers.
  if (s.find_first_of(".eEnif") == std::string::npos)
    s += ".0";
  return s;
}

std::string Attribute::str() const {
  std::ostringstream os;
  if (const auto *i = dynAs<IntAttr>()) {
    os << i->value;
    if (i->type != Scalar::Index)
      os << " : " << scalarName(i->type);
  } else if (const auto *f = dynAs<FloatAttr>()) {
    os << formatFloatToken(*f) << " : " << scalarName(f->type);
  } else if (const auto *s = dynAs<StringAttr>()) {
    os << '"';
    for (char c : s->value) {
      switch (c) {
      case '"':
        os << "\\\"";
        break;
      case '\\':
        os << "\\\\";
        break;
      case '\n':
        os << "\\n";
        break;
      case '\t':
        os << "\\t";
        break;
      default:
        os << c;
      }
    }
    os << '"';
  } else if (const auto *a = dynAs<ArrayAttr>()) {
    os << "[";
    for (size_t i = 0; i < a->elems.size(); ++i)
      os << (i ? ", " : "") << a->elems[i].str();
    os << "]";
  } else if (const auto *t = dynAs<TypeAttr>()) {
    os << t->type.str();
  } else if (const auto *g = dynAs<GridAttr>()) {
    os << "#dmp.grid<";
    for (size_t i = 0; i < g->dims.size(); ++i)
      os << (i ? "x" : "") << g->dims[i];
    os << ">";
  } else if (const auto *e = dynAs<ExchangeAttr>()) {
    os << "#dmp.exchange<at ";
    printIntList(os, e->at);
    os << " size ";
    printIntList(os, e->size);
    os << " source offset ";
    printIntList(os, e->offset);
    os << " to ";
    printIntList(os, e->to);
    os << ">";
  }
  return os.str();
}

bool attrToIndexVector(const Attribute &a, std::vector<std::int64_t> &out) {
  const auto *arr = a.dynAs<ArrayAttr>();
  if (!arr)
    return false;
  out.clear();
  for (const auto &e : arr->elems) {
    const auto *i = e.dynAs<IntAttr>();
    if (!i)
      return false;
    out.push_back(i->value);
  }
  return true;
}

} // namespace halogen::ir
