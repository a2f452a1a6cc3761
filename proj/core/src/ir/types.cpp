//===- types.cpp - IR type descriptors ------------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/types.hpp"

#include <sstream>

namespace halogen::ir {

const char *scalarName(Scalar s) {
  switch (s) {
  case Scalar::I1:
    return "i1";
  case Scalar::I32:
    return "i32";
  case Scalar::I64:
    return "i64";
  case Scalar::F32:
    return "f32";
  case Scalar::F64:
    return "f64";
  case Scalar::Index:
    return "index";
  }
  return "?";
}

bool isFloatScalar(Scalar s) { return s == Scalar::F32 || s == Scalar::F64; }

bool isIntScalar(Scalar s) {
  return s == Scalar::I1 || s == Scalar::I32 || s == Scalar::I64 ||
         s == Scalar::Index;
}

int scalarByteWidth(Scalar s) {
  switch (s) {
  case Scalar::I1:
    return 1;
  case Scalar::I32:
  case Scalar::F32:
    return 4;
  default:
    return 8;
  }
}

std::int64_t Bounds::numPoints() const {
  std::int64_t n = 1;
  for (const auto &iv : dims)
    n *= iv.size() > 0 ? iv.size() : 0;
  return n;
}

bool Bounds::wellFormed() const {
  if (dims.empty())
    return false;
  for (const auto &iv : dims)
    if (iv.lb >= iv.ub)
      return false;
  return true;
}

bool Bounds::contains(const Bounds &inner) const {
  if (dims.size() != inner.dims.size())
    return false;
  for (size_t d = 0; d < dims.size(); ++d)
    if (!dims[d].containsInterval(inner.dims[d]))
      return false;
  return true;
}

Bounds Bounds::widened(const std::vector<std::int64_t> &lo,
                       const std::vector<std::int64_t> &hi) const {
  Bounds out = *this;
  for (size_t d = 0; d < dims.size(); ++d) {
    out.dims[d].lb -= lo[d];
    out.dims[d].ub += hi[d];
  }
  return out;
}

Bounds Bounds::shifted(const std::vector<std::int64_t> &off) const {
  Bounds out = *this;
  for (size_t d = 0; d < dims.size(); ++d) {
    out.dims[d].lb += off[d];
    out.dims[d].ub += off[d];
  }
  return out;
}

Bounds Bounds::hull(const Bounds &a, const Bounds &b) {
  Bounds out = a;
  for (size_t d = 0; d < out.dims.size(); ++d) {
    out.dims[d].lb = std::min(out.dims[d].lb, b.dims[d].lb);
    out.dims[d].ub = std::max(out.dims[d].ub, b.dims[d].ub);
  }
  return out;
}

std::string Bounds::str() const {
  std::ostringstream os;
  for (size_t d = 0; d < dims.size(); ++d) {
    if (d)
      os << "x";
    os << "[" << dims[d].lb << "," << dims[d].ub << "]";
  }
  return os.str();
}

bool operator==(const FuncType &a, const FuncType &b) {
  return a.ins == b.ins && a.outs == b.outs;
}

Scalar TypeDesc::elemType() const {
  if (const auto *b = dynAs<BufferType>())
    return b->elem;
  if (const auto *f = dynAs<FieldType>())
    return f->elem;
  if (const auto *t = dynAs<TempType>())
    return t->elem;
  return scalar();
}

std::vector<std::int64_t> TypeDesc::allocShape() const {
  if (const auto *b = dynAs<BufferType>())
    return b->shape;
  const auto &f = as<FieldType>();
  std::vector<std::int64_t> shape;
  for (const auto &iv : f.bounds.dims)
    shape.push_back(iv.size());
  return shape;
}

std::string TypeDesc::str() const {
  std::ostringstream os;
  if (isScalar()) {
    os << scalarName(scalar());
  } else if (const auto *b = dynAs<BufferType>()) {
    os << "memref<";
    for (auto d : b->shape)
      os << d << "x";
    os << scalarName(b->elem) << ">";
  } else if (const auto *f = dynAs<FieldType>()) {
    os << "!field<" << f->bounds.str() << "x" << scalarName(f->elem) << ">";
  } else if (const auto *t = dynAs<TempType>()) {
    os << "!temp<" << (t->bounds ? t->bounds->str() : "?") << "x"
       << scalarName(t->elem) << ">";
  } else if (const auto *m = dynAs<MpiType>()) {
    switch (m->kind) {
    case MpiKind::Request:
      os << "!mpi.request";
      break;
    case MpiKind::Status:
      os << "!mpi.status";
      break;
    case MpiKind::Datatype:
      os << "!mpi.datatype";
      break;
    }
  } else if (is<PtrType>()) {
    os << "!llvm.ptr";
  } else {
    const auto &fn = as<FuncType>();
    os << "(";
    for (size_t i = 0; i < fn.ins.size(); ++i)
      os << (i ? ", " : "") << fn.ins[i].str();
    os << ") -> ";
    if (fn.outs.size() == 1) {
      os << fn.outs[0].str();
    } else {
      os << "(";
      for (size_t i = 0; i < fn.outs.size(); ++i)
        os << (i ? ", " : "") << fn.outs[i].str();
      os << ")";
    }
  }
  return os.str();
}

} // namespace halogen::ir
