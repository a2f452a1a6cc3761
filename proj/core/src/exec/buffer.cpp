//===- buffer.cpp - runtime storage for buffer-like values ---------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/exec/buffer.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace halogen::exec {

using ir::Bounds;
using ir::Interval;
using ir::Scalar;

std::shared_ptr<Buffer> Buffer::make(Scalar elem,
                                     std::vector<std::int64_t> shape,
                                     std::vector<std::int64_t> lb) {
  auto b = std::make_shared<Buffer>();
  b->elem = elem;
  b->shape = std::move(shape);
  b->lb = lb.empty() ? std::vector<std::int64_t>(b->shape.size(), 0)
                     : std::move(lb);
  std::int64_t n = 1;
  for (std::int64_t s : b->shape)
    n *= s;
  b->data.assign(static_cast<std::size_t>(n * b->elemWidth()), 0);
  return b;
}

std::shared_ptr<Buffer> Buffer::forBounds(Scalar elem, const Bounds &bounds) {
  std::vector<std::int64_t> shape, lb;
  for (const Interval &iv : bounds.dims) {
    shape.push_back(iv.size());
    lb.push_back(iv.lb);
  }
  return make(elem, std::move(shape), std::move(lb));
}

std::shared_ptr<Buffer> Buffer::clone() const {
  return std::make_shared<Buffer>(*this);
}

std::int64_t Buffer::count() const {
  std::int64_t n = 1;
  for (std::int64_t s : shape)
    n *= s;
  return n;
}

int Buffer::elemWidth() const { return ir::scalarByteWidth(elem); }

Bounds Buffer::bounds() const {
  Bounds b;
  for (std::size_t d = 0; d < shape.size(); ++d)
    b.dims.push_back({lb[d], lb[d] + shape[d]});
  return b;
}

std::int64_t Buffer::flatIndex(const std::vector<std::int64_t> &raw) const {
  std::int64_t idx = 0;
  for (std::size_t d = 0; d < shape.size(); ++d)
    idx = idx * shape[d] + raw[d];
  return idx;
}

bool Buffer::rawInBounds(const std::vector<std::int64_t> &raw) const {
  if (raw.size() != shape.size())
    return false;
  for (std::size_t d = 0; d < shape.size(); ++d)
    if (raw[d] < 0 || raw[d] >= shape[d])
      return false;
  return true;
}

double Buffer::getF64(std::int64_t i) const {
  double v;
  std::memcpy(&v, data.data() + i * 8, 8);
  return v;
}

void Buffer::setF64(std::int64_t i, double v) {
  std::memcpy(data.data() + i * 8, &v, 8);
}

float Buffer::getF32(std::int64_t i) const {
  float v;
  std::memcpy(&v, data.data() + i * 4, 4);
  return v;
}

void Buffer::setF32(std::int64_t i, float v) {
  std::memcpy(data.data() + i * 4, &v, 4);
}

std::int64_t Buffer::getInt(std::int64_t i) const {
  switch (elemWidth()) {
  case 1:
    return static_cast<std::int64_t>(data[static_cast<std::size_t>(i)]);
  case 4: {
    std::int32_t v;
    std::memcpy(&v, data.data() + i * 4, 4);
    return v;
  }
  default: {
    std::int64_t v;
    std::memcpy(&v, data.data() + i * 8, 8);
    return v;
  }
  }
}

void Buffer::setInt(std::int64_t i, std::int64_t v) {
  switch (elemWidth()) {
  case 1:
    data[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v & 1);
    break;
  case 4: {
    auto t = static_cast<std::int32_t>(v);
    std::memcpy(data.data() + i * 4, &t, 4);
    break;
  }
  default:
    std::memcpy(data.data() + i * 8, &v, 8);
  }
}

void Buffer::copyElem(std::int64_t dstIdx, const Buffer &src,
                      std::int64_t srcIdx) {
  int w = elemWidth();
  std::memcpy(data.data() + dstIdx * w, src.data.data() + srcIdx * w,
              static_cast<std::size_t>(w));
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

} // namespace

double initValue(int fieldIdx, const std::vector<std::int64_t> &coord) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(fieldIdx) + 1);
  for (std::int64_t c : coord)
    h = mix64(h ^ static_cast<std::uint64_t>(c));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void fillInit(Buffer &b, int fieldIdx) {
  int r = b.rank();
  std::vector<std::int64_t> raw(static_cast<std::size_t>(r), 0);
  std::vector<std::int64_t> coord(static_cast<std::size_t>(r), 0);
  std::int64_t n = b.count();
  for (std::int64_t i = 0; i < n; ++i) {
    for (int d = 0; d < r; ++d)
      coord[d] = b.lb[d] + raw[d];
    double v = initValue(fieldIdx, coord);
    if (b.elem == Scalar::F32)
      b.setF32(i, static_cast<float>(v));
    else if (b.elem == Scalar::F64)
      b.setF64(i, v);
    else
      b.setInt(i, static_cast<std::int64_t>(v * 1000.0));
    for (int d = r - 1; d >= 0; --d) {
      if (++raw[d] < b.shape[d])
        break;
      raw[d] = 0;
    }
  }
}

std::uint64_t fingerprint(const Buffer &b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : b.data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

bool bitwiseEqual(const Buffer &a, const Buffer &b) {
  return a.elem == b.elem && a.shape == b.shape && a.data == b.data;
}

bool approxEqual(const Buffer &a, const Buffer &b, double tol,
                 std::string &firstDiff) {
  if (a.elem != b.elem || a.shape != b.shape) {
    firstDiff = "shape or element type mismatch";
    return false;
  }
  std::int64_t n = a.count();
  for (std::int64_t i = 0; i < n; ++i) {
    double av, bv;
    if (a.elem == Scalar::F64) {
      av = a.getF64(i);
      bv = b.getF64(i);
    } else if (a.elem == Scalar::F32) {
      av = a.getF32(i);
      bv = b.getF32(i);
    } else {
      if (a.getInt(i) != b.getInt(i)) {
        std::ostringstream os;
        os << "element " << i << ": " << a.getInt(i) << " vs " << b.getInt(i);
        firstDiff = os.str();
        return false;
      }
      continue;
    }
    if (!(std::fabs(av - bv) <= tol)) {
      std::ostringstream os;
      os.precision(17);
      os << "element " << i << ": " << av << " vs " << bv;
      firstDiff = os.str();
      return false;
    }
  }
  return true;
}

} // namespace halogen::exec
