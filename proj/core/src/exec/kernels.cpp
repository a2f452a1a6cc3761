//===- kernels.cpp - reference stencil program builders -------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/exec/kernels.hpp"

#include "halogen/ir/verifier.hpp"

#include "../dialects/lowering_common.hpp"

namespace halogen::exec {

using ir::ArrayAttr;
using ir::Attribute;
using ir::Bounds;
using ir::Diagnostic;
using ir::Expected;
using ir::FieldType;
using ir::FloatAttr;
using ir::FuncType;
using ir::ModuleOp;
using ir::Operation;
using ir::Region;
using ir::Scalar;
using ir::TempType;
using ir::TypeAttr;
using ir::TypeDesc;
using ir::Value;
using ir::lowering::Builder;

std::vector<std::int64_t> laplacianTaps(int order) {
  switch (order) {
  case 2:
    return {1};
  case 4:
    return {1, 2};
  case 8:
    return {1, 2, 4};
  default:
    return {};
  }
}

double laplacianWeight(int order, std::int64_t k) {
  // Central-difference weights; the +/-k pair shares one weight. Derived
  // from the Taylor conditions sum(k^2 w) = 1, sum(k^4 w) = 0 (order >= 4),
  // sum(k^6 w) = 0 (order 8) over the taps above.
  switch (order) {
  case 2:
    if (k == 0)
      return -2.0;
    if (k == 1)
      return 1.0;
    break;
  case 4:
    if (k == 0)
      return -5.0 / 2.0;
    if (k == 1)
      return 4.0 / 3.0;
    if (k == 2)
      return -1.0 / 12.0;
    break;
  case 8:
    if (k == 0)
      return -21.0 / 8.0;
    if (k == 1)
      return 64.0 / 45.0;
    if (k == 2)
      return -1.0 / 9.0;
    if (k == 4)
      return 1.0 / 720.0;
    break;
  default:
    break;
  }
  return 0.0;
}

std::int64_t haloWidth(const KernelSpec &spec) {
  if (spec.kind == "copy")
    return 0;
  auto taps = laplacianTaps(spec.order);
  return taps.empty() ? 0 : taps.back();
}

namespace {

Diagnostic specError(const std::string &msg) {
  Diagnostic d;
  d.message = msg;
  return d;
}

Value *cF64(Builder &b, double v) {
  Operation *op = b.op("arith.constant", {}, {TypeDesc(Scalar::F64)});
  op->setAttr("value", Attribute(FloatAttr::fromDouble(v)));
  return Builder::res(op);
}

Value *access(Builder &b, Value *temp, const std::vector<std::int64_t> &off) {
  Operation *op = b.op("stencil.access", {temp}, {TypeDesc(Scalar::F64)});
  op->setAttr("offsets", Attribute::makeIndexArray(off));
  return Builder::res(op);
}

/// acc = w0 * rank * center + sum over dims and taps of wk * (p + m).
Value *emitLaplacian(Builder &b, Value *temp, Value *center,
                     const KernelSpec &spec) {
  auto taps = laplacianTaps(spec.order);
  double w0 = laplacianWeight(spec.order, 0);
  Value *acc =
      Builder::res(b.op("arith.mulf", {center, cF64(b, w0 * spec.rank)},
                        {TypeDesc(Scalar::F64)}));
  for (int d = 0; d < spec.rank; ++d) {
    for (std::int64_t k : taps) {
      std::vector<std::int64_t> off(static_cast<std::size_t>(spec.rank), 0);
      off[d] = k;
      Value *p = access(b, temp, off);
      off[d] = -k;
      Value *m = access(b, temp, off);
      Value *s =
          Builder::res(b.op("arith.addf", {p, m}, {TypeDesc(Scalar::F64)}));
      Value *w = Builder::res(
          b.op("arith.mulf", {s, cF64(b, laplacianWeight(spec.order, k))},
               {TypeDesc(Scalar::F64)}));
      acc =
          Builder::res(b.op("arith.addf", {acc, w}, {TypeDesc(Scalar::F64)}));
    }
  }
  return acc;
}

} // namespace

Expected<ModuleOp> buildKernel(const KernelSpec &spec) {
  if (spec.kind != "heat" && spec.kind != "wave" && spec.kind != "copy")
    return Expected<ModuleOp>::failure(
        specError("unknown kernel '" + spec.kind + "'"));
  if (spec.rank < 1 || spec.rank > 3)
    return Expected<ModuleOp>::failure(
        specError("kernel rank must be 1, 2, or 3"));
  if (spec.extent <= 0)
    return Expected<ModuleOp>::failure(
        specError("kernel extent must be positive"));
  if (spec.kind != "copy" && laplacianTaps(spec.order).empty())
    return Expected<ModuleOp>::failure(
        specError("Laplacian order must be 2, 4, or 8"));

  std::int64_t h = haloWidth(spec);
  Bounds fieldBounds, domain;
  for (int d = 0; d < spec.rank; ++d) {
    fieldBounds.dims.push_back({-h, spec.extent + h});
    domain.dims.push_back({0, spec.extent});
  }
  TypeDesc fieldTy{FieldType{Scalar::F64, fieldBounds}};
  TypeDesc tempTy{TempType{Scalar::F64, fieldBounds}};
  TypeDesc outTy{TempType{Scalar::F64, domain}};

  int numFields = spec.kind == "wave" ? 3 : 2;
  int writeArg = numFields - 1;

  ModuleOp m = ir::makeModule();
  std::vector<std::int64_t> group;
  for (int i = 0; i < numFields; ++i)
    group.push_back(i);
  ArrayAttr slots;
  slots.elems.push_back(Attribute::makeIndexArray(group));
  m->setAttr("stencil.time_slots", Attribute(slots));

  auto func = std::make_unique<Operation>("func.func");
  func->setAttr("sym_name", Attribute::makeString("step"));
  FuncType sig;
  for (int i = 0; i < numFields; ++i)
    sig.ins.push_back(fieldTy);
  func->setAttr("function_type", Attribute(TypeAttr{TypeDesc(sig)}));
  Region &body = func->addRegion();
  body.owner = func.get();
  std::vector<Value *> fields;
  for (int i = 0; i < numFields; ++i)
    fields.push_back(body.addArg(fieldTy));

  Builder b(body);
  std::vector<Value *> loaded;
  for (int i = 0; i < writeArg; ++i)
    loaded.push_back(
        Builder::res(b.op("stencil.load", {fields[i]}, {tempTy})));

  Operation *apply = b.op("stencil.apply", loaded, {outTy});
  Region &ar = apply->addRegion();
  ar.owner = apply;
  std::vector<Value *> tempArgs;
  for (Value *l : loaded)
    tempArgs.push_back(ar.addArg(l->type));

  Builder ab(ar);
  Value *out = nullptr;
  if (spec.kind == "copy") {
    out = access(ab, tempArgs[0],
                 std::vector<std::int64_t>(static_cast<std::size_t>(spec.rank),
                                           0));
  } else if (spec.kind == "heat") {
    std::vector<std::int64_t> zero(static_cast<std::size_t>(spec.rank), 0);
    Value *c = access(ab, tempArgs[0], zero);
    Value *lap = emitLaplacian(ab, tempArgs[0], c, spec);
    Value *scaled = Builder::res(
        ab.op("arith.mulf", {lap, cF64(ab, 0.01)}, {TypeDesc(Scalar::F64)}));
    out = Builder::res(
        ab.op("arith.addf", {c, scaled}, {TypeDesc(Scalar::F64)}));
  } else {
    std::vector<std::int64_t> zero(static_cast<std::size_t>(spec.rank), 0);
    Value *prev = access(ab, tempArgs[0], zero);
    Value *cur = access(ab, tempArgs[1], zero);
    Value *lap = emitLaplacian(ab, tempArgs[1], cur, spec);
    Value *two = Builder::res(
        ab.op("arith.mulf", {cur, cF64(ab, 2.0)}, {TypeDesc(Scalar::F64)}));
    Value *sub = Builder::res(
        ab.op("arith.subf", {two, prev}, {TypeDesc(Scalar::F64)}));
    Value *kk = Builder::res(
        ab.op("arith.mulf", {lap, cF64(ab, 0.01)}, {TypeDesc(Scalar::F64)}));
    out =
        Builder::res(ab.op("arith.addf", {sub, kk}, {TypeDesc(Scalar::F64)}));
  }
  ab.op("stencil.return", {out}, {});

  Operation *store =
      b.op("stencil.store", {Builder::res(apply), fields[writeArg]}, {});
  std::vector<std::int64_t> lb(static_cast<std::size_t>(spec.rank), 0);
  std::vector<std::int64_t> ub(static_cast<std::size_t>(spec.rank),
                               spec.extent);
  store->setAttr("lb", Attribute::makeIndexArray(lb));
  store->setAttr("ub", Attribute::makeIndexArray(ub));
  b.op("func.return", {}, {});

  ir::moduleBody(*m).ops.push_back(std::move(func));
  auto diags = ir::verifyModule(*m);
  if (!diags.empty())
    return Expected<ModuleOp>::failure(std::move(diags));
  return Expected<ModuleOp>::success(std::move(m));
}

std::vector<std::shared_ptr<Buffer>>
initialFields(const ir::Operation &module) {
  std::vector<std::shared_ptr<Buffer>> out;
  const Operation *entry = nullptr;
  for (const auto &op : ir::moduleBody(module).ops) {
    if (op->name != "func.func" || op->regions.empty() ||
        op->regions[0].args.empty())
      continue;
    bool allFields = true;
    for (const Value &a : op->regions[0].args)
      if (!a.type.is<FieldType>())
        allFields = false;
    if (allFields) {
      entry = op.get();
      break;
    }
  }
  if (!entry)
    return out;
  int idx = 0;
  for (const Value &a : entry->regions[0].args) {
    const auto &ft = a.type.as<FieldType>();
    auto buf = Buffer::forBounds(ft.elem, ft.bounds);
    fillInit(*buf, idx++);
    out.push_back(std::move(buf));
  }
  return out;
}

} // namespace halogen::exec
