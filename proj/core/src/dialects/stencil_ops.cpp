//===- stencil_ops.cpp - stencil dialect ops ----------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "contracts.hpp"
#include "registration.hpp"

#include "halogen/dialects/stencil.hpp"
#include "halogen/ir/dialect.hpp"

#include <algorithm>

namespace halogen::ir {

using namespace contract;

namespace {

void verifyStencilLoad(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 1, diags) || !expectResults(op, 1, diags))
    return;
  const auto *field =
      op.operands[0] ? op.operands[0]->type.dynAs<FieldType>() : nullptr;
  const auto *temp = op.results[0].type.dynAs<TempType>();
  if (!field || !temp) {
    opError(op, diags, "stencil.load reads a !field into a !temp");
    return;
  }
  if (field->elem != temp->elem)
    opError(op, diags, "element types of field and temp differ");
  if (temp->bounds && !(field->bounds == *temp->bounds) &&
      !field->bounds.contains(*temp->bounds))
    opError(op, diags, "loaded temp bounds exceed the field bounds");
}

void verifyStencilApply(const Operation &op, std::vector<Diagnostic> &diags) {
  if (!expectRegions(op, 1, diags))
    return;
  if (op.results.empty()) {
    opError(op, diags, "stencil.apply needs at least one result");
    return;
  }
  const Region &body = op.regions[0];
  if (body.args.size() != op.operands.size()) {
    opError(op, diags, "region arguments do not match the operands");
    return;
  }
  for (size_t i = 0; i < op.operands.size(); ++i) {
    if (!op.operands[i])
      continue;
    if (!op.operands[i]->type.is<TempType>())
      opError(op, diags,
              "stencil.apply operand #" + std::to_string(i) +
                  " must be a !temp");
    if (!(body.args[i].type == op.operands[i]->type))
      opError(op, diags,
              "region argument #" + std::to_string(i) +
                  " does not match its operand type");
  }
  const TempType *first = nullptr;
  for (size_t i = 0; i < op.results.size(); ++i) {
    const auto *t = op.results[i].type.dynAs<TempType>();
    if (!t) {
      opError(op, diags,
              "stencil.apply result #" + std::to_string(i) +
                  " must be a !temp");
      return;
    }
    if (!first)
      first = t;
    else if (t->bounds && first->bounds && !(*t->bounds == *first->bounds))
      opError(op, diags, "apply results must share one bounds");
  }
  const Operation *term = lastOp(body);
  if (!term || term->name != "stencil.return") {
    opError(op, diags, "apply body must end with stencil.return");
    return;
  }
  if (term->operands.size() != op.results.size()) {
    opError(*term, diags,
            "stencil.return arity does not match the apply results");
    return;
  }
  for (size_t i = 0; i < op.results.size(); ++i) {
    const auto *t = op.results[i].type.dynAs<TempType>();
    if (t && term->operands[i] && !term->operands[i]->type.isScalar(t->elem))
      opError(*term, diags,
              "stencil.return operand #" + std::to_string(i) +
                  " must have the result element type");
  }
}

void verifyStencilReturn(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  for (size_t i = 0; i < op.operands.size(); ++i)
    if (op.operands[i] && !op.operands[i]->type.isScalar())
      opError(op, diags,
              "stencil.return operand #" + std::to_string(i) +
                  " must be a scalar");
}

void verifyStencilAccess(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 1, diags) || !expectResults(op, 1, diags))
    return;
  const auto *temp =
      op.operands[0] ? op.operands[0]->type.dynAs<TempType>() : nullptr;
  if (!temp) {
    opError(op, diags, "stencil.access reads a !temp");
    return;
  }
  if (!op.results[0].type.isScalar(temp->elem))
    opError(op, diags, "accessed value must have the temp's element type");
  const Attribute *offsets = expectAttr(op, "offsets", diags);
  std::vector<std::int64_t> offs;
  if (offsets && !attrToIndexVector(*offsets, offs)) {
    opError(op, diags, "offsets must be an array of integers");
    return;
  }
  if (offsets && temp->bounds &&
      static_cast<int>(offs.size()) != temp->bounds->rank())
    opError(op, diags, "offset rank does not match the temp rank");
  // Access is only meaningful relative to an apply's iteration point.
  for (const Region *r = op.parent; r; r = r->owner ? r->owner->parent : nullptr)
    if (r->owner && r->owner->name == "stencil.apply")
      return;
  opError(op, diags, "stencil.access is only valid inside stencil.apply");
}

void verifyStencilStore(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  if (!expectOperands(op, 2, diags))
    return;
  const auto *temp =
      op.operands[0] ? op.operands[0]->type.dynAs<TempType>() : nullptr;
  const auto *field =
      op.operands[1] ? op.operands[1]->type.dynAs<FieldType>() : nullptr;
  if (!temp || !field) {
    opError(op, diags, "stencil.store writes a !temp into a !field");
    return;
  }
  if (temp->elem != field->elem)
    opError(op, diags, "element types of temp and field differ");
  const Attribute *lbA = expectAttr(op, "lb", diags);
  const Attribute *ubA = expectAttr(op, "ub", diags);
  std::vector<std::int64_t> lb, ub;
  if (!lbA || !ubA || !attrToIndexVector(*lbA, lb) ||
      !attrToIndexVector(*ubA, ub)) {
    if (lbA && ubA)
      opError(op, diags, "lb and ub must be integer arrays");
    return;
  }
  if (lb.size() != ub.size() ||
      static_cast<int>(lb.size()) != field->bounds.rank()) {
    opError(op, diags, "store region rank does not match the field");
    return;
  }
  Bounds region;
  for (size_t d = 0; d < lb.size(); ++d) {
    if (lb[d] >= ub[d])
      opError(op, diags, "store region is empty in dimension " +
                             std::to_string(d));
    region.dims.push_back({lb[d], ub[d]});
  }
  if (!field->bounds.contains(region))
    opError(op, diags, "store region exceeds the field bounds");
  if (temp->bounds && !temp->bounds->contains(region))
    opError(op, diags, "store region exceeds the temp bounds");
}

} // namespace

namespace stencil {

std::vector<std::int64_t> AccessExtent::haloBelow() const {
  std::vector<std::int64_t> w(lo.size());
  for (size_t d = 0; d < lo.size(); ++d)
    w[d] = std::max<std::int64_t>(0, -lo[d]);
  return w;
}

std::vector<std::int64_t> AccessExtent::haloAbove() const {
  std::vector<std::int64_t> w(hi.size());
  for (size_t d = 0; d < hi.size(); ++d)
    w[d] = std::max<std::int64_t>(0, hi[d]);
  return w;
}

AccessExtent inferAccessExtent(const Operation &applyOp, int argIdx,
                               int rank) {
  AccessExtent e;
  e.lo.assign(rank, 0);
  e.hi.assign(rank, 0);
  if (applyOp.regions.empty() ||
      argIdx >= static_cast<int>(applyOp.regions[0].args.size()))
    return e;
  const Value *arg = &applyOp.regions[0].args[argIdx];
  walk(applyOp, [&](const Operation &op) {
    if (op.name != "stencil.access" || op.operands.empty() ||
        op.operands[0] != arg)
      return;
    const Attribute *offsets = op.attr("offsets");
    std::vector<std::int64_t> offs;
    if (!offsets || !attrToIndexVector(*offsets, offs) ||
        offs.size() != e.lo.size())
      return;
    for (size_t d = 0; d < offs.size(); ++d) {
      e.lo[d] = std::min(e.lo[d], offs[d]);
      e.hi[d] = std::max(e.hi[d], offs[d]);
    }
  });
  return e;
}

int applyRank(const Operation &applyOp) {
  for (const Value &r : applyOp.results)
    if (const auto *t = r.type.dynAs<TempType>(); t && t->bounds)
      return t->bounds->rank();
  for (const Value *v : applyOp.operands)
    if (v)
      if (const auto *t = v->type.dynAs<TempType>(); t && t->bounds)
        return t->bounds->rank();
  return -1;
}

} // namespace stencil

void registerStencilOps() {
  auto &reg = DialectRegistry::get();
  reg.registerDialect("stencil");
  reg.registerOp({"stencil.load", verifyStencilLoad});
  reg.registerOp({"stencil.apply", verifyStencilApply});
  reg.registerOp({"stencil.return", verifyStencilReturn});
  reg.registerOp({"stencil.access", verifyStencilAccess});
  reg.registerOp({"stencil.store", verifyStencilStore});
}

} // namespace halogen::ir
