//===- contracts.hpp - shared per-op verification helpers ------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_DIALECTS_CONTRACTS_HPP
#define HALOGEN_DIALECTS_CONTRACTS_HPP

#include "halogen/ir/dialect.hpp"
#include "halogen/ir/ir.hpp"

#include <string>
#include <vector>

namespace halogen::ir::contract {

inline bool expectOperands(const Operation &op, int n,
                           std::vector<Diagnostic> &diags) {
  if (op.numOperands() == n)
    return true;
  opError(op, diags,
          op.name + " expects " + std::to_string(n) + " operands, got " +
              std::to_string(op.numOperands()));
  return false;
}

inline bool expectResults(const Operation &op, int n,
                          std::vector<Diagnostic> &diags) {
  if (op.numResults() == n)
    return true;
  opError(op, diags,
          op.name + " expects " + std::to_string(n) + " results, got " +
              std::to_string(op.numResults()));
  return false;
}

inline bool expectNoRegions(const Operation &op,
                            std::vector<Diagnostic> &diags) {
  if (op.regions.empty())
    return true;
  opError(op, diags, op.name + " takes no regions");
  return false;
}

inline bool expectRegions(const Operation &op, int n,
                          std::vector<Diagnostic> &diags) {
  if (static_cast<int>(op.regions.size()) == n)
    return true;
  opError(op, diags,
          op.name + " expects " + std::to_string(n) + " regions, got " +
              std::to_string(op.regions.size()));
  return false;
}

/// Operand #i must exist and satisfy `pred`; `what` names the requirement.
template <typename Pred>
bool expectOperandType(const Operation &op, int i, Pred pred,
                       const std::string &what,
                       std::vector<Diagnostic> &diags) {
  if (i >= op.numOperands() || !op.operands[i])
    return false; // arity reported elsewhere
  if (pred(op.operands[i]->type))
    return true;
  opError(op, diags,
          op.name + " operand #" + std::to_string(i) + " must be " + what +
              ", got " + op.operands[i]->type.str());
  return false;
}

inline bool expectOperandScalar(const Operation &op, int i, Scalar s,
                                std::vector<Diagnostic> &diags) {
  return expectOperandType(
      op, i, [&](const TypeDesc &t) { return t.isScalar(s); }, scalarName(s),
      diags);
}

template <typename Pred>
bool expectResultType(const Operation &op, int i, Pred pred,
                      const std::string &what,
                      std::vector<Diagnostic> &diags) {
  if (i >= op.numResults())
    return false;
  if (pred(op.results[i].type))
    return true;
  opError(op, diags,
          op.name + " result #" + std::to_string(i) + " must be " + what +
              ", got " + op.results[i].type.str());
  return false;
}

inline const Attribute *expectAttr(const Operation &op, const std::string &key,
                                   std::vector<Diagnostic> &diags) {
  const Attribute *a = op.attr(key);
  if (!a)
    opError(op, diags, op.name + " requires a '" + key + "' attribute");
  return a;
}

inline bool isRequest(const TypeDesc &t) {
  const auto *m = t.dynAs<MpiType>();
  return m && m->kind == MpiKind::Request;
}

inline bool isDatatype(const TypeDesc &t) {
  const auto *m = t.dynAs<MpiType>();
  return m && m->kind == MpiKind::Datatype;
}

/// The op registered as the body terminator of `owner`, or null.
inline const Operation *lastOp(const Region &r) {
  return r.ops.empty() ? nullptr : r.ops.back().get();
}

} // namespace halogen::ir::contract

#endif // HALOGEN_DIALECTS_CONTRACTS_HPP
