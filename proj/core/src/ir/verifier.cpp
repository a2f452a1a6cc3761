//===- verifier.cpp - structural IR checks -----------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/verifier.hpp"

#include "halogen/ir/dialect.hpp"

#include <map>
#include <unordered_map>
#include <unordered_set>

namespace halogen::ir {

namespace {

/// Visibility scope: region args plus results of prior ops. Lookups stop at
/// isolated scopes (function bodies see nothing from the enclosing module).
struct ScopeNode {
  const ScopeNode *parent = nullptr;
  bool isolated = false;
  std::unordered_set<const Value *> vals;

  bool visible(const Value *v) const {
    for (const ScopeNode *s = this; s; s = s->isolated ? nullptr : s->parent)
      if (s->vals.count(v))
        return true;
    return false;
  }
};

bool isTerminatorName(const std::string &n) {
  return n == "func.return" || n == "stencil.return" || n == "loop.yield";
}

const char *requiredParentFor(const std::string &terminator) {
  if (terminator == "func.return")
    return "func.func";
  if (terminator == "stencil.return")
    return "stencil.apply";
  return "loop.for";
}

bool isRequestType(const TypeDesc &t) {
  const auto *m = t.dynAs<MpiType>();
  return m && m->kind == MpiKind::Request;
}

class Verifier {
public:
  explicit Verifier(const Operation &module) : module(module) {}

  std::vector<Diagnostic> run() {
    ensureDialectsRegistered();
    if (module.name != "builtin.module" || module.regions.size() != 1) {
      opError(module, diags, "expected a builtin.module with one region");
      return diags;
    }
    collectFuncs();
    ScopeNode top;
    top.isolated = true;
    verifyRegion(moduleBody(module), top);
    checkRequestLinearity();
    return diags;
  }

private:
  const Operation &module;
  std::vector<Diagnostic> diags;
  std::map<std::string, const Operation *> funcs;
  std::vector<const Value *> requestDefs;
  std::unordered_map<const Value *, int> requestUses;

  void collectFuncs() {
    for (const auto &op : moduleBody(module).ops) {
      if (op->name != "func.func")
        continue;
      auto sym = op->strAttr("sym_name");
      if (!sym) {
        opError(*op, diags, "func.func requires a sym_name attribute");
        continue;
      }
      if (!funcs.emplace(*sym, op.get()).second)
        opError(*op, diags, "duplicate function symbol '@" + *sym + "'");
    }
  }

  void verifyRegion(const Region &region, ScopeNode &scope) {
    for (const Value &arg : region.args)
      scope.vals.insert(&arg);
    for (size_t i = 0; i < region.ops.size(); ++i) {
      const Operation &op = *region.ops[i];
      if (isTerminatorName(op.name)) {
        const char *want = requiredParentFor(op.name);
        if (!region.owner || region.owner->name != want)
          opError(op, diags,
                  op.name + " is only valid directly inside " + want);
        if (i + 1 != region.ops.size())
          opError(op, diags,
                  op.name + " must be the last operation in its region");
      }
      verifyOp(op, scope);
      for (const Value &r : op.results)
        scope.vals.insert(&r);
    }
  }

  void verifyOp(const Operation &op, const ScopeNode &scope) {
    for (size_t i = 0; i < op.operands.size(); ++i) {
      const Value *v = op.operands[i];
      if (!v) {
        opError(op, diags, "operand #" + std::to_string(i) + " is null");
        continue;
      }
      if (!scope.visible(v))
        opError(op, diags,
                "operand #" + std::to_string(i) +
                    " is not visible at its use (defined later, in a sibling "
                    "region, or outside the enclosing function)");
      if (isRequestType(v->type))
        ++requestUses[v];
    }
    for (const Value &r : op.results)
      if (isRequestType(r.type))
        requestDefs.push_back(&r);

    const std::string dialect = op.dialect();
    if (!DialectRegistry::get().knownDialect(dialect)) {
      opError(op, diags, "unknown dialect '" + dialect + "'");
      return;
    }
    const OpInfo *info = DialectRegistry::get().lookup(op.name);
    if (!info) {
      opError(op, diags, "unknown operation '" + op.name + "'");
      return;
    }
    if (info->verify)
      info->verify(op, diags);

    if (op.name == "func.call")
      verifyCall(op);

    bool isolated = op.name == "func.func" || op.name == "builtin.module";
    for (const Region &r : op.regions) {
      ScopeNode child;
      child.parent = &scope;
      child.isolated = isolated;
      verifyRegion(r, child);
    }
  }

  void verifyCall(const Operation &op) {
    auto callee = op.strAttr("callee");
    if (!callee)
      return; // reported by the op contract
    auto it = funcs.find(*callee);
    if (it == funcs.end()) {
      opError(op, diags, "call to undefined function '@" + *callee + "'");
      return;
    }
    const Attribute *fnAttr = it->second->attr("function_type");
    const TypeAttr *ty = fnAttr ? fnAttr->dynAs<TypeAttr>() : nullptr;
    if (!ty || !ty->type.is<FuncType>())
      return;
    const FuncType &sig = ty->type.as<FuncType>();
    if (sig.ins.size() != op.operands.size() ||
        sig.outs.size() != op.results.size()) {
      opError(op, diags, "call arity does not match '@" + *callee + "'");
      return;
    }
    for (size_t i = 0; i < sig.ins.size(); ++i)
      if (op.operands[i] && !(op.operands[i]->type == sig.ins[i]))
        opError(op, diags,
                "call operand #" + std::to_string(i) +
                    " does not match the parameter type of '@" + *callee +
                    "'");
    for (size_t i = 0; i < sig.outs.size(); ++i)
      if (!(op.results[i].type == sig.outs[i]))
        opError(op, diags,
                "call result #" + std::to_string(i) +
                    " does not match the result type of '@" + *callee + "'");
  }

  /// Requests are linear: every produced request must be used exactly once,
  /// never dropped or reused. The per-op contracts restrict which ops may
  /// take a request, so single-use implies single completion.
  void checkRequestLinearity() {
    for (const Value *v : requestDefs) {
      auto it = requestUses.find(v);
      int uses = it == requestUses.end() ? 0 : it->second;
      const Operation *def = v->defOp;
      if (uses == 0 && def)
        opError(*def, diags,
                "request result is never completed (dropped request)");
      else if (uses > 1 && def)
        opError(*def, diags, "request result is completed more than once");
    }
  }
};

} // namespace

std::vector<Diagnostic> verifyModule(const Operation &module) {
  Verifier v(module);
  return v.run();
}

} // namespace halogen::ir
