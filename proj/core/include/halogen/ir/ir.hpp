//===- ir.hpp - SSA + regions intermediate representation -----*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Operations own their results and nested regions; regions are single
// blocks owning their arguments and an ordered op list. Values are defined
// exactly once, either as an op result or a region argument, and are
// referenced by pointer. Modules are ordinary "builtin.module" operations
// with one region.
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_IR_HPP
#define HALOGEN_IR_IR_HPP

#include "halogen/ir/attributes.hpp"
#include "halogen/ir/diagnostics.hpp"
#include "halogen/ir/types.hpp"

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace halogen::ir {

struct Operation;
struct Region;

struct Value {
  TypeDesc type;
  /// Defining op, or null for region arguments.
  Operation *defOp = nullptr;
  int resultIdx = -1;
  /// Owning region for arguments, or null for op results.
  Region *defRegion = nullptr;
  int argIdx = -1;
  /// Dense per-function numbering used by the interpreter; assigned lazily.
  int slot = -1;

  bool isArg() const { return defRegion != nullptr; }
};

struct Region {
  /// The op this region is attached to.
  Operation *owner = nullptr;
  std::deque<Value> args;
  std::vector<std::unique_ptr<Operation>> ops;

  Value *addArg(const TypeDesc &t);
  Operation *push(std::unique_ptr<Operation> op);
  bool empty() const { return ops.empty(); }
};

struct Operation {
  std::string name;
  std::vector<Value *> operands;
  std::deque<Value> results;
  std::map<std::string, Attribute> attrs;
  std::deque<Region> regions;
  Region *parent = nullptr;
  SrcLoc loc;

  explicit Operation(std::string opName) : name(std::move(opName)) {}

  Value *addResult(const TypeDesc &t);
  Region &addRegion();
  int numOperands() const { return static_cast<int>(operands.size()); }
  int numResults() const { return static_cast<int>(results.size()); }

  const Attribute *attr(const std::string &key) const;
  void setAttr(const std::string &key, Attribute a);
  std::optional<std::int64_t> intAttr(const std::string &key) const;
  std::optional<std::string> strAttr(const std::string &key) const;

  std::string dialect() const { return name.substr(0, name.find('.')); }

  /// "func @step / op #3 (stencil.apply)" style path for diagnostics.
  std::string path() const;
};

using ModuleOp = std::unique_ptr<Operation>;

/// A module is a "builtin.module" op with exactly one region.
ModuleOp makeModule();
Region &moduleBody(Operation &module);
const Region &moduleBody(const Operation &module);

/// Deep copy. The value map (old -> new) is exposed for callers that need
/// to correlate the clone with the original.
ModuleOp cloneModule(const Operation &module);
std::unique_ptr<Operation>
cloneOp(const Operation &op, std::map<const Value *, Value *> &valueMap);

/// Pre-order walk over an op and everything nested in it.
void walk(Operation &op, const std::function<void(Operation &)> &fn);
void walk(const Operation &op, const std::function<void(const Operation &)> &fn);

/// Count ops with the given name anywhere inside `op` (inclusive).
int countOps(const Operation &op, const std::string &name);

/// Structural equality: same op tree, operand wiring, attributes, and
/// types, ignoring value names and identities (graph isomorphism under
/// operation order).
bool structurallyEqual(const Operation &a, const Operation &b);
bool structurallyEqual(const Operation &a, const Operation &b,
                       std::string &firstDifference);

/// Look up a func.func by symbol name in the module body. Null if absent.
Operation *lookupFunc(Operation &module, const std::string &symbol);
const Operation *lookupFunc(const Operation &module, const std::string &symbol);

/// Assign dense value slots per func (args and results of all nested ops).
/// Returns the frame size. Idempotent.
int numberValues(Operation &func);

} // namespace halogen::ir

#endif // HALOGEN_IR_IR_HPP
