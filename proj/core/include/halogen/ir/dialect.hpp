//===- dialect.hpp - op registration ---------------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_DIALECT_HPP
#define HALOGEN_IR_DIALECT_HPP

#include "halogen/ir/diagnostics.hpp"
#include "halogen/ir/ir.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace halogen::ir {

/// Per-op structural contract. The verifier walks every op, requires it to
/// be registered, and runs its callback.
struct OpInfo {
  std::string name;
  std::function<void(const Operation &, std::vector<Diagnostic> &)> verify;
};

class DialectRegistry {
public:
  static DialectRegistry &get();

  void registerDialect(const std::string &name);
  void registerOp(OpInfo info);

  bool knownDialect(const std::string &name) const;
  const OpInfo *lookup(const std::string &opName) const;

private:
  std::map<std::string, OpInfo> ops;
  std::map<std::string, bool> dialects;
};

/// Registers builtin, func, arith, loop, memref, llvm, stencil, dmp, and
/// mpi dialects exactly once. Every public entry point calls this.
void ensureDialectsRegistered();

/// Helper for verify callbacks.
void opError(const Operation &op, std::vector<Diagnostic> &diags,
             const std::string &message);

} // namespace halogen::ir

#endif // HALOGEN_IR_DIALECT_HPP
