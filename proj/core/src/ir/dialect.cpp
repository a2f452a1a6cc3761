//===- dialect.cpp - op registration -----------------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/dialect.hpp"

namespace halogen::ir {

DialectRegistry &DialectRegistry::get() {
  static DialectRegistry instance;
  return instance;
}

void DialectRegistry::registerDialect(const std::string &name) {
  dialects[name] = true;
}

void DialectRegistry::registerOp(OpInfo info) {
  ops[info.name] = std::move(info);
}

bool DialectRegistry::knownDialect(const std::string &name) const {
  return dialects.count(name) != 0;
}

const OpInfo *DialectRegistry::lookup(const std::string &opName) const {
  auto it = ops.find(opName);
  return it == ops.end() ? nullptr : &it->second;
}

void opError(const Operation &op, std::vector<Diagnostic> &diags,
             const std::string &message) {
  diags.push_back(Diagnostic{op.loc, message, op.path()});
}

} // namespace halogen::ir
