//===- verifier.hpp - structural IR checks ---------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_VERIFIER_HPP
#define HALOGEN_IR_VERIFIER_HPP

#include "halogen/ir/diagnostics.hpp"
#include "halogen/ir/ir.hpp"

#include <vector>

namespace halogen::ir {

/// Verify a module: every op registered and passing its per-op contract,
/// values visible at each use (def-before-use, function isolation), unique
/// function symbols, calls matching their callee's signature, and each
/// mpi request consumed exactly once. Empty result means the module is
/// well formed.
std::vector<Diagnostic> verifyModule(const Operation &module);

} // namespace halogen::ir

#endif // HALOGEN_IR_VERIFIER_HPP
