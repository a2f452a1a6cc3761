//===- parser.hpp - textual IR parser --------------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_PARSER_HPP
#define HALOGEN_IR_PARSER_HPP

#include "halogen/ir/diagnostics.hpp"
#include "halogen/ir/ir.hpp"

#include <string>

namespace halogen::ir {

/// Parse textual IR into a module. Accepts an explicit builtin.module or a
/// bare op list (wrapped in an implicit module). Every op may be written in
/// the generic form; ops with registered pretty forms accept those too.
/// Errors carry file:line:col positions.
Expected<ModuleOp> parseModule(const std::string &text,
                               const std::string &filename = "<stdin>");

/// Parse a single type, e.g. "!field<[0,128]xf64>". Used by tests and the
/// AbiTable loader.
Expected<TypeDesc> parseType(const std::string &text);

} // namespace halogen::ir

#endif // HALOGEN_IR_PARSER_HPP
