//===- printer.hpp - textual IR printer ------------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_PRINTER_HPP
#define HALOGEN_IR_PRINTER_HPP

#include "halogen/ir/ir.hpp"

#include <string>

namespace halogen::ir {

/// Print a module to its canonical textual form. Value names are
/// renumbered %0, %1, ... per isolated scope; attribute maps print in key
/// order; ops print in their pretty form when one is registered and in the
/// generic form otherwise. print(parse(print(m))) == print(m).
std::string printModule(const Operation &module);

} // namespace halogen::ir

#endif // HALOGEN_IR_PRINTER_HPP
