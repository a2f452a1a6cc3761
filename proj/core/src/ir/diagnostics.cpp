//===- diagnostics.cpp - error reporting -----------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/diagnostics.hpp"

namespace halogen::ir {

std::string SrcLoc::str() const {
  return file + ":" + std::to_string(line) + ":" + std::to_string(col);
}

std::string Diagnostic::str() const {
  std::string out;
  if (loc.valid()) {
    out += loc.str();
    out += ": ";
  }
  out += message;
  if (!opPath.empty()) {
    out += " (at ";
    out += opPath;
    out += ")";
  }
  return out;
}

} // namespace halogen::ir
