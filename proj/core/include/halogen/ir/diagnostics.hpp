//===- diagnostics.hpp - error reporting -----------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_DIAGNOSTICS_HPP
#define HALOGEN_IR_DIAGNOSTICS_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace halogen::ir {

struct SrcLoc {
  std::string file;
  int line = 0;
  int col = 0;

  bool valid() const { return line > 0; }
  std::string str() const;
};

struct Diagnostic {
  SrcLoc loc;
  std::string message;
  /// Path to the offending op, e.g. "func @step / op #2 (stencil.apply)".
  std::string opPath;

  std::string str() const;
};

/// Value-or-diagnostics result for parse/verify/pass entry points.
template <typename T> struct Expected {
  std::optional<T> value;
  std::vector<Diagnostic> diags;

  bool ok() const { return value.has_value(); }
  T &operator*() { return *value; }
  const T &operator*() const { return *value; }
  T *operator->() { return &*value; }

  static Expected success(T v) {
    Expected e;
    e.value = std::move(v);
    return e;
  }
  static Expected failure(std::vector<Diagnostic> ds) {
    Expected e;
    e.diags = std::move(ds);
    return e;
  }
  static Expected failure(Diagnostic d) {
    Expected e;
    e.diags.push_back(std::move(d));
    return e;
  }

  std::string diagText() const {
    std::string out;
    for (const auto &d : diags) {
      out += d.str();
      out += '\n';
    }
    return out;
  }
};

/// Runtime fault raised by interpreters (out-of-bounds access, arity
/// mismatch at a dispatched call, deadlock). Carries the op path.
class TrapError : public std::runtime_error {
public:
  TrapError(std::string opPath, const std::string &message)
      : std::runtime_error(opPath.empty() ? message
                                          : message + " [at " + opPath + "]"),
        path(std::move(opPath)) {}

  std::string path;
};

} // namespace halogen::ir

#endif // HALOGEN_IR_DIAGNOSTICS_HPP
