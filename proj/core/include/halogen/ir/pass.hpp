//===- pass.hpp - pass registry and pipeline driver ------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_IR_PASS_HPP
#define HALOGEN_IR_PASS_HPP

#include "halogen/ir/diagnostics.hpp"
#include "halogen/ir/ir.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace halogen::ir {

/// Key=value options given to one pipeline step.
struct PassOptions {
  std::map<std::string, std::string> opts;

  bool has(const std::string &key) const { return opts.count(key) != 0; }
  std::string get(const std::string &key, const std::string &fallback) const;
  std::int64_t getInt(const std::string &key, std::int64_t fallback) const;
};

/// A pass mutates the module in place and reports problems through `diags`.
using PassFn = std::function<void(Operation &module, const PassOptions &opts,
                                  std::vector<Diagnostic> &diags)>;

struct PassInfo {
  std::string name;
  std::string summary;
  PassFn fn;
};

class PassRegistry {
public:
  static PassRegistry &get();

  void registerPass(PassInfo info);
  void registerAlias(const std::string &alias, const std::string &target);
  const PassInfo *lookup(const std::string &name) const;
  std::vector<const PassInfo *> list() const;

private:
  std::map<std::string, PassInfo> passes;
  std::map<std::string, std::string> aliases;
};

/// Registers every lowering and cleanup pass exactly once.
void ensurePassesRegistered();

/// One parsed pipeline step: "decompose grid=2x2" -> {"decompose", {grid}}.
struct PipelineStep {
  std::string name;
  PassOptions options;
};

/// Pipelines are comma-separated steps; within a step, whitespace-separated
/// key=value options follow the pass name.
Expected<std::vector<PipelineStep>> parsePipeline(const std::string &text);

/// Run a pipeline on a copy of `module`; the input is never mutated. The
/// module is verified after every step and the first failure aborts the
/// run with diagnostics naming the offending pass.
Expected<ModuleOp> runPipeline(const Operation &module,
                               const std::string &pipeline);
Expected<ModuleOp> runPipeline(const Operation &module,
                               const std::vector<PipelineStep> &steps);

} // namespace halogen::ir

#endif // HALOGEN_IR_PASS_HPP
