//===- pass.cpp - pass registry and pipeline driver ---------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/pass.hpp"

#include "halogen/ir/verifier.hpp"

#include <charconv>
#include <sstream>

namespace halogen::ir {

std::string PassOptions::get(const std::string &key,
                             const std::string &fallback) const {
  auto it = opts.find(key);
  return it == opts.end() ? fallback : it->second;
}

std::int64_t PassOptions::getInt(const std::string &key,
                                 std::int64_t fallback) const {
  auto it = opts.find(key);
  if (it == opts.end())
    return fallback;
  std::int64_t v = 0;
  const char *b = it->second.data();
  const char *e = b + it->second.size();
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc{} || r.ptr != e)
    return fallback;
  return v;
}

PassRegistry &PassRegistry::get() {
  static PassRegistry instance;
  return instance;
}

void PassRegistry::registerPass(PassInfo info) {
  passes[info.name] = std::move(info);
}

void PassRegistry::registerAlias(const std::string &alias,
                                 const std::string &target) {
  aliases[alias] = target;
}

const PassInfo *PassRegistry::lookup(const std::string &name) const {
  auto a = aliases.find(name);
  const std::string &key = a == aliases.end() ? name : a->second;
  auto it = passes.find(key);
  return it == passes.end() ? nullptr : &it->second;
}

std::vector<const PassInfo *> PassRegistry::list() const {
  std::vector<const PassInfo *> out;
  for (const auto &[name, info] : passes)
    out.push_back(&info);
  return out;
}

Expected<std::vector<PipelineStep>> parsePipeline(const std::string &text) {
  std::vector<PipelineStep> steps;
  std::stringstream byComma(text);
  std::string chunk;
  while (std::getline(byComma, chunk, ',')) {
    std::istringstream words(chunk);
    std::string word;
    PipelineStep step;
    while (words >> word) {
      if (step.name.empty()) {
        step.name = word;
        continue;
      }
      size_t eq = word.find('=');
      if (eq == std::string::npos || eq == 0)
        return Expected<std::vector<PipelineStep>>::failure(Diagnostic{
            {}, "malformed pass option '" + word + "', expected key=value"});
      step.options.opts[word.substr(0, eq)] = word.substr(eq + 1);
    }
    if (step.name.empty())
      continue; // tolerate stray commas
    steps.push_back(std::move(step));
  }
  if (steps.empty())
    return Expected<std::vector<PipelineStep>>::failure(
        Diagnostic{{}, "empty pass pipeline"});
  return Expected<std::vector<PipelineStep>>::success(std::move(steps));
}

Expected<ModuleOp> runPipeline(const Operation &module,
                               const std::vector<PipelineStep> &steps) {
  ensurePassesRegistered();
  ModuleOp work = cloneModule(module);
  for (const PipelineStep &step : steps) {
    const PassInfo *info = PassRegistry::get().lookup(step.name);
    if (!info)
      return Expected<ModuleOp>::failure(
          Diagnostic{{}, "unknown pass '" + step.name + "'"});
    std::vector<Diagnostic> diags;
    info->fn(*work, step.options, diags);
    if (!diags.empty()) {
      for (Diagnostic &d : diags)
        d.message = "in pass '" + info->name + "': " + d.message;
      return Expected<ModuleOp>::failure(std::move(diags));
    }
    std::vector<Diagnostic> verifyDiags = verifyModule(*work);
    if (!verifyDiags.empty()) {
      for (Diagnostic &d : verifyDiags)
        d.message =
            "invalid module after pass '" + info->name + "': " + d.message;
      return Expected<ModuleOp>::failure(std::move(verifyDiags));
    }
  }
  return Expected<ModuleOp>::success(std::move(work));
}

Expected<ModuleOp> runPipeline(const Operation &module,
                               const std::string &pipeline) {
  auto steps = parsePipeline(pipeline);
  if (!steps.ok())
    return Expected<ModuleOp>::failure(std::move(steps.diags));
  return runPipeline(module, *steps);
}

} // namespace halogen::ir
