//===- serial.cpp - single-process reference executors --------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/exec/serial.hpp"

#include "halogen/exec/interpreter.hpp"

#include "../dialects/lowering_common.hpp"

namespace halogen::exec {

using ir::FieldType;
using ir::Operation;
using ir::TrapError;
using ir::Value;

Operation *stencilEntry(Operation &module) {
  Operation *found = nullptr;
  for (auto &op : ir::moduleBody(module).ops) {
    if (op->name != "func.func" || op->regions.empty())
      continue;
    if (op->regions[0].args.empty())
      continue;
    bool allFields = true;
    for (const Value &a : op->regions[0].args)
      if (!a.type.is<FieldType>())
        allFields = false;
    if (!allFields)
      continue;
    if (found)
      return nullptr;
    found = op.get();
  }
  return found;
}

std::vector<int> bindingAfter(const std::vector<std::vector<int>> &groups,
                              int numArgs, std::int64_t steps) {
  std::vector<int> src = ir::lowering::rotationSources(groups, numArgs);
  std::vector<int> cur(static_cast<std::size_t>(numArgs));
  for (int i = 0; i < numArgs; ++i)
    cur[i] = i;
  std::vector<int> next(static_cast<std::size_t>(numArgs));
  for (std::int64_t t = 0; t < steps; ++t) {
    for (int i = 0; i < numArgs; ++i)
      next[i] = cur[src[i]];
    cur = next;
  }
  return cur;
}

std::vector<std::shared_ptr<Buffer>>
runSerialStencil(Operation &module,
                 std::vector<std::shared_ptr<Buffer>> fields,
                 std::int64_t timesteps) {
  Operation *entry = stencilEntry(module);
  if (!entry)
    throw TrapError("", "module has no single all-field step function");
  auto name = entry->strAttr("sym_name");
  int numArgs = static_cast<int>(entry->regions[0].args.size());
  if (static_cast<int>(fields.size()) != numArgs)
    throw TrapError(entry->path(), "field count does not match the function");

  std::vector<ir::Diagnostic> diags;
  auto groups = ir::lowering::timeSlotGroups(module, numArgs, diags);
  if (!diags.empty())
    throw TrapError(diags[0].opPath, diags[0].message);
  std::vector<int> src = ir::lowering::rotationSources(groups, numArgs);

  Interpreter interp(module);
  std::vector<std::shared_ptr<Buffer>> binding = std::move(fields);
  std::vector<std::shared_ptr<Buffer>> next(binding.size());
  for (std::int64_t t = 0; t < timesteps; ++t) {
    std::vector<RtValue> args(binding.size());
    for (std::size_t i = 0; i < binding.size(); ++i)
      args[i].buf = binding[i];
    interp.invoke(*name, std::move(args));
    for (std::size_t i = 0; i < binding.size(); ++i)
      next[i] = binding[static_cast<std::size_t>(src[i])];
    binding = next;
  }
  return binding;
}

void runLoops(Operation &module,
              const std::vector<std::shared_ptr<Buffer>> &fields,
              const std::string &funcName) {
  std::string name = funcName;
  if (name.empty()) {
    const Operation *only = nullptr;
    for (auto &op : ir::moduleBody(module).ops)
      if (op->name == "func.func" && !op->regions.empty()) {
        if (only)
          throw TrapError("", "module has more than one function; name one");
        only = op.get();
      }
    if (!only)
      throw TrapError("", "module has no function");
    name = *only->strAttr("sym_name");
  }
  Interpreter interp(module);
  std::vector<RtValue> args(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i)
    args[i].buf = fields[i];
  interp.invoke(name, std::move(args));
}

} // namespace halogen::exec
