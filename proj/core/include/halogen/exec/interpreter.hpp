//===- interpreter.hpp - tree-walking IR evaluator -------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_EXEC_INTERPRETER_HPP
#define HALOGEN_EXEC_INTERPRETER_HPP

#include "halogen/dialects/mpi.hpp"
#include "halogen/exec/buffer.hpp"
#include "halogen/ir/ir.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace halogen::exec {

/// One runtime value. The active member follows the SSA value's static
/// type: integers and handles in `i`, floats in `f`/`g`, buffer-like
/// values in `buf`.
struct RtValue {
  std::int64_t i = 0;
  double f = 0.0;
  float g = 0.0f;
  std::shared_ptr<Buffer> buf;
};

class Interpreter;

/// Host services the interpreter delegates to: calls to functions declared
/// without a body, message-passing ops, and halo swaps. The defaults trap,
/// so single-process runs need no hooks.
class RuntimeHooks {
public:
  virtual ~RuntimeHooks() = default;
  virtual void call(Interpreter &interp, const ir::Operation &op,
                    const std::string &callee, const std::vector<RtValue> &args,
                    std::vector<RtValue> &results);
  virtual void mpiOp(Interpreter &interp, const ir::Operation &op,
                     const std::vector<RtValue> &args,
                     std::vector<RtValue> &results);
  virtual void swap(Interpreter &interp, const ir::Operation &op,
                    const std::shared_ptr<Buffer> &field);
};

/// Evaluates functions of one module. Each function body is compiled once
/// into a dense-slot instruction tree; values live in a flat frame indexed
/// by Value::slot. Stencil ops are executed directly (load snapshots the
/// field, apply evaluates its region per point, store copies a region), so
/// the same engine runs every lowering level. Faults raise ir::TrapError
/// carrying the op path.
class Interpreter {
public:
  explicit Interpreter(ir::Operation &module, RuntimeHooks *hooks = nullptr,
                       ir::mpi::AbiTable abi = ir::mpi::AbiTable::standard());
  ~Interpreter();
  Interpreter(const Interpreter &) = delete;
  Interpreter &operator=(const Interpreter &) = delete;

  std::vector<RtValue> invoke(const std::string &funcName,
                              std::vector<RtValue> args);

  /// Buffer handles: memref.extract_base_pointer registers the buffer here
  /// and yields the handle; runtime hooks decode it back. Handles are
  /// stable for the interpreter's lifetime and deduplicated per buffer.
  std::int64_t registerBuffer(const std::shared_ptr<Buffer> &b);
  std::shared_ptr<Buffer> bufferAt(std::int64_t handle,
                                   const std::string &opPath) const;

  const ir::mpi::AbiTable &abi() const;

  /// Dynamic op counts by name, accumulated across invokes.
  std::map<std::string, std::int64_t> opCounts() const;
  void resetOpCounts();

private:
  struct Impl;
  std::unique_ptr<Impl> impl;
};

} // namespace halogen::exec

#endif // HALOGEN_EXEC_INTERPRETER_HPP
