//===- serial.hpp - single-process reference executors ---------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_EXEC_SERIAL_HPP
#define HALOGEN_EXEC_SERIAL_HPP

#include "halogen/exec/buffer.hpp"
#include "halogen/ir/ir.hpp"

#include <memory>
#include <vector>

namespace halogen::exec {

/// The module's single function whose arguments are all stencil fields,
/// or null (step functions at the stencil and decomposed levels).
ir::Operation *stencilEntry(ir::Operation &module);

/// Reference executor for stencil-level modules: runs the step function
/// once per time step, rotating the buffer bindings between steps per the
/// module's time-slot groups. `fields` bind to the function arguments in
/// order; the result is the final binding, so result i is the buffer bound
/// to argument i after the last rotation.
std::vector<std::shared_ptr<Buffer>>
runSerialStencil(ir::Operation &module, std::vector<std::shared_ptr<Buffer>> fields,
                 std::int64_t timesteps);

/// Executor for loop-level modules: invokes the named function (default:
/// the single function) with the buffers as arguments. The step count was
/// baked in when the loops were generated; the buffers are updated in
/// place.
void runLoops(ir::Operation &module, const std::vector<std::shared_ptr<Buffer>> &fields,
              const std::string &funcName = "");

/// The binding permutation after `steps` rotations: result[i] is the index
/// of the initial buffer bound to slot i.
std::vector<int> bindingAfter(const std::vector<std::vector<int>> &groups,
                              int numArgs, std::int64_t steps);

} // namespace halogen::exec

#endif // HALOGEN_EXEC_SERIAL_HPP
