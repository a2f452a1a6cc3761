//===- registration.hpp - dialect and pass registration hooks --*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_DIALECTS_REGISTRATION_HPP
#define HALOGEN_DIALECTS_REGISTRATION_HPP

namespace halogen::ir {

void registerCoreOps();
void registerStencilOps();
void registerDmpOps();
void registerMpiOps();

void registerStencilPasses();
void registerDmpPasses();
void registerMpiPasses();

} // namespace halogen::ir

#endif // HALOGEN_DIALECTS_REGISTRATION_HPP
