//===- register.cpp - one-time dialect and pass registration ------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "registration.hpp"

#include "halogen/ir/dialect.hpp"
#include "halogen/ir/pass.hpp"

#include <mutex>

namespace halogen::ir {

void ensureDialectsRegistered() {
  static std::once_flag once;
  std::call_once(once, [] {
    registerCoreOps();
    registerStencilOps();
    registerDmpOps();
    registerMpiOps();
  });
}

void ensurePassesRegistered() {
  ensureDialectsRegistered();
  static std::once_flag once;
  std::call_once(once, [] {
    registerStencilPasses();
    registerDmpPasses();
    registerMpiPasses();
  });
}

} // namespace halogen::ir
