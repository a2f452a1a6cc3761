//===- mpi.hpp - message-passing ABI description ----------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_DIALECTS_MPI_HPP
#define HALOGEN_DIALECTS_MPI_HPP

#include "halogen/ir/diagnostics.hpp"
#include "halogen/ir/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace halogen::ir::mpi {

/// The integer constants a message-passing library bakes into its headers.
/// Lowering to plain calls needs them to materialize handle arguments, and
/// the simulator needs the same table to decode those arguments again.
/// The default values follow the mpich ABI.
struct AbiTable {
  std::string profile = "simulated-mpich";

  std::int64_t commWorld = 0x44000000;
  std::int64_t datatypeFloat = 0x4c00040a;
  std::int64_t datatypeDouble = 0x4c00080b;
  std::int64_t datatypeInt = 0x4c000405;
  std::int64_t requestNull = 0x2c000000;
  std::int64_t procNull = -1;
  std::int64_t success = 0;
  std::int64_t opMax = 0x58000001;
  std::int64_t opMin = 0x58000002;
  std::int64_t opSum = 0x58000003;
  std::int64_t statusesIgnore = 1;

  static AbiTable standard();

  /// "NAME = integer" lines; '#' starts a comment. Unknown names are
  /// errors, as is a table whose datatype values collide.
  static Expected<AbiTable> parse(const std::string &text,
                                  const std::string &filename = "<abi>");
  static Expected<AbiTable> loadFile(const std::string &path);
  /// The table named by the HALOGEN_ABI environment variable, or the
  /// built-in default when the variable is unset.
  static Expected<AbiTable> fromEnvironment();

  std::string save() const;

  std::int64_t datatypeFor(Scalar s) const;
  std::optional<Scalar> scalarForDatatype(std::int64_t value) const;
  std::optional<std::string> reduceOpName(std::int64_t value) const;
  std::int64_t reduceOpValue(const std::string &name) const;
};

} // namespace halogen::ir::mpi

#endif // HALOGEN_DIALECTS_MPI_HPP
