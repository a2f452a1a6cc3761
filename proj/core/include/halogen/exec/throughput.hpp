//===- throughput.hpp - stencil throughput accounting ----------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Throughput rows for stencil runs and their CSV form. The figure of merit
// is giga-points per second: core points updated, times steps, over wall
// seconds.
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_EXEC_THROUGHPUT_HPP
#define HALOGEN_EXEC_THROUGHPUT_HPP

#include "halogen/ir/diagnostics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace halogen::exec {

struct BenchRow {
  std::string label;
  std::int64_t corePoints = 0;
  std::int64_t steps = 0;
  double seconds = 0.0;
  /// Derived column as written to or read from the CSV.
  double gpts = 0.0;
};

/// corePoints * steps / seconds / 1e9.
double gptsPerSec(std::int64_t corePoints, std::int64_t steps, double seconds);

std::string csvHeader();
/// Formats one row, recomputing the derived column from the raw columns.
std::string csvRow(const BenchRow &row);

/// Parses a full CSV document (header line required).
ir::Expected<std::vector<BenchRow>> parseCsv(const std::string &text);

} // namespace halogen::exec

#endif // HALOGEN_EXEC_THROUGHPUT_HPP
