//===- throughput.cpp - stencil throughput accounting ---------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/exec/throughput.hpp"

#include <cstdio>
#include <sstream>

namespace halogen::exec {

using ir::Diagnostic;
using ir::Expected;

double gptsPerSec(std::int64_t corePoints, std::int64_t steps,
                  double seconds) {
  return static_cast<double>(corePoints) * static_cast<double>(steps) /
         seconds / 1e9;
}

std::string csvHeader() {
  return "label,core_points,steps,seconds,gpts_per_s";
}

static std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csvRow(const BenchRow &row) {
  std::ostringstream os;
  os << row.label << ',' << row.corePoints << ',' << row.steps << ','
     << num(row.seconds) << ','
     << num(gptsPerSec(row.corePoints, row.steps, row.seconds));
  return os.str();
}

Expected<std::vector<BenchRow>> parseCsv(const std::string &text) {
  auto fail = [](int line, const std::string &msg) {
    Diagnostic d;
    d.loc.line = line;
    d.message = msg;
    return Expected<std::vector<BenchRow>>::failure(d);
  };
  std::istringstream is(text);
  std::string line;
  int lineNo = 0;
  if (!std::getline(is, line))
    return fail(1, "empty throughput CSV");
  ++lineNo;
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != csvHeader())
    return fail(lineNo, "unexpected CSV header '" + line + "'");

  std::vector<BenchRow> rows;
  while (std::getline(is, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    cols.push_back(cur);
    if (cols.size() != 5)
      return fail(lineNo, "expected 5 columns");
    BenchRow row;
    row.label = cols[0];
    try {
      std::size_t used = 0;
      row.corePoints = std::stoll(cols[1], &used);
      if (used != cols[1].size())
        throw std::invalid_argument(cols[1]);
      row.steps = std::stoll(cols[2], &used);
      if (used != cols[2].size())
        throw std::invalid_argument(cols[2]);
      row.seconds = std::stod(cols[3], &used);
      if (used != cols[3].size())
        throw std::invalid_argument(cols[3]);
      row.gpts = std::stod(cols[4], &used);
      if (used != cols[4].size())
        throw std::invalid_argument(cols[4]);
    } catch (const std::exception &) {
      return fail(lineNo, "malformed numeric column");
    }
    rows.push_back(std::move(row));
  }
  return Expected<std::vector<BenchRow>>::success(std::move(rows));
}

} // namespace halogen::exec
