//===- mpi_ops.cpp - message-passing dialect ops ------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "contracts.hpp"
#include "registration.hpp"

#include "halogen/dialects/mpi.hpp"
#include "halogen/ir/dialect.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace halogen::ir {

using namespace contract;

namespace {

enum class Slot { Ptr, I32, Datatype, Request };

bool slotMatches(Slot s, const TypeDesc &t) {
  switch (s) {
  case Slot::Ptr:
    return t.is<PtrType>();
  case Slot::I32:
    return t.isScalar(Scalar::I32);
  case Slot::Datatype:
    return isDatatype(t);
  case Slot::Request:
    return isRequest(t);
  }
  return false;
}

const char *slotName(Slot s) {
  switch (s) {
  case Slot::Ptr:
    return "!llvm.ptr";
  case Slot::I32:
    return "i32";
  case Slot::Datatype:
    return "!mpi.datatype";
  case Slot::Request:
    return "!mpi.request";
  }
  return "";
}

void checkSlots(const Operation &op, std::initializer_list<Slot> slots,
                std::vector<Diagnostic> &diags) {
  if (!expectOperands(op, static_cast<int>(slots.size()), diags))
    return;
  int i = 0;
  for (Slot s : slots) {
    if (op.operands[i] && !slotMatches(s, op.operands[i]->type))
      opError(op, diags,
              op.name + " operand #" + std::to_string(i) + " must be " +
                  slotName(s) + ", got " + op.operands[i]->type.str());
    ++i;
  }
}

void verifyNullary(const Operation &op, std::vector<Diagnostic> &diags) {
  expectOperands(op, 0, diags);
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
}

void verifyRankQuery(const Operation &op, std::vector<Diagnostic> &diags) {
  expectOperands(op, 0, diags);
  expectNoRegions(op, diags);
  if (expectResults(op, 1, diags))
    expectResultType(
        op, 0, [](const TypeDesc &t) { return t.isScalar(Scalar::I32); },
        "i32", diags);
}

void verifyUnwrap(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 1, diags) || !expectResults(op, 3, diags))
    return;
  expectOperandType(
      op, 0, [](const TypeDesc &t) { return t.isBufferLike(); },
      "a buffer-like type", diags);
  expectResultType(
      op, 0, [](const TypeDesc &t) { return t.is<PtrType>(); }, "!llvm.ptr",
      diags);
  expectResultType(
      op, 1, [](const TypeDesc &t) { return t.isScalar(Scalar::I32); }, "i32",
      diags);
  expectResultType(op, 2, isDatatype, "!mpi.datatype", diags);
}

void verifyPointToPoint(const Operation &op, std::vector<Diagnostic> &diags,
                        bool immediate) {
  expectNoRegions(op, diags);
  checkSlots(op, {Slot::Ptr, Slot::I32, Slot::Datatype, Slot::I32, Slot::I32},
             diags);
  if (immediate) {
    if (expectResults(op, 1, diags))
      expectResultType(op, 0, isRequest, "!mpi.request", diags);
  } else {
    expectResults(op, 0, diags);
  }
}

void verifyWait(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  checkSlots(op, {Slot::Request}, diags);
}

void verifyWaitall(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  for (size_t i = 0; i < op.operands.size(); ++i)
    if (op.operands[i] && !isRequest(op.operands[i]->type))
      opError(op, diags,
              "mpi.waitall operand #" + std::to_string(i) +
                  " must be !mpi.request");
}

void verifyTest(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  checkSlots(op, {Slot::Request}, diags);
  if (!expectResults(op, 2, diags))
    return;
  expectResultType(
      op, 0, [](const TypeDesc &t) { return t.isScalar(Scalar::I32); }, "i32",
      diags);
  expectResultType(op, 1, isRequest, "!mpi.request", diags);
}

void checkReduceOpAttr(const Operation &op, std::vector<Diagnostic> &diags) {
  auto name = op.strAttr("op");
  if (!name) {
    opError(op, diags, op.name + " requires an 'op' attribute");
    return;
  }
  if (*name != "sum" && *name != "min" && *name != "max")
    opError(op, diags, "unknown reduction op '" + *name + "'");
}

void verifyBcast(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  checkSlots(op, {Slot::Ptr, Slot::I32, Slot::Datatype, Slot::I32}, diags);
}

void verifyReduce(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  checkSlots(op, {Slot::Ptr, Slot::Ptr, Slot::I32, Slot::Datatype, Slot::I32},
             diags);
  checkReduceOpAttr(op, diags);
}

void verifyAllreduce(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  checkSlots(op, {Slot::Ptr, Slot::Ptr, Slot::I32, Slot::Datatype}, diags);
  checkReduceOpAttr(op, diags);
}

void verifyGather(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  checkSlots(op,
             {Slot::Ptr, Slot::I32, Slot::Datatype, Slot::Ptr, Slot::I32,
              Slot::Datatype, Slot::I32},
             diags);
}

} // namespace

void registerMpiOps() {
  auto &reg = DialectRegistry::get();
  reg.registerDialect("mpi");
  reg.registerOp({"mpi.init", verifyNullary});
  reg.registerOp({"mpi.finalize", verifyNullary});
  reg.registerOp({"mpi.comm_rank", verifyRankQuery});
  reg.registerOp({"mpi.comm_size", verifyRankQuery});
  reg.registerOp({"mpi.unwrap_memref", verifyUnwrap});
  reg.registerOp({"mpi.send", [](const Operation &op,
                                 std::vector<Diagnostic> &d) {
                    verifyPointToPoint(op, d, /*immediate=*/false);
                  }});
  reg.registerOp({"mpi.recv", [](const Operation &op,
                                 std::vector<Diagnostic> &d) {
                    verifyPointToPoint(op, d, /*immediate=*/false);
                  }});
  reg.registerOp({"mpi.isend", [](const Operation &op,
                                  std::vector<Diagnostic> &d) {
                    verifyPointToPoint(op, d, /*immediate=*/true);
                  }});
  reg.registerOp({"mpi.irecv", [](const Operation &op,
                                  std::vector<Diagnostic> &d) {
                    verifyPointToPoint(op, d, /*immediate=*/true);
                  }});
  reg.registerOp({"mpi.wait", verifyWait});
  reg.registerOp({"mpi.waitall", verifyWaitall});
  reg.registerOp({"mpi.test", verifyTest});
  reg.registerOp({"mpi.bcast", verifyBcast});
  reg.registerOp({"mpi.reduce", verifyReduce});
  reg.registerOp({"mpi.allreduce", verifyAllreduce});
  reg.registerOp({"mpi.gather", verifyGather});
}

//===----------------------------------------------------------------------===//
// AbiTable
//===----------------------------------------------------------------------===//

namespace mpi {

namespace {

struct Field {
  const char *key;
  std::int64_t AbiTable::*member;
};

constexpr Field abiFields[] = {
    {"COMM_WORLD", &AbiTable::commWorld},
    {"FLOAT", &AbiTable::datatypeFloat},
    {"DOUBLE", &AbiTable::datatypeDouble},
    {"INT", &AbiTable::datatypeInt},
    {"REQUEST_NULL", &AbiTable::requestNull},
    {"PROC_NULL", &AbiTable::procNull},
    {"SUCCESS", &AbiTable::success},
    {"MAX", &AbiTable::opMax},
    {"MIN", &AbiTable::opMin},
    {"SUM", &AbiTable::opSum},
    {"STATUSES_IGNORE", &AbiTable::statusesIgnore},
};

std::string trim(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

bool parseInt(const std::string &s, std::int64_t &out) {
  std::string t = trim(s);
  bool neg = false;
  size_t i = 0;
  if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
    neg = t[0] == '-';
    i = 1;
  }
  int base = 10;
  if (t.size() >= i + 2 && t[i] == '0' && (t[i + 1] == 'x' || t[i + 1] == 'X')) {
    base = 16;
    i += 2;
  }
  const char *b = t.data() + i;
  const char *e = t.data() + t.size();
  if (b == e)
    return false;
  std::uint64_t mag = 0;
  auto r = std::from_chars(b, e, mag, base);
  if (r.ec != std::errc{} || r.ptr != e)
    return false;
  out = neg ? -static_cast<std::int64_t>(mag) : static_cast<std::int64_t>(mag);
  return true;
}

} // namespace

AbiTable AbiTable::standard() { return AbiTable{}; }

Expected<AbiTable> AbiTable::parse(const std::string &text,
                                   const std::string &filename) {
  AbiTable table;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (size_t hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      return Expected<AbiTable>::failure(Diagnostic{
          {filename, lineNo, 1}, "expected 'NAME = value', got '" + line + "'"});
    std::string key = trim(line.substr(0, eq));
    if (key == "PROFILE") {
      table.profile = trim(line.substr(eq + 1));
      continue;
    }
    std::int64_t value = 0;
    if (!parseInt(line.substr(eq + 1), value))
      return Expected<AbiTable>::failure(Diagnostic{
          {filename, lineNo, 1}, "malformed integer for '" + key + "'"});
    bool known = false;
    for (const Field &f : abiFields) {
      if (key == f.key) {
        table.*(f.member) = value;
        known = true;
        break;
      }
    }
    if (!known)
      return Expected<AbiTable>::failure(
          Diagnostic{{filename, lineNo, 1}, "unknown ABI constant '" + key + "'"});
  }
  // Handle decoding relies on datatype values being distinct.
  std::set<std::int64_t> dtypes = {table.datatypeFloat, table.datatypeDouble,
                                   table.datatypeInt};
  if (dtypes.size() != 3)
    return Expected<AbiTable>::failure(
        Diagnostic{{filename, 1, 1}, "datatype values must be distinct"});
  return Expected<AbiTable>::success(std::move(table));
}

Expected<AbiTable> AbiTable::loadFile(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    return Expected<AbiTable>::failure(
        Diagnostic{{path, 1, 1}, "cannot open ABI table"});
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

Expected<AbiTable> AbiTable::fromEnvironment() {
  const char *path = std::getenv("HALOGEN_ABI");
  if (!path || !*path)
    return Expected<AbiTable>::success(standard());
  return loadFile(path);
}

std::string AbiTable::save() const {
  std::ostringstream out;
  out << "PROFILE = " << profile << "\n";
  const AbiTable &self = *this;
  for (const Field &f : abiFields)
    out << f.key << " = " << self.*(f.member) << "\n";
  return out.str();
}

std::int64_t AbiTable::datatypeFor(Scalar s) const {
  switch (s) {
  case Scalar::F32:
    return datatypeFloat;
  case Scalar::F64:
    return datatypeDouble;
  case Scalar::I32:
    return datatypeInt;
  default:
    return datatypeInt;
  }
}

std::optional<Scalar> AbiTable::scalarForDatatype(std::int64_t value) const {
  if (value == datatypeFloat)
    return Scalar::F32;
  if (value == datatypeDouble)
    return Scalar::F64;
  if (value == datatypeInt)
    return Scalar::I32;
  return std::nullopt;
}

std::optional<std::string> AbiTable::reduceOpName(std::int64_t value) const {
  if (value == opMax)
    return "max";
  if (value == opMin)
    return "min";
  if (value == opSum)
    return "sum";
  return std::nullopt;
}

std::int64_t AbiTable::reduceOpValue(const std::string &name) const {
  if (name == "max")
    return opMax;
  if (name == "min")
    return opMin;
  return opSum;
}

} // namespace mpi

} // namespace halogen::ir
