//===- mpi_tests.cpp - ABI table and message-passing lowering tests --------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"

#include "halogen/dialects/mpi.hpp"
#include "halogen/exec/interpreter.hpp"
#include "halogen/exec/kernels.hpp"
#include "halogen/ir/parser.hpp"
#include "halogen/ir/pass.hpp"
#include "halogen/ir/printer.hpp"
#include "halogen/ir/verifier.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace halogen;
using ir::Operation;
using ir::mpi::AbiTable;

namespace {

std::string fixture(const std::string &name) {
  std::ifstream in(std::string(HALOGEN_FIXTURES) + "/" + name,
                   std::ios::binary);
  REQUIRE_MESSAGE(static_cast<bool>(in), "cannot open " << name);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, int> staticOpCounts(const Operation &root) {
  std::map<std::string, int> counts;
  ir::walk(root, [&](const Operation &op) { ++counts[op.name]; });
  return counts;
}

} // namespace

//===----------------------------------------------------------------------===//
// ABI tables
//===----------------------------------------------------------------------===//

TEST_CASE("the ABI table round-trips through its file format") {
  AbiTable std1 = AbiTable::standard();
  auto back = AbiTable::parse(std1.save(), "roundtrip");
  REQUIRE_MESSAGE(back.ok(), back.diagText());
  CHECK(back->profile == std1.profile);
  CHECK(back->commWorld == std1.commWorld);
  CHECK(back->datatypeFloat == std1.datatypeFloat);
  CHECK(back->datatypeDouble == std1.datatypeDouble);
  CHECK(back->datatypeInt == std1.datatypeInt);
  CHECK(back->requestNull == std1.requestNull);
  CHECK(back->procNull == std1.procNull);
  CHECK(back->success == std1.success);
  CHECK(back->opMax == std1.opMax);
  CHECK(back->opMin == std1.opMin);
  CHECK(back->opSum == std1.opSum);
  CHECK(back->statusesIgnore == std1.statusesIgnore);
}

TEST_CASE("ABI files accept hex, decimal, and comments") {
  auto t = AbiTable::parse("# a comment\n"
                           "PROFILE = toy\n"
                           "COMM_WORLD = 0x10\n"
                           "DOUBLE = 77\n"
                           "PROC_NULL = -2\n",
                           "toy.abi");
  REQUIRE_MESSAGE(t.ok(), t.diagText());
  CHECK(t->profile == "toy");
  CHECK(t->commWorld == 16);
  CHECK(t->datatypeDouble == 77);
  CHECK(t->procNull == -2);
  // Unset names keep their defaults.
  CHECK(t->opSum == AbiTable().opSum);
}

TEST_CASE("ABI files reject unknown names and colliding datatypes") {
  auto bad = AbiTable::parse("COMM_WURLD = 3\n", "bad.abi");
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.diagText().find("COMM_WURLD") != std::string::npos);

  auto collide = AbiTable::parse("FLOAT = 9\nDOUBLE = 9\n", "collide.abi");
  REQUIRE_FALSE(collide.ok());

  auto garbage = AbiTable::parse("FLOAT nine\n", "garbage.abi");
  REQUIRE_FALSE(garbage.ok());
}

TEST_CASE("datatype and reduce-op lookups invert each other") {
  AbiTable t = AbiTable::standard();
  CHECK(t.scalarForDatatype(t.datatypeFor(ir::Scalar::F32)) == ir::Scalar::F32);
  CHECK(t.scalarForDatatype(t.datatypeFor(ir::Scalar::F64)) == ir::Scalar::F64);
  CHECK(t.scalarForDatatype(t.datatypeFor(ir::Scalar::I32)) == ir::Scalar::I32);
  CHECK_FALSE(t.scalarForDatatype(12345).has_value());

  CHECK(t.reduceOpName(t.opSum) == std::string("sum"));
  CHECK(t.reduceOpName(t.opMin) == std::string("min"));
  CHECK(t.reduceOpName(t.opMax) == std::string("max"));
  CHECK_FALSE(t.reduceOpName(9999).has_value());
  CHECK(t.reduceOpValue("sum") == t.opSum);
  CHECK(t.reduceOpValue("min") == t.opMin);
  CHECK(t.reduceOpValue("max") == t.opMax);
}

//===----------------------------------------------------------------------===//
// Unwrapping buffers
//===----------------------------------------------------------------------===//

TEST_CASE("unwrapping a buffer yields its flat element count and datatype") {
  auto mod = ir::parseModule(R"(builtin.module {
  func.func @probe(%m : memref<64x2xf64>) -> (i32, !mpi.datatype) {
    %p, %c, %d = mpi.unwrap_memref %m : memref<64x2xf64> -> (!llvm.ptr, i32, !mpi.datatype)
    func.return %c, %d : i32, !mpi.datatype
  }
}
)",
                             "unwrap");
  REQUIRE_MESSAGE(mod.ok(), mod.diagText());
  REQUIRE(ir::verifyModule(**mod).empty());

  exec::Interpreter interp(**mod);
  auto buf = exec::Buffer::make(ir::Scalar::F64, {64, 2});
  auto res = interp.invoke("probe", {exec::RtValue{0, 0, 0, buf}});
  REQUIRE(res.size() == 2);
  CHECK(res[0].i == 128);
  CHECK(res[1].i == AbiTable::standard().datatypeDouble);
}

TEST_CASE("the send fragment parses with the documented op shapes") {
  auto mod = ir::parseModule(fixture("listing4.xir"), "listing4.xir");
  REQUIRE_MESSAGE(mod.ok(), mod.diagText());
  const Operation *unwrap = nullptr;
  const Operation *send = nullptr;
  ir::walk(**mod, [&](const Operation &op) {
    if (op.name == "mpi.unwrap_memref")
      unwrap = &op;
    if (op.name == "mpi.send")
      send = &op;
  });
  REQUIRE(unwrap != nullptr);
  REQUIRE(send != nullptr);
  REQUIRE(unwrap->results.size() == 3);
  CHECK(unwrap->results[0].type.is<ir::PtrType>());
  CHECK(unwrap->results[1].type.isScalar(ir::Scalar::I32));
  REQUIRE(unwrap->results[2].type.is<ir::MpiType>());
  CHECK(unwrap->results[2].type.as<ir::MpiType>().kind ==
        ir::MpiKind::Datatype);
  CHECK(send->operands.size() == 5);
  CHECK(send->operands[0] == &unwrap->results[0]);
}

//===----------------------------------------------------------------------===//
// Lowering halo swaps to message passing
//===----------------------------------------------------------------------===//

namespace {

ir::ModuleOp decomposedHeat() {
  exec::KernelSpec spec;
  spec.kind = "heat";
  spec.rank = 2;
  spec.extent = 64;
  spec.order = 2;
  auto mod = exec::buildKernel(spec);
  REQUIRE(mod.ok());
  auto out = ir::runPipeline(
      **mod, "propagate-bounds,decompose grid=2x2,eliminate-redundant-swaps");
  REQUIRE_MESSAGE(out.ok(), out.diagText());
  return std::move(*out);
}

} // namespace

TEST_CASE("swaps lower to paired isend/irecv with one completion barrier") {
  auto dmp = decomposedHeat();
  auto out = ir::runPipeline(*dmp, "lower-dmp-to-mpi");
  REQUIRE_MESSAGE(out.ok(), out.diagText());

  auto counts = staticOpCounts(**out);
  CHECK(counts["dmp.swap"] == 0);
  // One swap over a 2-d grid: a send and a receive per face, one waitall.
  CHECK(counts["mpi.isend"] == 4);
  CHECK(counts["mpi.irecv"] == 4);
  CHECK(counts["mpi.waitall"] == 1);
  CHECK(counts["mpi.comm_rank"] == 1);
  CHECK(counts["mpi.comm_size"] == 1);

  // The driver takes the step count plus one buffer per slot and returns
  // the final binding.
  const Operation *run = ir::lookupFunc(**out, "run");
  REQUIRE(run != nullptr);
  REQUIRE(run->regions[0].args.size() == 3);
  CHECK(run->regions[0].args[0].type.isScalar(ir::Scalar::Index));

  // Rank queries and neighbor arithmetic sit in front of the time loop.
  const auto &ops = run->regions[0].ops;
  int loopAt = -1, rankAt = -1;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i]->name == "loop.for" && loopAt < 0)
      loopAt = static_cast<int>(i);
    if (ops[i]->name == "mpi.comm_rank")
      rankAt = static_cast<int>(i);
  }
  REQUIRE(loopAt >= 0);
  REQUIRE(rankAt >= 0);
  CHECK(rankAt < loopAt);
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (ops[i]->name == "mpi.isend" || ops[i]->name == "mpi.irecv")
      FAIL_CHECK("communication escaped the time loop");

  // The lowered module still prints and reparses cleanly.
  std::string text = ir::printModule(**out);
  auto back = ir::parseModule(text, "reprint");
  REQUIRE_MESSAGE(back.ok(), back.diagText());
  CHECK(ir::printModule(**back) == text);
}

TEST_CASE("message ops lower to plain calls using the ABI constants") {
  auto dmp = decomposedHeat();
  auto out = ir::runPipeline(*dmp, "lower-dmp-to-mpi,lower-mpi-to-func");
  REQUIRE_MESSAGE(out.ok(), out.diagText());

  auto counts = staticOpCounts(**out);
  for (const auto &[name, n] : counts)
    CHECK_MESSAGE(name.rfind("mpi.", 0) != 0,
                  "op " << name << " survived the lowering");
  CHECK(counts["func.call"] > 0);

  // Every callee resolves to a declared external function.
  std::set<std::string> callees;
  ir::walk(**out, [&](const Operation &op) {
    if (op.name == "func.call")
      callees.insert(op.attr("callee")->as<ir::StringAttr>().value);
  });
  CHECK(callees.count("MPI_Comm_rank") == 1);
  CHECK(callees.count("MPI_Isend") == 1);
  CHECK(callees.count("MPI_Irecv") == 1);
  CHECK(callees.count("MPI_Waitall") == 1);
  for (const auto &c : callees) {
    const Operation *decl = ir::lookupFunc(**out, c);
    REQUIRE_MESSAGE(decl != nullptr, "missing declaration for " << c);
    // Declarations carry no body region at all.
    CHECK(decl->regions.empty());
  }

  // The communicator handle is materialized from the ABI table.
  AbiTable t = AbiTable::standard();
  std::string text = ir::printModule(**out);
  CHECK(text.find(std::to_string(t.commWorld)) != std::string::npos);

  auto back = ir::parseModule(text, "reprint");
  REQUIRE_MESSAGE(back.ok(), back.diagText());
  CHECK(ir::printModule(**back) == text);
}

TEST_CASE("the function-level lowering honors a custom ABI table") {
  auto dmp = decomposedHeat();
  // Routing the option through the pipeline string exercises the parser.
  auto out = ir::runPipeline(
      *dmp, "lower-dmp-to-mpi,lower-mpi-to-func abi=" +
                std::string(HALOGEN_ABI_FILE));
  REQUIRE_MESSAGE(out.ok(), out.diagText());
  std::string text = ir::printModule(**out);
  CHECK(text.find(std::to_string(AbiTable::standard().commWorld)) !=
        std::string::npos);
}
