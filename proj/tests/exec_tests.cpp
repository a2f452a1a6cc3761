//===- exec_tests.cpp - multi-rank simulator tests --------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"

#include "halogen/exec/interpreter.hpp"
#include "halogen/exec/kernels.hpp"
#include "halogen/exec/serial.hpp"
#include "halogen/exec/simulator.hpp"
#include "halogen/exec/transport.hpp"
#include "halogen/ir/parser.hpp"
#include "halogen/ir/pass.hpp"
#include "halogen/ir/printer.hpp"
#include "halogen/ir/verifier.hpp"

#include <algorithm>
#include <string>
#include <vector>

using namespace halogen;
using exec::Buffer;
using ir::ModuleOp;
using ir::Operation;

namespace {

ModuleOp buildHeat(int rank, std::int64_t extent, int order) {
  exec::KernelSpec spec;
  spec.kind = "heat";
  spec.rank = rank;
  spec.extent = extent;
  spec.order = order;
  auto mod = exec::buildKernel(spec);
  REQUIRE_MESSAGE(mod.ok(), mod.diagText());
  return std::move(*mod);
}

ModuleOp lower(const Operation &module, const std::string &pipeline) {
  auto out = ir::runPipeline(module, pipeline);
  REQUIRE_MESSAGE(out.ok(), out.diagText());
  return std::move(*out);
}

std::vector<std::shared_ptr<Buffer>>
cloneAll(const std::vector<std::shared_ptr<Buffer>> &bufs) {
  std::vector<std::shared_ptr<Buffer>> out;
  for (const auto &b : bufs)
    out.push_back(b->clone());
  return out;
}

std::vector<std::uint64_t>
prints(const std::vector<std::shared_ptr<Buffer>> &bufs) {
  std::vector<std::uint64_t> out;
  for (const auto &b : bufs)
    out.push_back(exec::fingerprint(*b));
  return out;
}

} // namespace

//===----------------------------------------------------------------------===//
// Transport
//===----------------------------------------------------------------------===//

TEST_CASE("the transport keeps per-channel FIFO order and exact matching") {
  exec::Transport net;
  CHECK(net.pendingCount() == 0);
  net.send(0, 1, 7, {1, 2});
  net.send(0, 1, 7, {3});
  net.send(0, 1, 8, {9});
  net.send(2, 1, 7, {4, 5, 6});
  CHECK(net.pendingCount() == 4);

  std::vector<unsigned char> got;
  // No wildcard: the (0,1,7) queue is untouched by other channels.
  CHECK_FALSE(net.tryRecv(1, 0, 7, got));
  CHECK(net.hasMessage(0, 1, 7));
  REQUIRE(net.tryRecv(0, 1, 7, got));
  CHECK(got == std::vector<unsigned char>{1, 2});
  REQUIRE(net.tryRecv(0, 1, 7, got));
  CHECK(got == std::vector<unsigned char>{3});
  CHECK_FALSE(net.tryRecv(0, 1, 7, got));
  REQUIRE(net.tryRecv(0, 1, 8, got));
  CHECK(got == std::vector<unsigned char>{9});
  REQUIRE(net.tryRecv(2, 1, 7, got));
  CHECK(got == std::vector<unsigned char>{4, 5, 6});
  CHECK(net.pendingCount() == 0);
}

//===----------------------------------------------------------------------===//
// Scatter and gather
//===----------------------------------------------------------------------===//

TEST_CASE("gathering the scattered parts reproduces every core cell") {
  auto mod = buildHeat(2, 64, 2);
  auto dmp = lower(*mod, "propagate-bounds,decompose grid=2x4");
  auto geom = exec::geometryOf(*dmp);
  REQUIRE_MESSAGE(geom.ok(), geom.diagText());
  CHECK(geom->ranks() == 8);
  CHECK(geom->coreSize == std::vector<std::int64_t>{32, 16});

  auto globalInit = exec::initialFields(*geom->reference);
  REQUIRE(globalInit.size() == 2);

  // Start the output from a poisoned copy so untouched cells would show.
  auto out = cloneAll(globalInit);
  for (auto &b : out)
    for (std::int64_t i = 0; i < b->count(); ++i)
      b->setF64(i, -1.0);

  for (std::int64_t r = 0; r < geom->ranks(); ++r) {
    auto local = exec::scatterRank(*geom, globalInit, r);
    exec::gatherRank(*geom, r, local, out);
  }

  // Cores tile the domain; the halo frame around it stays poisoned.
  for (std::size_t f = 0; f < out.size(); ++f) {
    const Buffer &g = *globalInit[f];
    const Buffer &o = *out[f];
    std::vector<std::int64_t> raw{0, 0};
    for (raw[0] = 0; raw[0] < o.shape[0]; ++raw[0])
      for (raw[1] = 0; raw[1] < o.shape[1]; ++raw[1]) {
        bool inCore = true;
        for (int d = 0; d < 2; ++d) {
          std::int64_t logical = raw[d] + o.lb[d];
          if (logical < 0 || logical >= 64)
            inCore = false;
        }
        std::int64_t i = o.flatIndex(raw);
        if (inCore)
          CHECK(o.getF64(i) == g.getF64(i));
        else
          CHECK(o.getF64(i) == -1.0);
      }
  }
}

//===----------------------------------------------------------------------===//
// Cross-level equivalence
//===----------------------------------------------------------------------===//

TEST_CASE("every lowering level reproduces the serial result bitwise") {
  struct Case {
    exec::KernelSpec spec;
    std::string grid;
    std::int64_t T;
  };
  const Case cases[] = {
      {{"heat", 2, 12, 2}, "2x2", 3},
      {{"wave", 1, 16, 4}, "4", 4},
      {{"copy", 2, 8, 2}, "2x1", 2},
  };
  auto abi = ir::mpi::AbiTable::loadFile(HALOGEN_ABI_FILE);
  REQUIRE_MESSAGE(abi.ok(), abi.diagText());
  CHECK(abi->profile == "simulated-mpich");

  for (const Case &c : cases) {
    CAPTURE(c.spec.kind);
    auto mod = exec::buildKernel(c.spec);
    REQUIRE_MESSAGE(mod.ok(), mod.diagText());
    auto init = exec::initialFields(**mod);
    auto serialOut = exec::runSerialStencil(**mod, cloneAll(init), c.T);
    auto want = prints(serialOut);

    std::string base = "propagate-bounds,decompose grid=" + c.grid +
                       ",eliminate-redundant-swaps";
    const std::string pipes[] = {
        base,
        base + ",lower-dmp-to-mpi",
        base + ",lower-dmp-to-mpi,lower-mpi-to-func abi=" +
            std::string(HALOGEN_ABI_FILE),
    };
    for (const auto &pipe : pipes) {
      CAPTURE(pipe);
      auto low = lower(**mod, pipe);
      exec::SimOptions opts;
      opts.timesteps = c.T;
      opts.abi = *abi;
      auto res = exec::simulate(*low, init, opts);
      REQUIRE_MESSAGE(res.ok, res.error);
      CHECK(prints(res.fields) == want);
    }
  }
}

TEST_CASE("the gathered result is independent of the scheduler seed") {
  auto mod = buildHeat(2, 8, 2);
  auto init = exec::initialFields(*mod);
  auto serialOut = exec::runSerialStencil(*mod, cloneAll(init), 2);
  auto want = prints(serialOut);

  auto mpiLevel = lower(*mod, "propagate-bounds,decompose grid=2x2,"
                              "eliminate-redundant-swaps,lower-dmp-to-mpi");
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 42ull, 123ull}) {
    CAPTURE(seed);
    exec::SimOptions opts;
    opts.timesteps = 2;
    opts.seed = seed;
    auto res = exec::simulate(*mpiLevel, init, opts);
    REQUIRE_MESSAGE(res.ok, res.error);
    CHECK(prints(res.fields) == want);
  }
}

//===----------------------------------------------------------------------===//
// Invariant communication is hoisted out of the time loop
//===----------------------------------------------------------------------===//

TEST_CASE("rank queries and neighbor arithmetic run once regardless of T") {
  auto mod = buildHeat(2, 8, 2);
  auto init = exec::initialFields(*mod);
  auto mpiLevel = lower(*mod, "propagate-bounds,decompose grid=1x2,"
                              "eliminate-redundant-swaps,lower-dmp-to-mpi");

  auto countsAt = [&](std::int64_t T) {
    exec::SimOptions opts;
    opts.timesteps = T;
    auto res = exec::simulate(*mpiLevel, init, opts);
    REQUIRE_MESSAGE(res.ok, res.error);
    CHECK(res.rankOpCounts.size() == 2);
    return res.opCounts;
  };
  auto one = countsAt(1);
  auto many = countsAt(4);

  // Per-rank setup happens once however long the run is.
  CHECK(one["mpi.comm_rank"] == many["mpi.comm_rank"]);
  CHECK(one["mpi.comm_size"] == many["mpi.comm_size"]);
  CHECK(one["mpi.comm_rank"] == 2);
  CHECK(one["arith.divi"] == many["arith.divi"]);
  CHECK(one["arith.remi"] == many["arith.remi"]);
  CHECK(one["memref.alloc"] == many["memref.alloc"]);
  CHECK(one["arith.divi"] > 0);

  // Communication scales with the step count.
  CHECK(many["mpi.isend"] == 4 * one["mpi.isend"]);
  CHECK(many["mpi.irecv"] == 4 * one["mpi.irecv"]);
  CHECK(many["mpi.waitall"] == 4 * one["mpi.waitall"]);
  CHECK(one["mpi.isend"] == 2 * 4);  // 2 ranks x 4 declared directions
  CHECK(one["mpi.waitall"] == 2);
}

//===----------------------------------------------------------------------===//
// Deadlock detection
//===----------------------------------------------------------------------===//

TEST_CASE("an unmatchable receive is reported as a deadlock, per rank") {
  auto mod = buildHeat(2, 8, 2);
  auto init = exec::initialFields(*mod);
  auto mpiLevel = lower(*mod, "propagate-bounds,decompose grid=1x2,"
                              "eliminate-redundant-swaps,lower-dmp-to-mpi");

  // Retag the last posted receive (the +1 face of dimension 1). Rank 0 has
  // a real neighbor there, so its receive can never match rank 1's send;
  // rank 1 sees the grid edge and finishes.
  Operation *victim = nullptr;
  ir::walk(*mpiLevel, [&](Operation &op) {
    if (op.name == "mpi.irecv")
      victim = &op;
  });
  REQUIRE(victim != nullptr);
  ir::Region *home = victim->parent;
  REQUIRE(home != nullptr);
  auto badTag = std::make_unique<Operation>("arith.constant");
  badTag->setAttr("value", ir::Attribute(ir::IntAttr{999, ir::Scalar::I32}));
  ir::Value *tagVal = badTag->addResult(ir::TypeDesc(ir::Scalar::I32));
  badTag->parent = home;
  auto at = std::find_if(home->ops.begin(), home->ops.end(),
                         [&](const auto &p) { return p.get() == victim; });
  REQUIRE(at != home->ops.end());
  home->ops.insert(at, std::move(badTag));
  victim->operands[4] = tagVal;

  exec::SimOptions opts;
  opts.timesteps = 1;
  auto res = exec::simulate(*mpiLevel, init, opts);
  REQUIRE_FALSE(res.ok);
  CHECK(res.error.find("deadlock") != std::string::npos);
  CHECK(res.error.find("rank 0") != std::string::npos);
}

//===----------------------------------------------------------------------===//
// Collectives
//===----------------------------------------------------------------------===//

namespace {

/// A two-rank, two-field harness: the reference splits a 4-cell line over
/// a grid of 2, and the hand-written driver below runs one collective over
/// the first field. Observable results land in the second field.
struct CollectiveRig {
  ModuleOp module;
  std::vector<std::shared_ptr<Buffer>> init;

  explicit CollectiveRig(const std::string &runBody) {
    exec::KernelSpec refSpec;
    refSpec.kind = "copy";
    refSpec.rank = 1;
    refSpec.extent = 4;
    auto ref = exec::buildKernel(refSpec);
    REQUIRE_MESSAGE(ref.ok(), ref.diagText());

    std::string text =
        "builtin.module {\n"
        "  func.func @run(%T : index, %a : !field<[0,2]xf64>, %b : "
        "!field<[0,2]xf64>) -> (!field<[0,2]xf64>, !field<[0,2]xf64>) {\n" +
        runBody +
        "    func.return %a, %b : !field<[0,2]xf64>, !field<[0,2]xf64>\n"
        "  }\n"
        "}\n";
    auto mod = ir::parseModule(text, "collective");
    REQUIRE_MESSAGE(mod.ok(), mod.diagText());
    (*mod)->setAttr("dmp.topology", ir::Attribute(ir::GridAttr{{2}}));
    (*mod)->setAttr("dmp.reference",
                    ir::Attribute::makeString(ir::printModule(**ref)));
    auto diags = ir::verifyModule(**mod);
    REQUIRE_MESSAGE(diags.empty(), (diags.empty() ? "" : diags[0].str()));
    module = std::move(*mod);

    auto a = Buffer::forBounds(ir::Scalar::F64, ir::Bounds({{0, 4}}));
    auto b = Buffer::forBounds(ir::Scalar::F64, ir::Bounds({{0, 4}}));
    const double av[] = {1.5, 2.25, 4.5, 8.125};
    const double bv[] = {100.0, 200.0, 300.0, 400.0};
    for (std::int64_t i = 0; i < 4; ++i) {
      a->setF64(i, av[i]);
      b->setF64(i, bv[i]);
    }
    init = {a, b};
  }

  std::vector<double> run() {
    exec::SimOptions opts;
    opts.timesteps = 1;
    auto res = exec::simulate(*module, init, opts);
    REQUIRE_MESSAGE(res.ok, res.error);
    REQUIRE(res.fields.size() == 2);
    // Field 0 passes through untouched by scatter/gather.
    for (std::int64_t i = 0; i < 4; ++i)
      CHECK(res.fields[0]->getF64(i) == init[0]->getF64(i));
    std::vector<double> out;
    for (std::int64_t i = 0; i < 4; ++i)
      out.push_back(res.fields[1]->getF64(i));
    return out;
  }
};

const char *kUnwrapBoth =
    "    %pa, %ca, %da = mpi.unwrap_memref %a : !field<[0,2]xf64> -> "
    "(!llvm.ptr, i32, !mpi.datatype)\n"
    "    %pb, %cb, %db = mpi.unwrap_memref %b : !field<[0,2]xf64> -> "
    "(!llvm.ptr, i32, !mpi.datatype)\n";

} // namespace

TEST_CASE("allreduce folds contributions in rank order on every rank") {
  CollectiveRig rig(std::string(kUnwrapBoth) +
                    "    mpi.allreduce(%pa, %pb, %ca, %da) {op = \"sum\"} : "
                    "(!llvm.ptr, !llvm.ptr, i32, !mpi.datatype) -> ()\n");
  // Rank 0 holds [1.5, 2.25], rank 1 holds [4.5, 8.125]; both end with the
  // elementwise sum in field b.
  CHECK(rig.run() == std::vector<double>{6.0, 10.375, 6.0, 10.375});
}

TEST_CASE("reduce deposits the fold at the root only") {
  CollectiveRig rig(std::string(kUnwrapBoth) +
                    "    %root = arith.constant 1 : i32\n"
                    "    mpi.reduce(%pa, %pb, %ca, %da, %root) {op = \"min\"} "
                    ": (!llvm.ptr, !llvm.ptr, i32, !mpi.datatype, i32) -> ()\n");
  // Rank 0 keeps its scattered b = [100, 200]; rank 1 receives the min.
  CHECK(rig.run() == std::vector<double>{100.0, 200.0, 1.5, 2.25});
}

TEST_CASE("bcast overwrites every rank's buffer with the root's data") {
  CollectiveRig rig(std::string(kUnwrapBoth) +
                    "    %root = arith.constant 0 : i32\n"
                    "    mpi.bcast(%pb, %cb, %db, %root) : "
                    "(!llvm.ptr, i32, !mpi.datatype, i32) -> ()\n");
  // Rank 1's b becomes rank 0's scattered b = [100, 200].
  CHECK(rig.run() == std::vector<double>{100.0, 200.0, 100.0, 200.0});
}

TEST_CASE("gather places each rank's slab at rank times count") {
  CollectiveRig rig(
      std::string(kUnwrapBoth) +
      "    %root = arith.constant 0 : i32\n"
      "    %c = memref.alloc() : memref<4xf64>\n"
      "    %pc, %cc, %dc = mpi.unwrap_memref %c : memref<4xf64> -> "
      "(!llvm.ptr, i32, !mpi.datatype)\n"
      "    mpi.gather(%pa, %ca, %da, %pc, %ca, %dc, %root) : (!llvm.ptr, "
      "i32, !mpi.datatype, !llvm.ptr, i32, !mpi.datatype, i32) -> ()\n"
      // Copy the second slab of the gather buffer into field b: on the
      // root that is rank 1's contribution, elsewhere the alloc's zeros.
      "    %i0 = arith.constant 0 : index\n"
      "    %i1 = arith.constant 1 : index\n"
      "    %i2 = arith.constant 2 : index\n"
      "    %i3 = arith.constant 3 : index\n"
      "    %v2 = memref.load %c[%i2] : memref<4xf64>\n"
      "    memref.store %v2, %b[%i0] : !field<[0,2]xf64>\n"
      "    %v3 = memref.load %c[%i3] : memref<4xf64>\n"
      "    memref.store %v3, %b[%i1] : !field<[0,2]xf64>\n");
  CHECK(rig.run() == std::vector<double>{4.5, 8.125, 0.0, 0.0});
}
