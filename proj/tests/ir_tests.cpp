//===- ir_tests.cpp - parser, printer, and verifier tests ------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"

#include "halogen/ir/parser.hpp"
#include "halogen/ir/pass.hpp"
#include "halogen/ir/printer.hpp"
#include "halogen/ir/verifier.hpp"

#include "dialects/lowering_common.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace halogen;
using ir::Attribute;
using ir::FloatAttr;
using ir::FuncType;
using ir::ModuleOp;
using ir::Operation;
using ir::Region;
using ir::Scalar;
using ir::TypeAttr;
using ir::TypeDesc;
using ir::Value;
using ir::lowering::Builder;

namespace {

std::string readFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(static_cast<bool>(in), "cannot open " << path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string fixture(const std::string &name) {
  return readFile(std::string(HALOGEN_FIXTURES) + "/" + name);
}

/// Parse, require success, and require a clean verify.
ModuleOp parseClean(const std::string &text, const std::string &name) {
  auto mod = ir::parseModule(text, name);
  REQUIRE_MESSAGE(mod.ok(), mod.diagText());
  auto diags = ir::verifyModule(**mod);
  REQUIRE_MESSAGE(diags.empty(), (diags.empty() ? "" : diags[0].str()));
  return std::move(*mod);
}

} // namespace

TEST_CASE("fixture modules parse, verify, and reprint to a fixed point") {
  for (const char *name : {"listing1.xir", "listing2.xir", "listing4.xir"}) {
    CAPTURE(name);
    auto mod = parseClean(fixture(name), name);
    std::string once = ir::printModule(*mod);
    auto again = parseClean(once, "reprint");
    std::string twice = ir::printModule(*again);
    CHECK_MESSAGE(once == twice, "reprint of " << name << " is not stable");
  }
}

TEST_CASE("the jacobi fixture has the documented structure") {
  auto mod = parseClean(fixture("listing1.xir"), "listing1.xir");
  const Operation *func = ir::lookupFunc(*mod, "jacobi");
  REQUIRE(func != nullptr);
  std::map<std::string, int> counts;
  ir::walk(*func, [&](const Operation &op) { ++counts[op.name]; });
  CHECK(counts["stencil.load"] == 1);
  CHECK(counts["stencil.apply"] == 1);
  CHECK(counts["stencil.access"] == 3);
  CHECK(counts["stencil.store"] == 1);
  CHECK(counts["arith.addf"] == 2);
  CHECK(counts["stencil.return"] == 1);
}

TEST_CASE("the halo-exchange fixture carries its attribute payload through") {
  auto mod = parseClean(fixture("listing2.xir"), "listing2.xir");
  const Operation *swap = nullptr;
  ir::walk(*mod, [&](const Operation &op) {
    if (op.name == "dmp.swap")
      swap = &op;
  });
  REQUIRE(swap != nullptr);
  const auto *grid = swap->attr("grid")->dynAs<ir::GridAttr>();
  REQUIRE(grid != nullptr);
  CHECK(grid->dims == std::vector<std::int64_t>{2, 2});
  const auto *arr = swap->attr("exchanges")->dynAs<ir::ArrayAttr>();
  REQUIRE(arr != nullptr);
  REQUIRE(arr->elems.size() == 2);
  const auto *e0 = arr->elems[0].dynAs<ir::ExchangeAttr>();
  const auto *e1 = arr->elems[1].dynAs<ir::ExchangeAttr>();
  REQUIRE(e0 != nullptr);
  REQUIRE(e1 != nullptr);
  CHECK(e0->at == std::vector<std::int64_t>{4, 0});
  CHECK(e0->size == std::vector<std::int64_t>{100, 4});
  CHECK(e0->offset == std::vector<std::int64_t>{0, 4});
  CHECK(e0->to == std::vector<std::int64_t>{0, -1});
  CHECK(e1->at == std::vector<std::int64_t>{4, 104});
  CHECK(e1->offset == std::vector<std::int64_t>{0, -4});
  CHECK(e1->to == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("parse errors carry file, line, and column") {
  struct Case {
    const char *text;
    int line;
  };
  const Case cases[] = {
      {"builtin.module {\n  func.func @f() {\n    %0 = arith.constant 1\n"
       "    func.return\n  }\n}\n",
       3}, // missing ": type"
      {"builtin.module {\n  func.func @f() {\n    func.return\n", 3},
      {"builtin.module {\n  func.func @f() {\n    %0 = bogus token\n"
       "    func.return\n  }\n}\n",
       3},
      {"builtin.module {\n  func.func @f(%a : !field<oops>) {\n"
       "    func.return\n  }\n}\n",
       2},
  };
  for (const Case &c : cases) {
    CAPTURE(c.text);
    auto mod = ir::parseModule(c.text, "bad.xir");
    REQUIRE_FALSE(mod.ok());
    REQUIRE_FALSE(mod.diags.empty());
    CHECK(mod.diags[0].loc.file == "bad.xir");
    CHECK(mod.diags[0].loc.line >= c.line);
    CHECK(mod.diags[0].loc.col > 0);
    std::string s = mod.diags[0].str();
    CHECK(s.find("bad.xir:") == 0);
  }
}

TEST_CASE("every malformed fixture is rejected with a diagnostic") {
  namespace fs = std::filesystem;
  int seen = 0;
  for (const auto &entry :
       fs::directory_iterator(std::string(HALOGEN_FIXTURES) + "/negative")) {
    if (entry.path().extension() != ".xir")
      continue;
    ++seen;
    CAPTURE(entry.path().filename().string());
    auto mod = ir::parseModule(readFile(entry.path().string()),
                               entry.path().filename().string());
    if (!mod.ok()) {
      CHECK_FALSE(mod.diags.empty());
      continue;
    }
    auto diags = ir::verifyModule(**mod);
    CHECK_FALSE(diags.empty());
  }
  CHECK(seen >= 10);
}

TEST_CASE("float constants survive printing bit for bit") {
  const double values[] = {1.0 / 3.0,
                           0.1,
                           -0.0,
                           1e-300,
                           5e-324,
                           0.01,
                           -21.0 / 8.0,
                           1.0e308,
                           123456789.123456789};
  auto module = ir::makeModule();
  auto func = std::make_unique<Operation>("func.func");
  func->setAttr("sym_name", Attribute::makeString("f"));
  func->setAttr("function_type", Attribute(TypeAttr{TypeDesc(FuncType{})}));
  Region &body = func->addRegion();
  body.owner = func.get();
  Builder b(body);
  for (double v : values) {
    Operation *op = b.op("arith.constant", {}, {TypeDesc(Scalar::F64)});
    op->setAttr("value", Attribute(FloatAttr::fromDouble(v)));
  }
  b.op("func.return", {}, {});
  ir::moduleBody(*module).ops.push_back(std::move(func));

  auto reparsed = parseClean(ir::printModule(*module), "floats");
  std::vector<std::uint64_t> bits;
  ir::walk(*reparsed, [&](const Operation &op) {
    if (op.name != "arith.constant")
      return;
    const auto *fa = op.attr("value")->dynAs<FloatAttr>();
    REQUIRE(fa != nullptr);
    bits.push_back(fa->bits);
  });
  REQUIRE(bits.size() == std::size(values));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    std::uint64_t expect;
    std::memcpy(&expect, &values[i], 8);
    CHECK(bits[i] == expect);
  }
}

//===----------------------------------------------------------------------===//
// Randomized round-trip property
//===----------------------------------------------------------------------===//

namespace {

/// Grows a random but well-formed function body and returns the module.
/// Exercises scalar arithmetic, comparisons, selects, and nested loops.
ModuleOp randomModule(std::mt19937_64 &rng) {
  auto pick = [&](std::int64_t n) {
    return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
  };
  auto module = ir::makeModule();
  auto func = std::make_unique<Operation>("func.func");
  func->setAttr("sym_name",
                Attribute::makeString("f" + std::to_string(pick(1000))));
  Region &body = func->addRegion();
  body.owner = func.get();

  const Scalar scalars[] = {Scalar::I32, Scalar::I64, Scalar::F32,
                            Scalar::F64, Scalar::Index};
  std::map<Scalar, std::vector<Value *>> pools;
  FuncType sig;
  for (int i = 0, n = static_cast<int>(pick(4)); i < n; ++i) {
    Scalar s = scalars[pick(5)];
    sig.ins.push_back(TypeDesc(s));
    pools[s].push_back(body.addArg(TypeDesc(s)));
  }
  func->setAttr("function_type", Attribute(TypeAttr{TypeDesc(sig)}));

  Builder b(body);
  std::vector<Value *> bools;
  int ops = 3 + static_cast<int>(pick(12));
  for (int i = 0; i < ops; ++i) {
    switch (pick(6)) {
    case 0: {
      Scalar s = scalars[pick(5)];
      if (ir::isFloatScalar(s)) {
        Operation *op = b.op("arith.constant", {}, {TypeDesc(s)});
        double v = static_cast<double>(static_cast<std::int64_t>(pick(2000)) -
                                       1000) /
                   64.0;
        op->setAttr("value", Attribute(s == Scalar::F32
                                           ? FloatAttr::fromFloat(
                                                 static_cast<float>(v))
                                           : FloatAttr::fromDouble(v)));
        pools[s].push_back(Builder::res(op));
      } else {
        pools[s].push_back(b.constant(s, pick(100)));
      }
      break;
    }
    case 1: {
      Scalar s = scalars[pick(2)]; // i32 or i64
      auto &p = pools[s];
      if (p.size() < 2)
        break;
      const char *names[] = {"arith.addi", "arith.subi", "arith.muli"};
      Value *x = p[pick(static_cast<std::int64_t>(p.size()))];
      Value *y = p[pick(static_cast<std::int64_t>(p.size()))];
      pools[s].push_back(
          Builder::res(b.op(names[pick(3)], {x, y}, {TypeDesc(s)})));
      break;
    }
    case 2: {
      Scalar s = pick(2) ? Scalar::F32 : Scalar::F64;
      auto &p = pools[s];
      if (p.size() < 2)
        break;
      const char *names[] = {"arith.addf", "arith.subf", "arith.mulf"};
      Value *x = p[pick(static_cast<std::int64_t>(p.size()))];
      Value *y = p[pick(static_cast<std::int64_t>(p.size()))];
      pools[s].push_back(
          Builder::res(b.op(names[pick(3)], {x, y}, {TypeDesc(s)})));
      break;
    }
    case 3: {
      Scalar s = scalars[pick(2)];
      auto &p = pools[s];
      if (p.size() < 2)
        break;
      const char *preds[] = {"eq", "ne", "slt", "sle", "sgt", "sge"};
      Value *x = p[pick(static_cast<std::int64_t>(p.size()))];
      Value *y = p[pick(static_cast<std::int64_t>(p.size()))];
      Operation *op = b.op("arith.cmp", {x, y}, {TypeDesc(Scalar::I1)});
      op->setAttr("predicate", Attribute::makeString(preds[pick(6)]));
      bools.push_back(Builder::res(op));
      break;
    }
    case 4: {
      Scalar s = scalars[pick(5)];
      auto &p = pools[s];
      if (p.size() < 2 || bools.empty())
        break;
      Value *c = bools[pick(static_cast<std::int64_t>(bools.size()))];
      Value *x = p[pick(static_cast<std::int64_t>(p.size()))];
      Value *y = p[pick(static_cast<std::int64_t>(p.size()))];
      pools[s].push_back(
          Builder::res(b.op("arith.select", {c, x, y}, {TypeDesc(s)})));
      break;
    }
    case 5: {
      // A small counted loop carrying one iteration value.
      Scalar s = scalars[pick(2)];
      auto &p = pools[s];
      if (p.empty())
        break;
      Value *lo = b.cIndex(0);
      Value *hi = b.cIndex(pick(4) + 1);
      Value *st = b.cIndex(1);
      Value *init = p[pick(static_cast<std::int64_t>(p.size()))];
      Operation *loop =
          b.op("loop.for", {lo, hi, st, init}, {TypeDesc(s)});
      Region &lr = loop->addRegion();
      lr.owner = loop;
      lr.addArg(TypeDesc(Scalar::Index));
      Value *acc = lr.addArg(TypeDesc(s));
      Builder lb(lr);
      Value *next =
          Builder::res(lb.op("arith.addi", {acc, acc}, {TypeDesc(s)}));
      lb.op("loop.yield", {next}, {});
      pools[s].push_back(Builder::res(loop));
      break;
    }
    }
  }
  b.op("func.return", {}, {});
  ir::moduleBody(*module).ops.push_back(std::move(func));
  return module;
}

} // namespace

TEST_CASE("random well-formed modules round-trip through text") {
  std::mt19937_64 rng(20260816);
  for (int i = 0; i < 60; ++i) {
    auto mod = randomModule(rng);
    auto diags = ir::verifyModule(*mod);
    REQUIRE_MESSAGE(diags.empty(),
                    (diags.empty() ? "" : diags[0].str()));
    std::string once = ir::printModule(*mod);
    CAPTURE(once);
    auto back = ir::parseModule(once, "roundtrip");
    REQUIRE_MESSAGE(back.ok(), back.diagText());
    CHECK(ir::verifyModule(**back).empty());
    CHECK(ir::printModule(**back) == once);
  }
}

TEST_CASE("diagnostics format as file:line:col with the op path appended") {
  ir::Diagnostic d;
  d.loc = {"box.xir", 4, 7};
  d.message = "something is off";
  d.opPath = "func @f / op #2 (stencil.apply)";
  CHECK(d.str() ==
        "box.xir:4:7: something is off (at func @f / op #2 (stencil.apply))");
  ir::Diagnostic bare;
  bare.message = "plain";
  CHECK(bare.str() == "plain");
}
