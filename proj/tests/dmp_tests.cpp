//===- dmp_tests.cpp - decomposition and halo-exchange tests ---------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"

#include "halogen/dialects/dmp.hpp"
#include "halogen/exec/kernels.hpp"
#include "halogen/ir/ir.hpp"
#include "halogen/ir/parser.hpp"
#include "halogen/ir/pass.hpp"
#include "halogen/ir/printer.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

using namespace halogen;
using ir::Bounds;
using ir::Interval;
using ir::Operation;
using ir::dmp::coordFromRank;
using ir::dmp::neighborRank;
using ir::dmp::rankFromCoord;
using ir::dmp::StandardSlicing;

using I64Vec = std::vector<std::int64_t>;

//===----------------------------------------------------------------------===//
// Grid arithmetic
//===----------------------------------------------------------------------===//

TEST_CASE("grid ranks are row-major with the last dimension fastest") {
  I64Vec grid{2, 4, 4};
  CHECK(rankFromCoord({0, 0, 0}, grid) == 0);
  CHECK(rankFromCoord({0, 0, 3}, grid) == 3);
  CHECK(rankFromCoord({0, 1, 0}, grid) == 4);
  CHECK(rankFromCoord({1, 0, 0}, grid) == 16);
  CHECK(rankFromCoord({1, 2, 3}, grid) == 16 + 8 + 3);
  CHECK(coordFromRank(27, grid) == I64Vec{1, 2, 3});

  // Round-trip over every rank of a few grids.
  for (const I64Vec &g : {I64Vec{5}, I64Vec{3, 4}, I64Vec{2, 3, 2}}) {
    std::int64_t total = 1;
    for (std::int64_t d : g)
      total *= d;
    for (std::int64_t r = 0; r < total; ++r) {
      I64Vec c = coordFromRank(r, g);
      CHECK(rankFromCoord(c, g) == r);
      for (std::size_t d = 0; d < g.size(); ++d) {
        CHECK(c[d] >= 0);
        CHECK(c[d] < g[d]);
      }
    }
  }
}

TEST_CASE("face neighbors step one coordinate and stop at the grid edge") {
  I64Vec grid{2, 4, 4};
  // (1,2,3) + (0,1,0) -> (1,3,3).
  CHECK(neighborRank(27, {0, 1, 0}, grid) == 31);
  CHECK(neighborRank(27, {0, -1, 0}, grid) == 23);
  CHECK(neighborRank(27, {-1, 0, 0}, grid) == 11);
  CHECK(neighborRank(27, {0, 0, 1}, grid) == -1);  // x2 == 3 is the edge
  CHECK(neighborRank(0, {0, -1, 0}, grid) == -1);
  CHECK(neighborRank(0, {-1, 0, 0}, grid) == -1);
  // 1D chain.
  CHECK(neighborRank(0, {1}, {4}) == 1);
  CHECK(neighborRank(3, {1}, {4}) == -1);
}

TEST_CASE("slicing spreads the remainder over the leading parts") {
  StandardSlicing s;
  // 130 over 4 parts: 33, 33, 32, 32, concatenating exactly.
  I64Vec sizes;
  std::int64_t cursor = 0;
  for (std::int64_t p = 0; p < 4; ++p) {
    Interval iv = s.localInterval(130, 4, p);
    CHECK(iv.lb == cursor);
    sizes.push_back(iv.size());
    cursor = iv.ub;
  }
  CHECK(cursor == 130);
  CHECK(sizes == I64Vec{33, 33, 32, 32});
  CHECK(s.localInterval(130, 4, 2).lb == 66);
  CHECK(s.localInterval(130, 4, 2).ub == 98);

  // Even split stays even.
  for (std::int64_t p = 0; p < 4; ++p)
    CHECK(s.localInterval(128, 4, p).size() == 32);

  // Property: for random extents the parts tile [0, extent) in order and
  // sizes differ by at most one.
  std::mt19937_64 rng(7);
  for (int it = 0; it < 200; ++it) {
    std::int64_t parts = 1 + static_cast<std::int64_t>(rng() % 8);
    std::int64_t extent = parts + static_cast<std::int64_t>(rng() % 200);
    std::int64_t at = 0, mn = extent, mx = 0;
    for (std::int64_t p = 0; p < parts; ++p) {
      Interval iv = s.localInterval(extent, parts, p);
      CHECK(iv.lb == at);
      at = iv.ub;
      mn = std::min(mn, iv.size());
      mx = std::max(mx, iv.size());
    }
    CHECK(at == extent);
    CHECK(mx - mn <= 1);
  }
}

//===----------------------------------------------------------------------===//
// Exchange declarations
//===----------------------------------------------------------------------===//

TEST_CASE("the template exchange set for a 100x100 core with width-4 halos") {
  StandardSlicing s;
  auto decls = s.exchanges({100, 100}, {4, 4}, {4, 4});
  REQUIRE(decls.size() == 4);

  // Dimension-major, negative before positive.
  CHECK(decls[0].to == I64Vec{-1, 0});
  CHECK(decls[0].at == I64Vec{0, 4});
  CHECK(decls[0].size == I64Vec{4, 100});
  CHECK(decls[0].offset == I64Vec{4, 0});

  CHECK(decls[1].to == I64Vec{1, 0});
  CHECK(decls[1].at == I64Vec{104, 4});
  CHECK(decls[1].size == I64Vec{4, 100});
  CHECK(decls[1].offset == I64Vec{-4, 0});

  CHECK(decls[2].to == I64Vec{0, -1});
  CHECK(decls[2].at == I64Vec{4, 0});
  CHECK(decls[2].size == I64Vec{100, 4});
  CHECK(decls[2].offset == I64Vec{0, 4});

  CHECK(decls[3].to == I64Vec{0, 1});
  CHECK(decls[3].at == I64Vec{4, 104});
  CHECK(decls[3].size == I64Vec{100, 4});
  CHECK(decls[3].offset == I64Vec{0, -4});
}

TEST_CASE("a zero-width halo emits no exchange for that dimension") {
  StandardSlicing s;
  auto decls = s.exchanges({8, 8}, {0, 2}, {0, 2});
  REQUIRE(decls.size() == 2);
  CHECK(decls[0].to == I64Vec{0, -1});
  CHECK(decls[1].to == I64Vec{0, 1});
}

TEST_CASE("a corner rank only exchanges with neighbors that exist") {
  StandardSlicing s;
  // Grid 2x2, coord (0,0): only the +0 and +1 directions have neighbors.
  auto decls = s.exchanges({8, 8}, {1, 1}, {1, 1}, {2, 2}, {0, 0});
  REQUIRE(decls.size() == 2);
  CHECK(decls[0].to == I64Vec{1, 0});
  CHECK(decls[1].to == I64Vec{0, 1});
  // Middle of a 3x3 grid keeps all four.
  auto mid = s.exchanges({8, 8}, {1, 1}, {1, 1}, {3, 3}, {1, 1});
  CHECK(mid.size() == 4);
}

namespace {

/// Cells of one axis-aligned box as sorted coordinate tuples.
std::set<I64Vec> boxCells(const I64Vec &at, const I64Vec &size) {
  std::set<I64Vec> cells;
  I64Vec cur(at.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t d) {
    if (d == at.size()) {
      cells.insert(cur);
      return;
    }
    for (std::int64_t i = 0; i < size[d]; ++i) {
      cur[d] = at[d] + i;
      rec(d + 1);
    }
  };
  rec(0);
  return cells;
}

} // namespace

TEST_CASE("random decompositions cover every halo once and reciprocally") {
  // Halos are symmetric per dimension: the decomposition pass rejects
  // asymmetric footprints, and the one-size exchange declaration relies on
  // the send width equaling the receive width on both sides of a face.
  StandardSlicing strat;
  std::mt19937_64 rng(20260816);
  int propertyCases = 300;
  for (int it = 0; it < propertyCases; ++it) {
    int rank = 1 + static_cast<int>(rng() % 3);
    I64Vec grid(rank), halo(rank), extent(rank);
    for (int d = 0; d < rank; ++d) {
      grid[d] = 1 + static_cast<std::int64_t>(rng() % 4);
      halo[d] = static_cast<std::int64_t>(rng() % 4);
      // Keep every part at least as wide as the halo so send regions fit.
      std::int64_t minPart = std::max<std::int64_t>(halo[d], 1);
      extent[d] = grid[d] * (minPart + static_cast<std::int64_t>(rng() % 6));
    }
    CAPTURE(it);
    CAPTURE(grid);
    CAPTURE(halo);
    CAPTURE(extent);

    Bounds global;
    for (int d = 0; d < rank; ++d)
      global.dims.push_back(Interval{0, extent[d]});

    std::int64_t nRanks = 1;
    for (std::int64_t g : grid)
      nRanks *= g;

    // Per-rank declarations and local geometry.
    struct Local {
      I64Vec core;
      Bounds bounds;
      std::vector<ir::ExchangeAttr> decls;
    };
    std::vector<Local> locals(static_cast<std::size_t>(nRanks));
    for (std::int64_t r = 0; r < nRanks; ++r) {
      I64Vec coord = coordFromRank(r, grid);
      Local &l = locals[static_cast<std::size_t>(r)];
      l.bounds = strat.localBounds(global, grid, coord);
      for (int d = 0; d < rank; ++d)
        l.core.push_back(l.bounds.dims[d].size());
      l.decls = strat.exchanges(l.core, halo, halo, grid, coord);
    }

    auto globalOf = [&](std::int64_t r, const I64Vec &bufCell) {
      I64Vec g(static_cast<std::size_t>(rank));
      const Local &l = locals[static_cast<std::size_t>(r)];
      for (int d = 0; d < rank; ++d)
        g[static_cast<std::size_t>(d)] =
            l.bounds.dims[d].lb - halo[d] + bufCell[static_cast<std::size_t>(d)];
      return g;
    };

    for (std::int64_t r = 0; r < nRanks; ++r) {
      I64Vec coord = coordFromRank(r, grid);
      const Local &l = locals[static_cast<std::size_t>(r)];

      // Coverage: the receive regions are pairwise disjoint and their
      // union is exactly the face slabs toward existing neighbors.
      std::set<I64Vec> received;
      std::int64_t expected = 0;
      for (const auto &e : l.decls) {
        auto cells = boxCells(e.at, e.size);
        for (const auto &c : cells)
          CHECK_MESSAGE(received.insert(c).second,
                        "cell received twice at rank " << r);
        std::int64_t n = 1;
        for (std::int64_t s : e.size)
          n *= s;
        expected += n;
      }
      std::int64_t faceCells = 0;
      for (int d = 0; d < rank; ++d) {
        for (int sign : {-1, 1}) {
          I64Vec dir(static_cast<std::size_t>(rank), 0);
          dir[static_cast<std::size_t>(d)] = sign;
          if (halo[d] == 0 || neighborRank(r, dir, grid) < 0)
            continue;
          std::int64_t slab = halo[d];
          for (int k = 0; k < rank; ++k)
            if (k != d)
              slab *= l.core[static_cast<std::size_t>(k)];
          faceCells += slab;
        }
      }
      CHECK(static_cast<std::int64_t>(received.size()) == faceCells);
      CHECK(expected == faceCells);

      // Reciprocity: my receive region equals the neighbor's send region
      // once both are mapped to global coordinates.
      for (const auto &e : l.decls) {
        std::int64_t n = neighborRank(r, e.to, grid);
        REQUIRE(n >= 0);
        I64Vec back(e.to.size());
        for (std::size_t k = 0; k < e.to.size(); ++k)
          back[k] = -e.to[k];
        const Local &nl = locals[static_cast<std::size_t>(n)];
        const ir::ExchangeAttr *mate = nullptr;
        for (const auto &ne : nl.decls)
          if (ne.to == back)
            mate = &ne;
        REQUIRE_MESSAGE(mate != nullptr, "no reciprocal declaration");
        CHECK(mate->size == e.size);

        I64Vec sendAt(mate->at.size());
        for (std::size_t k = 0; k < mate->at.size(); ++k)
          sendAt[k] = mate->at[k] + mate->offset[k];
        CHECK(globalOf(r, e.at) == globalOf(n, sendAt));
      }
    }
  }
}

//===----------------------------------------------------------------------===//
// The decomposition pass
//===----------------------------------------------------------------------===//

TEST_CASE("decomposition rewrites one rank's view and swaps before loads") {
  exec::KernelSpec spec;
  spec.kind = "heat";
  spec.rank = 2;
  spec.extent = 64;
  spec.order = 2;
  auto mod = exec::buildKernel(spec);
  REQUIRE(mod.ok());
  auto out = ir::runPipeline(**mod, "propagate-bounds,decompose grid=2x2");
  REQUIRE_MESSAGE(out.ok(), out.diagText());

  const auto *topo = (*out)->attr("dmp.topology");
  REQUIRE(topo != nullptr);
  CHECK(topo->as<ir::GridAttr>().dims == I64Vec{2, 2});
  const auto *cores = (*out)->attr("dmp.cores");
  REQUIRE(cores != nullptr);
  CHECK(cores->as<ir::IntAttr>().value == 4);
  REQUIRE((*out)->attr("dmp.reference") != nullptr);

  // The reference module carried along for scatter/gather reparses.
  auto ref = ir::parseModule((*out)->attr("dmp.reference")->as<ir::StringAttr>().value,
                             "reference");
  CHECK(ref.ok());

  // Every load is immediately preceded by a swap on the same field.
  const Operation *step = ir::lookupFunc(**out, "step");
  REQUIRE(step != nullptr);
  const auto &ops = step->regions[0].ops;
  int loads = 0, swaps = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i]->name == "dmp.swap")
      ++swaps;
    if (ops[i]->name != "stencil.load")
      continue;
    ++loads;
    REQUIRE(i > 0);
    CHECK(ops[i - 1]->name == "dmp.swap");
    CHECK(ops[i - 1]->operands[0] == ops[i]->operands[0]);
  }
  CHECK(loads == 1);
  CHECK(swaps == 1);

  // Field arguments now hold one part: 32x32 core plus the width-1 halo.
  for (const ir::Value &arg : step->regions[0].args) {
    const auto &ft = arg.type.as<ir::FieldType>();
    REQUIRE(ft.bounds.rank() == 2);
    CHECK(ft.bounds.dims[0].lb == -1);
    CHECK(ft.bounds.dims[0].ub == 33);
  }

  // The printed form round-trips with the attributes intact.
  std::string text = ir::printModule(**out);
  CHECK(text.find("dmp.swap") != std::string::npos);
  CHECK(text.find("#dmp.grid<2x2>") != std::string::npos);
  auto back = ir::parseModule(text, "reprint");
  REQUIRE_MESSAGE(back.ok(), back.diagText());
  CHECK(ir::printModule(**back) == text);
}

TEST_CASE("decomposition rejects grids that do not divide the domain") {
  exec::KernelSpec spec;
  spec.kind = "heat";
  spec.rank = 2;
  spec.extent = 30;
  spec.order = 2;
  auto mod = exec::buildKernel(spec);
  REQUIRE(mod.ok());
  auto out = ir::runPipeline(**mod, "propagate-bounds,decompose grid=4x4");
  REQUIRE_FALSE(out.ok());  // 30 is not a multiple of 4
  CHECK(out.diagText().find("not divisible") != std::string::npos);
}

TEST_CASE("decomposition rejects diagonal footprints") {
  auto text = R"(builtin.module {
  func.func @step(%a : !field<[-1,9]x[-1,9]xf64>, %b : !field<[-1,9]x[-1,9]xf64>) {
    %t = stencil.load %a : !field<[-1,9]x[-1,9]xf64> -> !temp<?x?xf64>
    %o = stencil.apply(%x = %t : !temp<?x?xf64>) -> !temp<?x?xf64> {
      %v = stencil.access %x[1,1] : f64
      stencil.return %v : f64
    }
    stencil.store %o to %b ([0,8]x[0,8]) : !temp<?x?xf64> to !field<[-1,9]x[-1,9]xf64>
    func.return
  }
}
)";
  auto mod = ir::parseModule(text, "diag");
  REQUIRE(mod.ok());
  ir::ArrayAttr groups;
  groups.elems.push_back(ir::Attribute::makeIndexArray({0, 1}));
  (*mod)->setAttr("stencil.time_slots", ir::Attribute(std::move(groups)));
  auto out = ir::runPipeline(**mod, "propagate-bounds,decompose grid=2x2");
  REQUIRE_FALSE(out.ok());
  CHECK(out.diagText().find("corner") != std::string::npos);
}
