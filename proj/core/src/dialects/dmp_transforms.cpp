//===- dmp_transforms.cpp - Domain decomposition passes -------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
//  decompose                 splits the stored domain across a process grid:
//                            field types shrink to one rank's core plus halo
//                            (written in rank-0 coordinates so the module
//                            stays rank-parametric), every stencil.load gains
//                            a dmp.swap carrying the halo-exchange template,
//                            and the pre-decomposition module text is kept in
//                            the dmp.reference module attribute.
//  eliminate-redundant-swaps removes a swap when the same buffer was already
//                            swapped and nothing wrote to it in between.
//
//===----------------------------------------------------------------------===//

#include "lowering_common.hpp"
#include "registration.hpp"

#include "halogen/dialects/dmp.hpp"
#include "halogen/dialects/stencil.hpp"
#include "halogen/ir/attributes.hpp"
#include "halogen/ir/dialect.hpp"
#include "halogen/ir/pass.hpp"
#include "halogen/ir/printer.hpp"

#include <optional>
#include <set>
#include <string>

namespace halogen::ir {
namespace {

bool parseGrid(const std::string &text, std::vector<std::int64_t> &out) {
  out.clear();
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t next = text.find('x', pos);
    std::string piece = text.substr(
        pos, next == std::string::npos ? std::string::npos : next - pos);
    if (piece.empty() || piece.find_first_not_of("0123456789") !=
                             std::string::npos)
      return false;
    out.push_back(std::stoll(piece));
    if (out.back() <= 0)
      return false;
    if (next == std::string::npos)
      break;
    pos = next + 1;
  }
  return !out.empty();
}

Operation *singleStencilFunc(Operation &module,
                             std::vector<Diagnostic> &diags) {
  Operation *found = nullptr;
  for (auto &opPtr : moduleBody(module).ops) {
    if (opPtr->name != "func.func" || opPtr->regions.empty())
      continue;
    bool hasStencil = false;
    walk(*opPtr, [&](const Operation &op) {
      if (op.dialect() == "stencil")
        hasStencil = true;
    });
    if (!hasStencil)
      continue;
    if (found) {
      opError(module, diags,
              "decompose expects exactly one stencil function");
      return nullptr;
    }
    found = opPtr.get();
  }
  if (!found)
    opError(module, diags, "decompose found no stencil function");
  return found;
}

bool storeRegion(const Operation &store, Bounds &out) {
  std::vector<std::int64_t> lb, ub;
  const Attribute *la = store.attr("lb");
  const Attribute *ua = store.attr("ub");
  if (!la || !ua || !attrToIndexVector(*la, lb) ||
      !attrToIndexVector(*ua, ub) || lb.size() != ub.size())
    return false;
  std::vector<Interval> dims;
  for (size_t d = 0; d < lb.size(); ++d)
    dims.push_back({lb[d], ub[d]});
  out = Bounds(std::move(dims));
  return true;
}

//===----------------------------------------------------------------------===//
// decompose
//===----------------------------------------------------------------------===//

void decomposePass(Operation &module, const PassOptions &opts,
                   std::vector<Diagnostic> &diags) {
  std::vector<std::int64_t> grid;
  if (!opts.has("grid") || !parseGrid(opts.get("grid", ""), grid)) {
    opError(module, diags,
            "decompose requires a process grid, e.g. grid=2x2");
    return;
  }

  Operation *func = singleStencilFunc(module, diags);
  if (!func)
    return;
  Region &body = func->regions[0];

  // The pre-decomposition module is the reference for result checking.
  std::string reference = printModule(module);

  // Global domain: the hull of every stored region. Each store must cover
  // it exactly, otherwise the written region would differ per rank and the
  // module could not stay rank-parametric.
  std::optional<Bounds> domain;
  for (auto &opPtr : body.ops) {
    if (opPtr->name != "stencil.store")
      continue;
    Bounds region;
    if (!storeRegion(*opPtr, region)) {
      opError(*opPtr, diags, "stencil.store bounds are malformed");
      return;
    }
    if (domain && !(region == *domain)) {
      opError(*opPtr, diags,
              "decompose requires every store to cover the same domain");
      return;
    }
    domain = region;
  }
  if (!domain) {
    opError(*func, diags, "decompose found no stencil.store");
    return;
  }
  int rank = domain->rank();
  if (static_cast<int>(grid.size()) != rank) {
    opError(module, diags,
            "grid rank " + std::to_string(grid.size()) +
                " does not match the domain rank " + std::to_string(rank));
    return;
  }
  for (int d = 0; d < rank; ++d)
    if (domain->size(d) % grid[d] != 0) {
      opError(module, diags,
              "domain extent " + std::to_string(domain->size(d)) +
                  " in dimension " + std::to_string(d) +
                  " is not divisible by grid extent " +
                  std::to_string(grid[d]));
      return;
    }

  // Rank-0 core in global logical coordinates.
  std::vector<Interval> coreDims;
  for (int d = 0; d < rank; ++d)
    coreDims.push_back(
        {domain->dims[d].lb, domain->dims[d].lb + domain->size(d) / grid[d]});
  Bounds core{coreDims};

  // Footprints must stay on the faces: diagonal offsets would need corner
  // halo data that face exchanges never carry, and an apply feeding another
  // apply would need halo values of an unswapped temp.
  for (auto &opPtr : body.ops) {
    if (opPtr->name != "stencil.apply")
      continue;
    for (const Value *operand : opPtr->operands)
      if (operand->defOp && operand->defOp->name == "stencil.apply") {
        opError(*opPtr, diags,
                "decompose does not support an apply consuming another "
                "apply");
        return;
      }
    bool bad = false;
    walk(*opPtr, [&](const Operation &op) {
      if (op.name != "stencil.access")
        return;
      std::vector<std::int64_t> offs;
      const Attribute *a = op.attr("offsets");
      if (!a || !attrToIndexVector(*a, offs))
        return;
      int nonzero = 0;
      for (std::int64_t o : offs)
        nonzero += (o != 0);
      if (nonzero > 1)
        bad = true;
    });
    if (bad) {
      opError(*opPtr, diags,
              "decompose supports face footprints only; a diagonal access "
              "offset requires corner exchanges");
      return;
    }
  }

  // Per-field halos from the type, measured against the global domain.
  struct FieldHalo {
    std::vector<std::int64_t> below, above;
  };
  std::map<int, FieldHalo> halos;
  for (size_t i = 0; i < body.args.size(); ++i) {
    const auto *ft = body.args[i].type.dynAs<FieldType>();
    if (!ft)
      continue;
    if (ft->bounds.rank() != rank) {
      opError(*func, diags, "field rank does not match the domain rank");
      return;
    }
    FieldHalo h;
    for (int d = 0; d < rank; ++d) {
      std::int64_t below = domain->dims[d].lb - ft->bounds.dims[d].lb;
      std::int64_t above = ft->bounds.dims[d].ub - domain->dims[d].ub;
      if (below < 0 || above < 0) {
        opError(*func, diags,
                "field bounds " + ft->bounds.str() +
                    " do not cover the stored domain " + domain->str());
        return;
      }
      if (below != above) {
        opError(*func, diags,
                "decompose requires symmetric halos; field " +
                    ft->bounds.str() + " has " + std::to_string(below) +
                    " below and " + std::to_string(above) +
                    " above in dimension " + std::to_string(d));
        return;
      }
      if (below > core.size(d)) {
        opError(*func, diags,
                "halo width " + std::to_string(below) +
                    " exceeds the per-rank core extent " +
                    std::to_string(core.size(d)) + " in dimension " +
                    std::to_string(d));
        return;
      }
      h.below.push_back(below);
      h.above.push_back(above);
    }
    halos[static_cast<int>(i)] = std::move(h);
  }

  // Rewrite arg types to the local shape and the stores to the local core.
  std::vector<TypeDesc> newIns;
  for (size_t i = 0; i < body.args.size(); ++i) {
    if (const auto *ft = body.args[i].type.dynAs<FieldType>()) {
      const FieldHalo &h = halos.at(static_cast<int>(i));
      Bounds local = core.widened(h.below, h.above);
      body.args[i].type = TypeDesc(FieldType{ft->elem, local});
    }
    newIns.push_back(body.args[i].type);
  }
  if (const Attribute *sigAttr = func->attr("function_type"))
    if (const auto *ta = sigAttr->dynAs<TypeAttr>()) {
      FuncType sig = ta->type.as<FuncType>();
      sig.ins = newIns;
      func->setAttr("function_type", Attribute(TypeAttr{TypeDesc(sig)}));
    }
  std::vector<std::int64_t> coreLb, coreUb, coreSize;
  for (int d = 0; d < rank; ++d) {
    coreLb.push_back(core.dims[d].lb);
    coreUb.push_back(core.dims[d].ub);
    coreSize.push_back(core.size(d));
  }
  for (auto &opPtr : body.ops) {
    if (opPtr->name != "stencil.store")
      continue;
    opPtr->setAttr("lb", Attribute::makeIndexArray(coreLb));
    opPtr->setAttr("ub", Attribute::makeIndexArray(coreUb));
  }

  // A swap before every load, carrying the rank-parametric exchange
  // template for the loaded field's halo.
  dmp::StandardSlicing slicing;
  for (size_t i = 0; i < body.ops.size(); ++i) {
    if (body.ops[i]->name != "stencil.load")
      continue;
    Value *field = body.ops[i]->operands[0];
    if (!field->isArg() || field->defRegion != &body) {
      opError(*body.ops[i], diags,
              "decompose requires loads from function arguments");
      return;
    }
    const FieldHalo &h = halos.at(field->argIdx);
    auto decls = slicing.exchanges(coreSize, h.below, h.above, grid);
    auto swap = std::make_unique<Operation>("dmp.swap");
    swap->operands.push_back(field);
    swap->loc = body.ops[i]->loc;
    swap->setAttr("grid", Attribute(GridAttr{grid}));
    ArrayAttr list;
    for (const auto &e : decls)
      list.elems.push_back(Attribute(e));
    swap->setAttr("exchanges", Attribute(std::move(list)));
    swap->parent = &body;
    body.ops.insert(body.ops.begin() + static_cast<long>(i),
                    std::move(swap));
    ++i;
  }

  std::int64_t cores = 1;
  for (std::int64_t g : grid)
    cores *= g;
  module.setAttr("dmp.topology", Attribute(GridAttr{grid}));
  module.setAttr("dmp.cores", Attribute(IntAttr{cores, Scalar::I64}));
  module.setAttr("dmp.reference", Attribute(StringAttr{reference}));

  // Types downstream of the rewritten stores and fields are stale; resolve
  // them against the local shapes.
  lowering::propagateBoundsInPlace(module, diags);
}

//===----------------------------------------------------------------------===//
// eliminate-redundant-swaps
//===----------------------------------------------------------------------===//

void collectWrittenBuffers(const Operation &op,
                           std::set<const Value *> &written) {
  walk(op, [&](const Operation &nested) {
    if (nested.name == "memref.store" && nested.numOperands() >= 2)
      written.insert(nested.operands[1]);
    else if (nested.name == "stencil.store" && nested.numOperands() >= 2)
      written.insert(nested.operands[1]);
    else if (nested.name == "func.call")
      for (const Value *o : nested.operands)
        if (o && o->type.isBufferLike())
          written.insert(o);
  });
}

void eliminateRedundantSwapsPass(Operation &module, const PassOptions &,
                                 std::vector<Diagnostic> &diags) {
  (void)diags;
  for (auto &funcPtr : moduleBody(module).ops) {
    if (funcPtr->name != "func.func" || funcPtr->regions.empty())
      continue;
    Region &body = funcPtr->regions[0];
    // Buffers whose halo is still consistent since their last swap.
    std::set<const Value *> clean;
    std::vector<size_t> redundant;
    for (size_t i = 0; i < body.ops.size(); ++i) {
      const Operation &op = *body.ops[i];
      if (op.name == "dmp.swap") {
        if (op.numOperands() == 1 && clean.count(op.operands[0]))
          redundant.push_back(i);
        else if (op.numOperands() == 1)
          clean.insert(op.operands[0]);
        continue;
      }
      std::set<const Value *> written;
      collectWrittenBuffers(op, written);
      for (const Value *w : written)
        clean.erase(w);
    }
    for (auto it = redundant.rbegin(); it != redundant.rend(); ++it)
      body.ops.erase(body.ops.begin() + static_cast<long>(*it));
  }
}

} // namespace

void registerDmpPasses() {
  auto &reg = PassRegistry::get();
  reg.registerPass(
      {"decompose",
       "split the stored domain across a process grid and insert halo "
       "swaps (option: grid=AxB)",
       decomposePass});
  reg.registerAlias("decompose-stencil", "decompose");
  reg.registerPass(
      {"eliminate-redundant-swaps",
       "drop swaps whose buffer was not written since its previous swap",
       eliminateRedundantSwapsPass});
}

} // namespace halogen::ir
