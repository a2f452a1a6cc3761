//===- stencil_transforms.cpp - Bounds inference and loop lowering -------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// The two stencil-level passes plus the builder machinery they share with
// the distributed lowering:
//
//  propagate-bounds       resolves deferred !stencil.temp bounds from the
//                         stored regions, widening per-operand by the access
//                         extents; idempotent.
//  lower-stencil-to-loops rewrites each stencil function into time-buffered
//                         loop nests: one buffer per time slot per field, an
//                         outer time loop whose iteration arguments rotate
//                         the slot bindings, and per-store row-major nests
//                         indexed in logical coordinates with constant
//                         storage shifts.
//
//===----------------------------------------------------------------------===//

#include "lowering_common.hpp"
#include "registration.hpp"

#include "halogen/dialects/stencil.hpp"
#include "halogen/ir/attributes.hpp"
#include "halogen/ir/dialect.hpp"
#include "halogen/ir/pass.hpp"

#include <algorithm>
#include <cassert>
#include <optional>
#include <set>

namespace halogen::ir {
namespace lowering {

//===----------------------------------------------------------------------===//
// Builder
//===----------------------------------------------------------------------===//

Operation *Builder::op(const std::string &name, std::vector<Value *> operands,
                       const std::vector<TypeDesc> &resultTypes) {
  auto o = std::make_unique<Operation>(name);
  o->operands = std::move(operands);
  for (const TypeDesc &t : resultTypes)
    o->addResult(t);
  return block_->push(std::move(o));
}

Value *Builder::constant(Scalar s, std::int64_t v) {
  auto key = std::make_pair(static_cast<int>(s), v);
  auto it = pool_.find(key);
  if (it != pool_.end())
    return it->second;
  Operation *c = op("arith.constant", {}, {TypeDesc(s)});
  c->setAttr("value", Attribute(IntAttr{v, s}));
  pool_[key] = res(c);
  return res(c);
}

Value *Builder::addIndex(Value *iv, std::int64_t shift) {
  if (shift == 0)
    return iv;
  return res(op("arith.addi", {iv, cIndex(shift)}, {TypeDesc(Scalar::Index)}));
}

//===----------------------------------------------------------------------===//
// Nest emission
//===----------------------------------------------------------------------===//

void emitFor(Builder &b, Value *lo, Value *hi,
             const std::function<void(Builder &, Value *)> &body) {
  Operation *fo = b.op("loop.for", {lo, hi, b.cIndex(1)}, {});
  Region &r = fo->addRegion();
  r.owner = fo;
  Value *iv = r.addArg(TypeDesc(Scalar::Index));
  Builder inner(r);
  body(inner, iv);
  inner.op("loop.yield", {}, {});
}

namespace {

void emitNestFrom(Builder &b, const Bounds &range, int dim,
                  std::vector<Value *> &ivs,
                  const std::function<void(Builder &,
                                           const std::vector<Value *> &)>
                      &body) {
  if (dim == range.rank()) {
    body(b, ivs);
    return;
  }
  emitFor(b, b.cIndex(range.dims[dim].lb), b.cIndex(range.dims[dim].ub),
          [&](Builder &inner, Value *iv) {
            ivs.push_back(iv);
            emitNestFrom(inner, range, dim + 1, ivs, body);
            ivs.pop_back();
          });
}

} // namespace

void emitNest(Builder &b, const Bounds &range,
              const std::function<void(Builder &,
                                       const std::vector<Value *> &)> &body) {
  std::vector<Value *> ivs;
  emitNestFrom(b, range, 0, ivs, body);
}

void emitCopyNest(Builder &b, const Bounds &range, const BufSource &dst,
                  const BufSource &src, Scalar elem) {
  emitNest(b, range, [&](Builder &inner, const std::vector<Value *> &ivs) {
    std::vector<Value *> loadOperands{src.buf};
    std::vector<Value *> storeIdx;
    for (size_t d = 0; d < ivs.size(); ++d) {
      loadOperands.push_back(inner.addIndex(ivs[d], -src.lb[d]));
      storeIdx.push_back(inner.addIndex(ivs[d], -dst.lb[d]));
    }
    Operation *ld =
        inner.op("memref.load", loadOperands, {TypeDesc(elem)});
    std::vector<Value *> storeOperands{Builder::res(ld), dst.buf};
    storeOperands.insert(storeOperands.end(), storeIdx.begin(),
                         storeIdx.end());
    inner.op("memref.store", storeOperands, {});
  });
}

//===----------------------------------------------------------------------===//
// Apply-region evaluation
//===----------------------------------------------------------------------===//

std::vector<Value *>
emitApplyAt(Builder &b, const Operation &apply,
            const std::vector<BufSource> &sources,
            const std::vector<Value *> &ivs,
            const std::map<const Value *, Value *> &outerMap,
            std::vector<Diagnostic> &diags) {
  std::map<const Value *, Value *> vmap = outerMap;
  const Region &body = apply.regions[0];
  auto argIndexOf = [&](const Value *v) -> int {
    for (size_t i = 0; i < body.args.size(); ++i)
      if (&body.args[i] == v)
        return static_cast<int>(i);
    return -1;
  };

  for (const auto &opPtr : body.ops) {
    const Operation &op = *opPtr;
    if (op.name == "stencil.access") {
      int argIdx = argIndexOf(op.operands[0]);
      if (argIdx < 0 || argIdx >= static_cast<int>(sources.size())) {
        opError(op, diags, "stencil.access operand is not a region argument");
        return {};
      }
      std::vector<std::int64_t> offs;
      const Attribute *a = op.attr("offsets");
      if (!a || !attrToIndexVector(*a, offs) || offs.size() != ivs.size()) {
        opError(op, diags, "stencil.access offsets do not match the rank");
        return {};
      }
      const BufSource &src = sources[argIdx];
      std::vector<Value *> operands{src.buf};
      for (size_t d = 0; d < ivs.size(); ++d)
        operands.push_back(b.addIndex(ivs[d], offs[d] - src.lb[d]));
      Operation *ld = b.op("memref.load", operands, {op.results[0].type});
      vmap[&op.results[0]] = Builder::res(ld);
      continue;
    }
    if (op.name == "stencil.return") {
      std::vector<Value *> vals;
      for (const Value *v : op.operands) {
        auto it = vmap.find(v);
        vals.push_back(it != vmap.end() ? it->second
                                        : const_cast<Value *>(v));
      }
      return vals;
    }
    if (op.dialect() == "stencil" || op.dialect() == "dmp") {
      opError(op, diags,
              "unsupported op inside stencil.apply region: " + op.name);
      return {};
    }
    b.block().push(cloneOp(op, vmap));
  }
  opError(apply, diags, "stencil.apply region has no stencil.return");
  return {};
}

//===----------------------------------------------------------------------===//
// Time-slot rotation groups
//===----------------------------------------------------------------------===//

std::vector<std::vector<int>> timeSlotGroups(const Operation &module,
                                             int numArgs,
                                             std::vector<Diagnostic> &diags) {
  std::vector<std::vector<int>> groups;
  const Attribute *a = module.attr("stencil.time_slots");
  if (!a)
    return groups;
  const auto *outer = a->dynAs<ArrayAttr>();
  if (!outer) {
    opError(module, diags, "stencil.time_slots must be a list of index lists");
    return groups;
  }
  std::set<int> seen;
  for (const Attribute &g : outer->elems) {
    std::vector<std::int64_t> idx;
    if (!attrToIndexVector(g, idx) || idx.empty()) {
      opError(module, diags,
              "stencil.time_slots must be a list of index lists");
      groups.clear();
      return groups;
    }
    std::vector<int> group;
    for (std::int64_t i : idx) {
      if (i < 0 || i >= numArgs || !seen.insert(static_cast<int>(i)).second) {
        opError(module, diags,
                "stencil.time_slots holds an out-of-range or repeated "
                "argument index");
        groups.clear();
        return groups;
      }
      group.push_back(static_cast<int>(i));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

std::vector<int> rotationSources(const std::vector<std::vector<int>> &groups,
                                 int numArgs) {
  std::vector<int> src(numArgs);
  for (int i = 0; i < numArgs; ++i)
    src[i] = i;
  for (const auto &g : groups)
    for (size_t j = 0; j < g.size(); ++j)
      src[g[j]] = g[(j + 1) % g.size()];
  return src;
}

//===----------------------------------------------------------------------===//
// Shared per-step lowering
//===----------------------------------------------------------------------===//

namespace {

std::optional<Bounds> tempBoundsOf(const Value *v) {
  if (const auto *t = v->type.dynAs<TempType>())
    return t->bounds;
  return std::nullopt;
}

Scalar tempElemOf(const Value *v) {
  if (const auto *t = v->type.dynAs<TempType>())
    return t->elem;
  return Scalar::F64;
}

bool boundsFromStore(const Operation &store, Bounds &out) {
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

BufferType bufferForBounds(Scalar elem, const Bounds &b) {
  BufferType bt;
  bt.elem = elem;
  for (const Interval &iv : b.dims)
    bt.shape.push_back(iv.size());
  return bt;
}

/// State for lowering one step body.
struct StepState {
  StepLowering *in = nullptr;
  std::map<const Value *, BufSource> tempSrc;
  std::map<const Value *, const Operation *> pendingApply;
  // Load results that still alias a field buffer, keyed by the field value.
  std::map<const Value *, std::vector<const Value *>> liveAliases;
  std::vector<Value *> stepAllocs;

  Builder &b() { return *in->b; }
  std::vector<Diagnostic> &diags() { return *in->diags; }

  bool usedAfter(const Value *v, size_t idx) const {
    const auto &ops = *in->stepOps;
    for (size_t i = idx + 1; i < ops.size(); ++i)
      for (const Value *o : ops[i]->operands)
        if (o == v)
          return true;
    return false;
  }

  /// Copy the aliased region of `temp` into a fresh buffer so later writes
  /// to the field cannot leak into it (loads snapshot their field).
  void materializeTemp(const Value *temp) {
    auto bounds = tempBoundsOf(temp);
    if (!bounds)
      return;
    Scalar elem = tempElemOf(temp);
    Operation *alloc =
        b().op("memref.alloc", {}, {TypeDesc(bufferForBounds(elem, *bounds))});
    BufSource dst{Builder::res(alloc), {}};
    for (const Interval &iv : bounds->dims)
      dst.lb.push_back(iv.lb);
    emitCopyNest(b(), *bounds, dst, tempSrc.at(temp), elem);
    tempSrc[temp] = dst;
    stepAllocs.push_back(Builder::res(alloc));
  }

  /// A write to `field` is about to be emitted at op index `idx`:
  /// materialize every load snapshot of it that is still needed.
  void fieldWritten(const Value *field, size_t idx) {
    auto it = liveAliases.find(field);
    if (it == liveAliases.end())
      return;
    for (const Value *temp : it->second)
      if (usedAfter(temp, idx))
        materializeTemp(temp);
    liveAliases.erase(it);
  }

  /// Evaluate `apply` over its full result bounds into fresh buffers, one
  /// per result. Used when a result feeds another apply or would alias its
  /// own store destination.
  void materializeApply(const Operation &apply,
                        const std::map<const Value *, Value *> &vmap) {
    auto bounds = tempBoundsOf(&apply.results[0]);
    if (!bounds) {
      opError(apply, diags(), "unresolved stencil.apply bounds");
      return;
    }
    std::vector<BufSource> sources;
    for (const Value *operand : apply.operands) {
      auto it = tempSrc.find(operand);
      if (it == tempSrc.end()) {
        opError(apply, diags(), "stencil.apply operand has no buffer source");
        return;
      }
      sources.push_back(it->second);
    }
    std::vector<Value *> allocs;
    std::vector<std::int64_t> lb;
    for (const Interval &iv : bounds->dims)
      lb.push_back(iv.lb);
    for (const Value &r : apply.results) {
      Operation *alloc = b().op(
          "memref.alloc", {},
          {TypeDesc(bufferForBounds(tempElemOf(&r), *bounds))});
      allocs.push_back(Builder::res(alloc));
      stepAllocs.push_back(Builder::res(alloc));
    }
    emitNest(b(), *bounds,
             [&](Builder &inner, const std::vector<Value *> &ivs) {
               std::vector<Value *> vals =
                   emitApplyAt(inner, apply, sources, ivs, vmap, diags());
               if (vals.size() != apply.results.size())
                 return;
               for (size_t r = 0; r < vals.size(); ++r) {
                 std::vector<Value *> operands{vals[r], allocs[r]};
                 for (size_t d = 0; d < ivs.size(); ++d)
                   operands.push_back(inner.addIndex(ivs[d], -lb[d]));
                 inner.op("memref.store", operands, {});
               }
             });
    for (size_t r = 0; r < apply.results.size(); ++r)
      tempSrc[&apply.results[r]] = BufSource{allocs[r], lb};
  }
};

} // namespace

void lowerStepOps(StepLowering &in) {
  StepState st;
  st.in = &in;
  std::map<const Value *, Value *> vmap;
  const auto &ops = *in.stepOps;

  for (size_t idx = 0; idx < ops.size(); ++idx) {
    const Operation &op = *ops[idx];
    if (op.name == "func.return" || op.name == "loop.yield")
      continue;

    if (op.name == "stencil.load") {
      auto it = in.binding.find(op.operands[0]);
      if (it == in.binding.end()) {
        opError(op, *in.diags,
                "stencil.load source is not a bound field argument");
        continue;
      }
      st.tempSrc[&op.results[0]] = it->second;
      st.liveAliases[op.operands[0]].push_back(&op.results[0]);
      continue;
    }

    if (op.name == "stencil.apply") {
      bool fedForward = false;
      for (const Value &r : op.results)
        for (size_t i = idx + 1; i < ops.size() && !fedForward; ++i)
          if (ops[i]->name != "stencil.store")
            for (const Value *o : ops[i]->operands)
              if (o == &r)
                fedForward = true;
      if (fedForward)
        st.materializeApply(op, vmap);
      else
        for (const Value &r : op.results)
          st.pendingApply[&r] = &op;
      continue;
    }

    if (op.name == "stencil.store") {
      const Value *temp = op.operands[0];
      const Value *field = op.operands[1];
      Bounds region;
      if (!boundsFromStore(op, region)) {
        opError(op, *in.diags, "stencil.store bounds are malformed");
        continue;
      }
      auto bit = in.binding.find(field);
      if (bit == in.binding.end()) {
        opError(op, *in.diags,
                "stencil.store destination is not a bound field argument");
        continue;
      }
      const BufSource &dst = bit->second;
      Scalar elem = tempElemOf(temp);

      auto pending = st.pendingApply.find(temp);
      if (pending != st.pendingApply.end()) {
        const Operation &apply = *pending->second;
        std::vector<BufSource> sources;
        bool aliased = false;
        bool missing = false;
        for (const Value *operand : apply.operands) {
          auto sit = st.tempSrc.find(operand);
          if (sit == st.tempSrc.end()) {
            opError(apply, *in.diags,
                    "stencil.apply operand has no buffer source");
            missing = true;
            break;
          }
          sources.push_back(sit->second);
          if (sit->second.buf == dst.buf)
            aliased = true;
        }
        if (missing)
          continue;
        if (aliased) {
          // Reading and writing the same buffer in one nest would mix old
          // and new values; evaluate into a scratch buffer first.
          st.materializeApply(apply, vmap);
          for (const Value &r : apply.results)
            st.pendingApply.erase(&r);
          st.fieldWritten(field, idx);
          emitCopyNest(*in.b, region, dst, st.tempSrc.at(temp), elem);
          continue;
        }
        st.fieldWritten(field, idx);
        int resultIdx = temp->resultIdx;
        emitNest(*in.b, region,
                 [&](Builder &inner, const std::vector<Value *> &ivs) {
                   std::vector<Value *> vals = emitApplyAt(
                       inner, apply, sources, ivs, vmap, *in.diags);
                   if (resultIdx >= static_cast<int>(vals.size()))
                     return;
                   std::vector<Value *> operands{vals[resultIdx], dst.buf};
                   for (size_t d = 0; d < ivs.size(); ++d)
                     operands.push_back(
                         inner.addIndex(ivs[d], -dst.lb[d]));
                   inner.op("memref.store", operands, {});
                 });
        continue;
      }

      auto sit = st.tempSrc.find(temp);
      if (sit == st.tempSrc.end()) {
        opError(op, *in.diags, "stencil.store value has no buffer source");
        continue;
      }
      if (sit->second.buf == dst.buf)
        st.materializeTemp(temp);
      st.fieldWritten(field, idx);
      emitCopyNest(*in.b, region, dst, st.tempSrc.at(temp), elem);
      continue;
    }

    if (op.name == "dmp.swap") {
      if (!in.onSwap) {
        opError(op, *in.diags,
                "dmp.swap must be lowered with lower-dmp-to-mpi");
        continue;
      }
      if (!op.operands.empty())
        st.fieldWritten(op.operands[0], idx);
      in.onSwap(op, *in.b);
      continue;
    }

    if (op.dialect() == "stencil" || op.dialect() == "dmp") {
      opError(op, *in.diags, "unsupported op in stencil lowering: " + op.name);
      continue;
    }
    in.b->block().push(cloneOp(op, vmap));
  }

  for (Value *a : st.stepAllocs)
    in.b->op("memref.dealloc", {a}, {});
}

} // namespace lowering

//===----------------------------------------------------------------------===//
// propagate-bounds
//===----------------------------------------------------------------------===//

namespace {

using lowering::Builder;

void propagateBoundsInFunc(Operation &func, std::vector<Diagnostic> &diags) {
  Region &body = func.regions[0];
  std::map<const Value *, std::optional<Bounds>> req;
  auto addReq = [&](const Value *v, const Bounds &b) {
    auto &slot = req[v];
    slot = slot ? Bounds::hull(*slot, b) : b;
  };

  for (auto it = body.ops.rbegin(); it != body.ops.rend(); ++it) {
    Operation &op = **it;
    if (op.name == "stencil.store") {
      Bounds region;
      if (lowering::boundsFromStore(op, region))
        addReq(op.operands[0], region);
      continue;
    }
    if (op.name == "stencil.apply") {
      std::optional<Bounds> shared;
      for (const Value &r : op.results) {
        auto rit = req.find(&r);
        if (rit != req.end() && rit->second)
          shared = shared ? Bounds::hull(*shared, *rit->second)
                          : *rit->second;
      }
      if (!shared) {
        // Results that are never stored or consumed keep any explicit
        // bounds they already carry.
        bool resolved = true;
        for (const Value &r : op.results)
          if (const auto *t = r.type.dynAs<TempType>(); t && !t->bounds)
            resolved = false;
        if (!resolved)
          opError(op, diags,
                  "cannot infer bounds: no store or consumer requires "
                  "this stencil.apply");
        continue;
      }
      for (Value &r : op.results) {
        Scalar elem = Scalar::F64;
        if (const auto *t = r.type.dynAs<TempType>())
          elem = t->elem;
        r.type = TypeDesc(TempType{elem, *shared});
      }
      int rank = shared->rank();
      for (int k = 0; k < op.numOperands(); ++k) {
        stencil::AccessExtent ext =
            stencil::inferAccessExtent(op, k, rank);
        std::vector<std::int64_t> lo(rank), hi(rank);
        for (int d = 0; d < rank; ++d) {
          lo[d] = -ext.lo[d];
          hi[d] = ext.hi[d];
        }
        addReq(op.operands[k], shared->widened(lo, hi));
      }
      continue;
    }
    if (op.name == "stencil.load") {
      const auto *ft = op.operands[0]->type.dynAs<FieldType>();
      if (!ft)
        continue;
      auto rit = req.find(&op.results[0]);
      if (rit != req.end() && rit->second &&
          !ft->bounds.contains(*rit->second))
        opError(op, diags,
                "field too small: the stencil requires " +
                    rit->second->str() + " but the field bounds are " +
                    ft->bounds.str());
      op.results[0].type = TypeDesc(TempType{ft->elem, ft->bounds});
      continue;
    }
  }

  // Region argument types follow the resolved operand types, and resolved
  // producers must cover what their consumers read.
  for (auto &opPtr : body.ops) {
    Operation &op = *opPtr;
    if (op.name != "stencil.apply" || op.regions.empty())
      continue;
    Region &r = op.regions[0];
    for (size_t k = 0; k < r.args.size() && k < op.operands.size(); ++k) {
      r.args[k].type = op.operands[k]->type;
      const auto *t = op.operands[k]->type.dynAs<TempType>();
      auto rit = req.find(op.operands[k]);
      if (t && t->bounds && rit != req.end() && rit->second &&
          !t->bounds->contains(*rit->second))
        opError(op, diags,
                "stencil value too small: operand #" + std::to_string(k) +
                    " covers " + t->bounds->str() + " but " +
                    rit->second->str() + " is required");
    }
  }
}

void propagateBoundsPass(Operation &module, const PassOptions &,
                         std::vector<Diagnostic> &diags) {
  for (auto &opPtr : moduleBody(module).ops)
    if (opPtr->name == "func.func" && !opPtr->regions.empty())
      propagateBoundsInFunc(*opPtr, diags);
}

//===----------------------------------------------------------------------===//
// lower-stencil-to-loops
//===----------------------------------------------------------------------===//

bool funcHasDialect(const Operation &func, const std::string &dialect) {
  bool found = false;
  walk(func, [&](const Operation &op) {
    if (op.dialect() == dialect)
      found = true;
  });
  return found;
}

bool allTempsResolved(const Operation &func) {
  bool ok = true;
  walk(func, [&](const Operation &op) {
    for (const Value &r : op.results)
      if (const auto *t = r.type.dynAs<TempType>(); t && !t->bounds)
        ok = false;
  });
  return ok;
}

void lowerStencilFunc(Operation &module, size_t funcIdx, std::int64_t steps,
                      const std::vector<std::vector<int>> &groups,
                      std::vector<Diagnostic> &diags) {
  using namespace lowering;
  Operation &func = *moduleBody(module).ops[funcIdx];
  Region &oldBody = func.regions[0];
  const Attribute *sigAttr = func.attr("function_type");
  const auto *sig = sigAttr ? sigAttr->dynAs<TypeAttr>() : nullptr;
  if (sig && !sig->type.as<FuncType>().outs.empty()) {
    opError(func, diags,
            "stencil functions with results are not supported by "
            "lower-stencil-to-loops");
    return;
  }

  std::vector<int> fieldArgs;
  for (size_t i = 0; i < oldBody.args.size(); ++i)
    if (oldBody.args[i].type.is<FieldType>())
      fieldArgs.push_back(static_cast<int>(i));
  for (const auto &g : groups)
    for (int i : g)
      if (!oldBody.args[i].type.is<FieldType>()) {
        opError(func, diags,
                "stencil.time_slots names a non-field argument");
        return;
      }

  auto replacement = std::make_unique<Operation>("func.func");
  replacement->attrs = func.attrs;
  replacement->loc = func.loc;
  Region &nb = replacement->addRegion();
  nb.owner = replacement.get();
  std::vector<Value *> newArgs;
  for (const Value &a : oldBody.args)
    newArgs.push_back(nb.addArg(a.type));

  Builder b(nb);

  // One buffer per time slot per field, filled from the incoming field.
  std::map<int, Value *> slotBuf;
  std::map<int, Bounds> rawRange;
  for (int i : fieldArgs) {
    const auto &ft = oldBody.args[i].type.as<FieldType>();
    Operation *alloc = b.op(
        "memref.alloc", {},
        {TypeDesc(lowering::bufferForBounds(ft.elem, ft.bounds))});
    slotBuf[i] = Builder::res(alloc);
    std::vector<Interval> raw;
    for (const Interval &iv : ft.bounds.dims)
      raw.push_back({0, iv.size()});
    rawRange.emplace(i, Bounds(raw));
    emitCopyNest(b, rawRange.at(i), BufSource{slotBuf[i], std::vector<std::int64_t>(raw.size(), 0)},
                 BufSource{newArgs[i], std::vector<std::int64_t>(raw.size(), 0)},
                 ft.elem);
  }

  // Outer time loop; the iteration arguments carry the slot bindings and
  // rotate one position per step.
  std::vector<Value *> loopOperands{b.cIndex(0), b.cIndex(steps),
                                    b.cIndex(1)};
  std::vector<TypeDesc> loopResults;
  for (int i : fieldArgs) {
    loopOperands.push_back(slotBuf[i]);
    loopResults.push_back(slotBuf[i]->type);
  }
  Operation *timeLoop = b.op("loop.for", loopOperands, loopResults);
  Region &lb = timeLoop->addRegion();
  lb.owner = timeLoop;
  lb.addArg(TypeDesc(Scalar::Index));
  std::map<int, Value *> iterVal;
  std::map<int, int> iterPos;
  for (size_t p = 0; p < fieldArgs.size(); ++p) {
    iterVal[fieldArgs[p]] = lb.addArg(loopResults[p]);
    iterPos[fieldArgs[p]] = static_cast<int>(p);
  }

  Builder tb(lb);
  std::vector<const Operation *> stepOps;
  for (const auto &opPtr : oldBody.ops)
    stepOps.push_back(opPtr.get());
  StepLowering sl;
  sl.b = &tb;
  sl.stepOps = &stepOps;
  sl.diags = &diags;
  for (int i : fieldArgs) {
    const auto &ft = oldBody.args[i].type.as<FieldType>();
    std::vector<std::int64_t> lbs;
    for (const Interval &iv : ft.bounds.dims)
      lbs.push_back(iv.lb);
    sl.binding[&oldBody.args[i]] = BufSource{iterVal[i], lbs};
  }
  lowerStepOps(sl);

  std::vector<int> src = rotationSources(
      groups, static_cast<int>(oldBody.args.size()));
  std::vector<Value *> yields(fieldArgs.size());
  for (int i : fieldArgs)
    yields[iterPos[i]] = iterVal[src[i]];
  tb.op("loop.yield", yields, {});

  // Copy the final binding of each slot back into its field argument.
  for (int i : fieldArgs) {
    const auto &ft = oldBody.args[i].type.as<FieldType>();
    int rank = ft.bounds.rank();
    emitCopyNest(b, rawRange.at(i),
                 BufSource{newArgs[i], std::vector<std::int64_t>(rank, 0)},
                 BufSource{&timeLoop->results[iterPos[i]],
                           std::vector<std::int64_t>(rank, 0)},
                 ft.elem);
  }
  for (int i : fieldArgs)
    b.op("memref.dealloc", {slotBuf[i]}, {});
  b.op("func.return", {}, {});

  replacement->parent = &moduleBody(module);
  moduleBody(module).ops[funcIdx] = std::move(replacement);
}

void lowerStencilToLoopsPass(Operation &module, const PassOptions &opts,
                             std::vector<Diagnostic> &diags) {
  std::int64_t steps = opts.getInt("timesteps", 1);
  if (steps < 0) {
    opError(module, diags, "timesteps must be non-negative");
    return;
  }

  std::vector<size_t> stencilFuncs;
  auto &ops = moduleBody(module).ops;
  for (size_t i = 0; i < ops.size(); ++i) {
    if (ops[i]->name != "func.func" || ops[i]->regions.empty())
      continue;
    if (funcHasDialect(*ops[i], "dmp")) {
      opError(*ops[i], diags,
              "dmp.swap must be lowered with lower-dmp-to-mpi, not "
              "lower-stencil-to-loops");
      return;
    }
    if (!funcHasDialect(*ops[i], "stencil"))
      continue;
    if (!allTempsResolved(*ops[i])) {
      opError(*ops[i], diags,
              "unresolved stencil bounds; run propagate-bounds first");
      return;
    }
    stencilFuncs.push_back(i);
  }

  bool hasSlots = module.attr("stencil.time_slots") != nullptr;
  if (hasSlots && stencilFuncs.size() > 1) {
    opError(module, diags,
            "stencil.time_slots is ambiguous with more than one stencil "
            "function");
    return;
  }
  for (size_t i : stencilFuncs) {
    int numArgs = static_cast<int>(ops[i]->regions[0].args.size());
    auto groups = lowering::timeSlotGroups(module, numArgs, diags);
    if (!diags.empty())
      return;
    lowerStencilFunc(module, i, steps, groups, diags);
    if (!diags.empty())
      return;
  }
}

} // namespace

namespace lowering {
// Exposed for the decomposition pass, which re-resolves bounds after
// shrinking the store regions and field types.
void propagateBoundsInPlace(Operation &module,
                            std::vector<Diagnostic> &diags) {
  propagateBoundsPass(module, PassOptions{}, diags);
}
} // namespace lowering

void registerStencilPasses() {
  auto &reg = PassRegistry::get();
  reg.registerPass(
      {"propagate-bounds",
       "resolve deferred stencil.temp bounds from stored regions",
       propagateBoundsPass});
  reg.registerPass(
      {"lower-stencil-to-loops",
       "rewrite stencil functions into time-buffered loop nests "
       "(option: timesteps=N)",
       lowerStencilToLoopsPass});
}

} // namespace halogen::ir
