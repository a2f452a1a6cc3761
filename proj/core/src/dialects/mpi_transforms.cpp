//===- mpi_transforms.cpp - Message-passing lowerings ---------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
//  lower-dmp-to-mpi  rewrites the per-step stencil function into a
//                    rank-parametric driver @run(%T, fields...) -> fields:
//                    an outer time loop whose iteration arguments rotate the
//                    slot bindings, each dmp.swap expanded to pack loops,
//                    mpi.irecv/mpi.isend pairs, one mpi.waitall, and unpack
//                    loops whose outermost bound is selected to zero when
//                    the neighbor does not exist. Rank queries, neighbor
//                    arithmetic, tag constants, and exchange buffers are
//                    hoisted before the loop.
//  lower-mpi-to-func rewrites mpi ops into func.call @MPI_* with the flat
//                    integer ABI of a concrete library (AbiTable); request
//                    values become i32 handles and waitall passes its
//                    handles through a scratch buffer's base pointer.
//
//===----------------------------------------------------------------------===//

#include "lowering_common.hpp"
#include "registration.hpp"

#include "halogen/dialects/mpi.hpp"
#include "halogen/ir/attributes.hpp"
#include "halogen/ir/dialect.hpp"
#include "halogen/ir/pass.hpp"

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace halogen::ir {
namespace {

using lowering::BufSource;
using lowering::Builder;

//===----------------------------------------------------------------------===//
// lower-dmp-to-mpi
//===----------------------------------------------------------------------===//

struct Direction {
  int dim = 0;
  int sign = 0;

  bool operator<(const Direction &o) const {
    return std::tie(dim, sign) < std::tie(o.dim, o.sign);
  }
};

std::optional<Direction> directionOf(const ExchangeAttr &e) {
  Direction dir;
  int nonzero = 0;
  for (size_t d = 0; d < e.to.size(); ++d)
    if (e.to[d] != 0) {
      ++nonzero;
      dir.dim = static_cast<int>(d);
      dir.sign = e.to[d] > 0 ? 1 : -1;
    }
  if (nonzero != 1)
    return std::nullopt;
  return dir;
}

/// Neighbor rank for one direction, computed from the rank id with plain
/// integer arithmetic so the program stays rank-parametric:
///   coord = (rank / stride) % extent, stride = product of later extents.
struct NeighborValues {
  Value *ok = nullptr;   // i1, neighbor exists
  Value *rank = nullptr; // i32, neighbor rank or -1
};

NeighborValues emitNeighbor(Builder &b, Value *rank,
                            const std::vector<std::int64_t> &grid,
                            Direction dir) {
  std::int64_t stride = 1;
  for (size_t k = dir.dim + 1; k < grid.size(); ++k)
    stride *= grid[k];
  TypeDesc i32{Scalar::I32};
  Value *quot = Builder::res(
      b.op("arith.divi", {rank, b.cI32(stride)}, {i32}));
  Value *coord = Builder::res(
      b.op("arith.remi", {quot, b.cI32(grid[dir.dim])}, {i32}));
  Value *next = Builder::res(
      b.op("arith.addi", {coord, b.cI32(dir.sign)}, {i32}));
  Operation *ge = b.op("arith.cmp", {next, b.cI32(0)}, {TypeDesc(Scalar::I1)});
  ge->setAttr("predicate", Attribute::makeString("sge"));
  Operation *lt = b.op("arith.cmp", {next, b.cI32(grid[dir.dim])},
                       {TypeDesc(Scalar::I1)});
  lt->setAttr("predicate", Attribute::makeString("slt"));
  NeighborValues out;
  out.ok = Builder::res(b.op(
      "arith.andi", {Builder::res(ge), Builder::res(lt)},
      {TypeDesc(Scalar::I1)}));
  Value *cand = Builder::res(
      b.op("arith.addi", {rank, b.cI32(dir.sign * stride)}, {i32}));
  out.rank = Builder::res(
      b.op("arith.select", {out.ok, cand, b.cI32(-1)}, {i32}));
  return out;
}

struct ExchangePlan {
  ExchangeAttr decl;
  Direction dir;
  Value *sendBuf = nullptr;
  Value *recvBuf = nullptr;
  // One physical transfer is sent by this rank's decl and received by the
  // neighbor's opposite-direction decl, so the two tags differ: messages
  // are tagged with the sender's direction index.
  Value *sendTag = nullptr;
  Value *recvTag = nullptr;
  NeighborValues neighbor;
};

struct SwapPlan {
  int fieldArg = -1;
  std::vector<ExchangePlan> exchanges;
};

bool swapAttrs(const Operation &swap, std::vector<std::int64_t> &grid,
               std::vector<ExchangeAttr> &decls) {
  const Attribute *g = swap.attr("grid");
  const auto *ga = g ? g->dynAs<GridAttr>() : nullptr;
  if (!ga)
    return false;
  grid = ga->dims;
  decls.clear();
  const Attribute *x = swap.attr("exchanges");
  const auto *xs = x ? x->dynAs<ArrayAttr>() : nullptr;
  if (!xs)
    return false;
  for (const Attribute &e : xs->elems) {
    const auto *ea = e.dynAs<ExchangeAttr>();
    if (!ea)
      return false;
    decls.push_back(*ea);
  }
  return true;
}

void lowerDmpToMpiPass(Operation &module, const PassOptions &,
                       std::vector<Diagnostic> &diags) {
  // Locate the single per-step function holding stencil and dmp ops.
  size_t funcIdx = moduleBody(module).ops.size();
  auto &moduleOps = moduleBody(module).ops;
  for (size_t i = 0; i < moduleOps.size(); ++i) {
    if (moduleOps[i]->name != "func.func" || moduleOps[i]->regions.empty())
      continue;
    bool relevant = false;
    walk(*moduleOps[i], [&](const Operation &op) {
      if (op.dialect() == "stencil" || op.dialect() == "dmp")
        relevant = true;
    });
    if (!relevant)
      continue;
    if (funcIdx != moduleOps.size()) {
      opError(module, diags,
              "lower-dmp-to-mpi expects exactly one stencil function");
      return;
    }
    funcIdx = i;
  }
  if (funcIdx == moduleOps.size()) {
    opError(module, diags, "lower-dmp-to-mpi found no stencil function");
    return;
  }
  Operation &func = *moduleOps[funcIdx];
  Region &oldBody = func.regions[0];

  for (const Value &a : oldBody.args)
    if (!a.type.is<FieldType>()) {
      opError(func, diags,
              "lower-dmp-to-mpi expects field arguments only");
      return;
    }
  int numArgs = static_cast<int>(oldBody.args.size());
  auto groups = lowering::timeSlotGroups(module, numArgs, diags);
  if (!diags.empty())
    return;

  // Pre-scan the swaps so their exchange buffers, tags, and neighbor
  // arithmetic can be hoisted in front of the time loop.
  struct RawSwap {
    const Operation *op = nullptr;
    std::vector<std::int64_t> grid;
    std::vector<ExchangeAttr> decls;
  };
  std::vector<RawSwap> rawSwaps;
  for (auto &opPtr : oldBody.ops) {
    if (opPtr->name != "dmp.swap")
      continue;
    RawSwap rs;
    rs.op = opPtr.get();
    if (!swapAttrs(*opPtr, rs.grid, rs.decls)) {
      opError(*opPtr, diags, "dmp.swap is missing grid or exchanges");
      return;
    }
    Value *field = opPtr->operands[0];
    if (!field->isArg() || field->defRegion != &oldBody) {
      opError(*opPtr, diags,
              "dmp.swap must name a function argument field");
      return;
    }
    rawSwaps.push_back(std::move(rs));
  }

  // The replacement driver: @run(%T : index, fields...) -> fields.
  auto runFunc = std::make_unique<Operation>("func.func");
  runFunc->loc = func.loc;
  runFunc->setAttr("sym_name", Attribute::makeString("run"));
  FuncType runSig;
  runSig.ins.push_back(TypeDesc(Scalar::Index));
  for (const Value &a : oldBody.args) {
    runSig.ins.push_back(a.type);
    runSig.outs.push_back(a.type);
  }
  runFunc->setAttr("function_type", Attribute(TypeAttr{TypeDesc(runSig)}));
  Region &nb = runFunc->addRegion();
  nb.owner = runFunc.get();
  Value *stepsArg = nb.addArg(TypeDesc(Scalar::Index));
  std::vector<Value *> fieldVals;
  for (const Value &a : oldBody.args)
    fieldVals.push_back(nb.addArg(a.type));

  Builder b(nb);
  b.op("mpi.init", {}, {});
  Value *rank = Builder::res(
      b.op("mpi.comm_rank", {}, {TypeDesc(Scalar::I32)}));
  b.op("mpi.comm_size", {}, {TypeDesc(Scalar::I32)});

  std::map<Direction, NeighborValues> neighborCache;
  std::map<const Operation *, SwapPlan> plans;
  for (const RawSwap &rs : rawSwaps) {
    SwapPlan plan;
    plan.fieldArg = rs.op->operands[0]->argIdx;
    const auto *ft = rs.op->operands[0]->type.dynAs<FieldType>();
    Scalar elem = ft ? ft->elem : Scalar::F64;
    int gridRank = static_cast<int>(rs.grid.size());
    for (const ExchangeAttr &decl : rs.decls) {
      auto dir = directionOf(decl);
      if (!dir) {
        opError(*rs.op, diags,
                "dmp.swap exchange direction must have exactly one "
                "nonzero entry");
        return;
      }
      ExchangePlan xp;
      xp.decl = decl;
      xp.dir = *dir;
      auto cached = neighborCache.find(*dir);
      if (cached == neighborCache.end())
        cached = neighborCache
                     .emplace(*dir, emitNeighbor(b, rank, rs.grid, *dir))
                     .first;
      xp.neighbor = cached->second;
      BufferType bt;
      bt.elem = elem;
      bt.shape = decl.size;
      xp.sendBuf = Builder::res(b.op("memref.alloc", {}, {TypeDesc(bt)}));
      xp.recvBuf = Builder::res(b.op("memref.alloc", {}, {TypeDesc(bt)}));
      int base = plan.fieldArg * 2 * gridRank + 2 * xp.dir.dim;
      xp.sendTag = b.cI32(base + (xp.dir.sign > 0 ? 1 : 0));
      xp.recvTag = b.cI32(base + (xp.dir.sign > 0 ? 0 : 1));
      plan.exchanges.push_back(xp);
    }
    plans[rs.op] = std::move(plan);
  }

  // Time loop rotating the field bindings.
  std::vector<Value *> loopOperands{b.cIndex(0), stepsArg, b.cIndex(1)};
  std::vector<TypeDesc> loopResults;
  for (Value *f : fieldVals) {
    loopOperands.push_back(f);
    loopResults.push_back(f->type);
  }
  Operation *timeLoop = b.op("loop.for", loopOperands, loopResults);
  Region &lb = timeLoop->addRegion();
  lb.owner = timeLoop;
  lb.addArg(TypeDesc(Scalar::Index));
  std::vector<Value *> iterVals;
  for (Value *f : fieldVals)
    iterVals.push_back(lb.addArg(f->type));

  Builder tb(lb);
  std::vector<const Operation *> stepOps;
  for (const auto &opPtr : oldBody.ops)
    stepOps.push_back(opPtr.get());

  lowering::StepLowering sl;
  sl.b = &tb;
  sl.stepOps = &stepOps;
  sl.diags = &diags;
  for (int i = 0; i < numArgs; ++i) {
    const auto &ft = oldBody.args[i].type.as<FieldType>();
    std::vector<std::int64_t> lbs;
    for (const Interval &iv : ft.bounds.dims)
      lbs.push_back(iv.lb);
    sl.binding[&oldBody.args[i]] = BufSource{iterVals[i], lbs};
  }
  sl.onSwap = [&](const Operation &swap, Builder &sb) {
    const SwapPlan &plan = plans.at(&swap);
    if (plan.exchanges.empty())
      return;
    Value *field = sl.binding.at(swap.operands[0]).buf;
    TypeDesc i32{Scalar::I32};
    TypeDesc ptr{PtrType{}};
    TypeDesc dt{MpiType{MpiKind::Datatype}};
    TypeDesc rq{MpiType{MpiKind::Request}};
    std::vector<Value *> requests;
    for (const ExchangePlan &xp : plan.exchanges) {
      const ExchangeAttr &e = xp.decl;
      int rankDims = static_cast<int>(e.size.size());
      // Pack the outgoing face strip (recv region shifted by the source
      // offset) into the send buffer.
      std::vector<Interval> local;
      for (int d = 0; d < rankDims; ++d)
        local.push_back({0, e.size[d]});
      lowering::emitNest(
          sb, Bounds(local),
          [&](Builder &inner, const std::vector<Value *> &ivs) {
            std::vector<Value *> loadOperands{field};
            for (int d = 0; d < rankDims; ++d)
              loadOperands.push_back(
                  inner.addIndex(ivs[d], e.at[d] + e.offset[d]));
            Operation *ld = inner.op("memref.load", loadOperands,
                                     {TypeDesc(xp.sendBuf->type.elemType())});
            std::vector<Value *> st{Builder::res(ld), xp.sendBuf};
            st.insert(st.end(), ivs.begin(), ivs.end());
            inner.op("memref.store", st, {});
          });
      Operation *unwrapRecv =
          sb.op("mpi.unwrap_memref", {xp.recvBuf}, {ptr, i32, dt});
      Operation *irecv = sb.op("mpi.irecv",
                               {&unwrapRecv->results[0],
                                &unwrapRecv->results[1],
                                &unwrapRecv->results[2], xp.neighbor.rank,
                                xp.recvTag},
                               {rq});
      requests.push_back(Builder::res(irecv));
      Operation *unwrapSend =
          sb.op("mpi.unwrap_memref", {xp.sendBuf}, {ptr, i32, dt});
      Operation *isend = sb.op("mpi.isend",
                               {&unwrapSend->results[0],
                                &unwrapSend->results[1],
                                &unwrapSend->results[2], xp.neighbor.rank,
                                xp.sendTag},
                               {rq});
      requests.push_back(Builder::res(isend));
    }
    sb.op("mpi.waitall", requests, {});
    for (const ExchangePlan &xp : plan.exchanges) {
      const ExchangeAttr &e = xp.decl;
      int rankDims = static_cast<int>(e.size.size());
      // Unpack into the halo strip; a missing neighbor zeroes the
      // outermost trip count instead of branching.
      Value *outerUb = Builder::res(
          sb.op("arith.select",
                {xp.neighbor.ok, sb.cIndex(e.size[0]), sb.cIndex(0)},
                {TypeDesc(Scalar::Index)}));
      lowering::emitFor(
          sb, sb.cIndex(0), outerUb,
          [&](Builder &mid, Value *iv0) {
            std::vector<Value *> ivs{iv0};
            std::function<void(Builder &, int)> rest =
                [&](Builder &inner, int d) {
                  if (d == rankDims) {
                    std::vector<Value *> loadOperands{xp.recvBuf};
                    loadOperands.insert(loadOperands.end(), ivs.begin(),
                                        ivs.end());
                    Operation *ld =
                        inner.op("memref.load", loadOperands,
                                 {TypeDesc(xp.recvBuf->type.elemType())});
                    std::vector<Value *> st{Builder::res(ld), field};
                    for (int k = 0; k < rankDims; ++k)
                      st.push_back(inner.addIndex(ivs[k], e.at[k]));
                    inner.op("memref.store", st, {});
                    return;
                  }
                  lowering::emitFor(inner, inner.cIndex(0),
                                    inner.cIndex(e.size[d]),
                                    [&](Builder &next, Value *iv) {
                                      ivs.push_back(iv);
                                      rest(next, d + 1);
                                      ivs.pop_back();
                                    });
                };
            rest(mid, 1);
          });
    }
  };
  lowerStepOps(sl);

  std::vector<int> src = lowering::rotationSources(groups, numArgs);
  std::vector<Value *> yields(numArgs);
  for (int i = 0; i < numArgs; ++i)
    yields[i] = iterVals[src[i]];
  tb.op("loop.yield", yields, {});

  for (auto &entry : plans)
    for (const ExchangePlan &xp : entry.second.exchanges) {
      b.op("memref.dealloc", {xp.sendBuf}, {});
      b.op("memref.dealloc", {xp.recvBuf}, {});
    }
  b.op("mpi.finalize", {}, {});
  std::vector<Value *> results;
  for (int i = 0; i < numArgs; ++i)
    results.push_back(&timeLoop->results[i]);
  b.op("func.return", results, {});

  runFunc->parent = &moduleBody(module);
  moduleOps[funcIdx] = std::move(runFunc);
}

//===----------------------------------------------------------------------===//
// lower-mpi-to-func
//===----------------------------------------------------------------------===//

struct MpiCallLowerer {
  mpi::AbiTable abi;
  std::vector<Diagnostic> *diags = nullptr;
  std::map<const Value *, Value *> vmap;
  // Symbol -> flat signature, in first-use order.
  std::vector<std::pair<std::string, FuncType>> decls;

  Value *mapped(Value *v) {
    auto it = vmap.find(v);
    return it != vmap.end() ? it->second : v;
  }

  Operation *call(Builder &b, const std::string &sym,
                  std::vector<Value *> args,
                  const std::vector<TypeDesc> &results) {
    FuncType sig;
    for (Value *a : args)
      sig.ins.push_back(a->type);
    sig.outs = results;
    bool known = false;
    for (auto &d : decls)
      if (d.first == sym)
        known = true;
    if (!known)
      decls.emplace_back(sym, sig);
    Operation *c = b.op("func.call", std::move(args), results);
    c->setAttr("callee", Attribute::makeString(sym));
    return c;
  }

  void lowerOp(Builder &b, const Operation &op) {
    TypeDesc i32{Scalar::I32};
    Value *comm = b.cI32(abi.commWorld);
    auto arg = [&](int i) { return mapped(op.operands[i]); };

    if (op.name == "mpi.init") {
      call(b, "MPI_Init", {}, {});
      return;
    }
    if (op.name == "mpi.finalize") {
      call(b, "MPI_Finalize", {}, {});
      return;
    }
    if (op.name == "mpi.comm_rank" || op.name == "mpi.comm_size") {
      const char *sym =
          op.name == "mpi.comm_rank" ? "MPI_Comm_rank" : "MPI_Comm_size";
      Operation *c = call(b, sym, {comm}, {i32});
      vmap[&op.results[0]] = Builder::res(c);
      return;
    }
    if (op.name == "mpi.unwrap_memref") {
      Value *buf = arg(0);
      Operation *base = b.op("memref.extract_base_pointer", {buf},
                             {TypeDesc(Scalar::Index)});
      Operation *ptr = b.op("llvm.int_to_ptr", {Builder::res(base)},
                            {TypeDesc(PtrType{})});
      std::int64_t count = 1;
      for (std::int64_t s : buf->type.allocShape())
        count *= s;
      vmap[&op.results[0]] = Builder::res(ptr);
      vmap[&op.results[1]] = b.cI32(count);
      vmap[&op.results[2]] = b.cI32(abi.datatypeFor(buf->type.elemType()));
      return;
    }
    if (op.name == "mpi.send") {
      call(b, "MPI_Send", {arg(0), arg(1), arg(2), arg(3), arg(4), comm},
           {});
      return;
    }
    if (op.name == "mpi.recv") {
      call(b, "MPI_Recv",
           {arg(0), arg(1), arg(2), arg(3), arg(4), comm,
            b.cI32(abi.statusesIgnore)},
           {});
      return;
    }
    if (op.name == "mpi.isend" || op.name == "mpi.irecv") {
      const char *sym = op.name == "mpi.isend" ? "MPI_Isend" : "MPI_Irecv";
      Operation *c = call(
          b, sym, {arg(0), arg(1), arg(2), arg(3), arg(4), comm}, {i32});
      vmap[&op.results[0]] = Builder::res(c);
      return;
    }
    if (op.name == "mpi.wait") {
      call(b, "MPI_Wait", {arg(0)}, {});
      return;
    }
    if (op.name == "mpi.test") {
      Operation *c = call(b, "MPI_Test", {arg(0)}, {i32});
      vmap[&op.results[0]] = Builder::res(c);
      vmap[&op.results[1]] = arg(0);
      return;
    }
    if (op.name == "mpi.waitall") {
      int n = op.numOperands();
      if (n == 0)
        return;
      BufferType bt;
      bt.elem = Scalar::I32;
      bt.shape = {n};
      Operation *alloc = b.op("memref.alloc", {}, {TypeDesc(bt)});
      for (int i = 0; i < n; ++i)
        b.op("memref.store",
             {mapped(op.operands[i]), Builder::res(alloc), b.cIndex(i)}, {});
      Operation *base = b.op("memref.extract_base_pointer",
                             {Builder::res(alloc)},
                             {TypeDesc(Scalar::Index)});
      Operation *ptr = b.op("llvm.int_to_ptr", {Builder::res(base)},
                            {TypeDesc(PtrType{})});
      call(b, "MPI_Waitall",
           {b.cI32(n), Builder::res(ptr), b.cI32(abi.statusesIgnore)}, {});
      b.op("memref.dealloc", {Builder::res(alloc)}, {});
      return;
    }
    if (op.name == "mpi.bcast") {
      call(b, "MPI_Bcast", {arg(0), arg(1), arg(2), arg(3), comm}, {});
      return;
    }
    if (op.name == "mpi.reduce" || op.name == "mpi.allreduce") {
      Value *reduceOp =
          b.cI32(abi.reduceOpValue(op.strAttr("op").value_or("sum")));
      if (op.name == "mpi.reduce")
        call(b, "MPI_Reduce",
             {arg(0), arg(1), arg(2), arg(3), reduceOp, arg(4), comm}, {});
      else
        call(b, "MPI_Allreduce",
             {arg(0), arg(1), arg(2), arg(3), reduceOp, comm}, {});
      return;
    }
    if (op.name == "mpi.gather") {
      call(b, "MPI_Gather",
           {arg(0), arg(1), arg(2), arg(3), arg(4), arg(5), arg(6), comm},
           {});
      return;
    }
    opError(op, *diags, "no call lowering for " + op.name);
  }

  void rewriteRegion(Region &region) {
    Region scratch;
    Builder b(scratch);
    auto old = std::move(region.ops);
    region.ops.clear();
    for (auto &opPtr : old) {
      if (opPtr->dialect() == "mpi") {
        lowerOp(b, *opPtr);
        continue;
      }
      for (Value *&o : opPtr->operands)
        o = mapped(o);
      for (Region &r : opPtr->regions)
        rewriteRegion(r);
      scratch.ops.push_back(std::move(opPtr));
    }
    region.ops = std::move(scratch.ops);
    for (auto &opPtr : region.ops)
      opPtr->parent = &region;
  }
};

void lowerMpiToFuncPass(Operation &module, const PassOptions &opts,
                        std::vector<Diagnostic> &diags) {
  Expected<mpi::AbiTable> abi =
      opts.has("abi") ? mpi::AbiTable::loadFile(opts.get("abi", ""))
                      : mpi::AbiTable::fromEnvironment();
  if (!abi.ok()) {
    diags.insert(diags.end(), abi.diags.begin(), abi.diags.end());
    return;
  }

  MpiCallLowerer lowerer;
  lowerer.abi = *abi;
  lowerer.diags = &diags;
  for (auto &opPtr : moduleBody(module).ops)
    if (opPtr->name == "func.func")
      for (Region &r : opPtr->regions)
        lowerer.rewriteRegion(r);

  for (const auto &[sym, sig] : lowerer.decls) {
    if (lookupFunc(module, sym))
      continue;
    auto decl = std::make_unique<Operation>("func.func");
    decl->setAttr("sym_name", Attribute::makeString(sym));
    decl->setAttr("function_type", Attribute(TypeAttr{TypeDesc(sig)}));
    moduleBody(module).push(std::move(decl));
  }
}

} // namespace

void registerMpiPasses() {
  auto &reg = PassRegistry::get();
  reg.registerPass(
      {"lower-dmp-to-mpi",
       "expand halo swaps to message passing inside a time-loop driver",
       lowerDmpToMpiPass});
  reg.registerPass(
      {"lower-mpi-to-func",
       "rewrite mpi ops into flat external calls using a library ABI "
       "(option: abi=path)",
       lowerMpiToFuncPass});
}

} // namespace halogen::ir
