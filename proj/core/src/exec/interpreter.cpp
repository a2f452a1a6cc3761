//===- interpreter.cpp - tree-walking IR evaluator ------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Functions are compiled once into instruction trees over dense value
// slots, then run with a flat frame per invocation. The instruction set
// mirrors the dialects one to one; there is no fast path that could change
// evaluation order or rounding, so every lowering level of the same
// program computes bit-identical results.
//
//===----------------------------------------------------------------------===//

#include "halogen/exec/interpreter.hpp"

#include "halogen/ir/diagnostics.hpp"

#include <cstring>
#include <sstream>
#include <unordered_map>

namespace halogen::exec {

using ir::Attribute;
using ir::ArrayAttr;
using ir::BufferType;
using ir::FieldType;
using ir::FloatAttr;
using ir::IntAttr;
using ir::Operation;
using ir::Region;
using ir::Scalar;
using ir::TrapError;
using ir::TypeDesc;
using ir::Value;

void RuntimeHooks::call(Interpreter &, const Operation &op,
                        const std::string &callee,
                        const std::vector<RtValue> &, std::vector<RtValue> &) {
  throw TrapError(op.path(), "call to undefined function '" + callee + "'");
}

void RuntimeHooks::mpiOp(Interpreter &, const Operation &op,
                         const std::vector<RtValue> &,
                         std::vector<RtValue> &) {
  throw TrapError(op.path(), "no message-passing runtime installed");
}

void RuntimeHooks::swap(Interpreter &, const Operation &op,
                        const std::shared_ptr<Buffer> &) {
  throw TrapError(op.path(), "no halo-exchange runtime installed");
}

namespace {

enum class Code : std::uint8_t {
  ConstI,
  ConstF64,
  ConstF32,
  AddF64,
  SubF64,
  MulF64,
  DivF64,
  AddF32,
  SubF32,
  MulF32,
  DivF32,
  AddI,
  SubI,
  MulI,
  DivI,
  RemI,
  AndI,
  OrI,
  CmpI,
  CmpF64,
  CmpF32,
  Select,
  For,
  Alloc,
  Dealloc,
  Load,
  Store,
  ExtractBase,
  IntToPtr,
  Call,
  StencilLoad,
  StencilApply,
  StencilStore,
  StencilAccess,
  DmpSwap,
  Mpi,
};

enum class Pred : std::int64_t { Eq, Ne, Slt, Sle, Sgt, Sge };

enum class MpiCode : std::int64_t {
  Init,
  Finalize,
  CommRank,
  CommSize,
  Send,
  Recv,
  Isend,
  Irecv,
  Wait,
  Waitall,
  Test,
  Bcast,
  Reduce,
  Allreduce,
  Gather,
  Unwrap,
};

struct Inst {
  Code code;
  const Operation *src = nullptr;
  int statId = 0;
  std::vector<int> args;
  std::vector<int> outs;
  std::int64_t imm = 0;
  double fimm = 0.0;
  float gimm = 0.0f;
  Scalar scalar = Scalar::F64;
  std::vector<std::int64_t> ia;
  std::vector<std::int64_t> ib;
  std::vector<Scalar> scalars;
  std::vector<int> regionArgs;
  std::vector<int> termArgs;
  std::vector<Inst> body;
};

struct Program {
  int frameSize = 0;
  std::vector<int> argSlots;
  std::vector<Inst> body;
  std::vector<int> returnSlots;
};

} // namespace

struct Interpreter::Impl {
  ir::Operation &module;
  RuntimeHooks *hooks;
  ir::mpi::AbiTable abiTable;

  std::map<std::string, Program> programs;
  std::unordered_map<std::string, int> statIds;
  std::vector<std::string> statNames;
  std::vector<std::int64_t> statCounts;

  std::vector<std::shared_ptr<Buffer>> handles;
  std::map<const Buffer *, std::int64_t> handleOf;

  std::vector<std::int64_t> curPoint;

  Impl(ir::Operation &m, RuntimeHooks *h, ir::mpi::AbiTable abi)
      : module(m), hooks(h), abiTable(std::move(abi)) {}

  int statIdFor(const std::string &name) {
    auto it = statIds.find(name);
    if (it != statIds.end())
      return it->second;
    int id = static_cast<int>(statNames.size());
    statIds.emplace(name, id);
    statNames.push_back(name);
    statCounts.push_back(0);
    return id;
  }

  const Program &programFor(const std::string &name, const Operation *site);
  void compileRegion(const Region &region, std::vector<Inst> &out,
                     const char *termName, std::vector<int> &termArgs);
  Inst compileOp(const Operation &op);

  void run(const std::vector<Inst> &insts, std::vector<RtValue> &f,
           Interpreter &self);
  std::vector<RtValue> invoke(Interpreter &self, const std::string &funcName,
                              std::vector<RtValue> args,
                              const Operation *site);
};

namespace {

[[noreturn]] void trap(const Operation *src, const std::string &msg) {
  throw TrapError(src ? src->path() : "", msg);
}

int slotOf(const Operation &op, Value *v) {
  if (!v || v->slot < 0)
    trap(&op, "operand has no frame slot");
  return v->slot;
}

Scalar resultScalar(const Operation &op) {
  if (op.numResults() < 1 || !op.results[0].type.isScalar())
    trap(&op, "expected a scalar result");
  return op.results[0].type.scalar();
}

std::int64_t boundsPayload(const Operation &op, const char *key,
                           std::vector<std::int64_t> &out) {
  const Attribute *a = op.attr(key);
  if (!a || !ir::attrToIndexVector(*a, out))
    trap(&op, std::string("missing region attribute '") + key + "'");
  return static_cast<std::int64_t>(out.size());
}

} // namespace

Inst Interpreter::Impl::compileOp(const Operation &op) {
  Inst ins;
  ins.src = &op;
  ins.statId = statIdFor(op.name);
  for (Value *v : op.operands)
    ins.args.push_back(slotOf(op, v));
  for (const Value &r : op.results)
    ins.outs.push_back(r.slot);

  const std::string &n = op.name;
  if (n == "arith.constant") {
    const Attribute *a = op.attr("value");
    if (!a)
      trap(&op, "constant without value");
    if (const auto *i = a->dynAs<IntAttr>()) {
      ins.code = Code::ConstI;
      ins.imm = i->value;
    } else if (const auto *fl = a->dynAs<FloatAttr>()) {
      if (fl->type == Scalar::F32) {
        ins.code = Code::ConstF32;
        ins.gimm = fl->asFloat();
      } else {
        ins.code = Code::ConstF64;
        ins.fimm = fl->asDouble();
      }
    } else {
      trap(&op, "unsupported constant payload");
    }
    return ins;
  }
  if (n == "arith.addf" || n == "arith.subf" || n == "arith.mulf" ||
      n == "arith.divf") {
    bool f32 = resultScalar(op) == Scalar::F32;
    char k = n[6];
    if (k == 'a')
      ins.code = f32 ? Code::AddF32 : Code::AddF64;
    else if (k == 's')
      ins.code = f32 ? Code::SubF32 : Code::SubF64;
    else if (k == 'm')
      ins.code = f32 ? Code::MulF32 : Code::MulF64;
    else
      ins.code = f32 ? Code::DivF32 : Code::DivF64;
    return ins;
  }
  if (n == "arith.addi" || n == "arith.subi" || n == "arith.muli" ||
      n == "arith.divi" || n == "arith.remi" || n == "arith.andi" ||
      n == "arith.ori") {
    char k = n[6];
    ins.code = k == 'a'   ? (n[7] == 'd' ? Code::AddI : Code::AndI)
               : k == 's' ? Code::SubI
               : k == 'm' ? Code::MulI
               : k == 'd' ? Code::DivI
               : k == 'r' ? Code::RemI
                          : Code::OrI;
    return ins;
  }
  if (n == "arith.cmp") {
    auto p = op.strAttr("predicate");
    if (!p)
      trap(&op, "comparison without predicate");
    ins.imm = *p == "eq"    ? static_cast<std::int64_t>(Pred::Eq)
              : *p == "ne"  ? static_cast<std::int64_t>(Pred::Ne)
              : *p == "slt" ? static_cast<std::int64_t>(Pred::Slt)
              : *p == "sle" ? static_cast<std::int64_t>(Pred::Sle)
              : *p == "sgt" ? static_cast<std::int64_t>(Pred::Sgt)
                            : static_cast<std::int64_t>(Pred::Sge);
    Scalar s = op.operands[0]->type.scalar();
    ins.code = s == Scalar::F64   ? Code::CmpF64
               : s == Scalar::F32 ? Code::CmpF32
                                  : Code::CmpI;
    return ins;
  }
  if (n == "arith.select") {
    ins.code = Code::Select;
    return ins;
  }
  if (n == "loop.for") {
    ins.code = Code::For;
    const Region &body = op.regions[0];
    for (const Value &a : body.args)
      ins.regionArgs.push_back(a.slot);
    compileRegion(body, ins.body, "loop.yield", ins.termArgs);
    return ins;
  }
  if (n == "memref.alloc") {
    ins.code = Code::Alloc;
    const auto *bt = op.results[0].type.dynAs<BufferType>();
    if (!bt)
      trap(&op, "alloc result must be a buffer");
    ins.scalar = bt->elem;
    ins.ia = bt->shape;
    return ins;
  }
  if (n == "memref.dealloc") {
    ins.code = Code::Dealloc;
    return ins;
  }
  if (n == "memref.load") {
    ins.code = Code::Load;
    ins.scalar = resultScalar(op);
    return ins;
  }
  if (n == "memref.store") {
    ins.code = Code::Store;
    ins.scalar = op.operands[0]->type.isScalar() ? op.operands[0]->type.scalar()
                                                 : Scalar::F64;
    return ins;
  }
  if (n == "memref.extract_base_pointer") {
    ins.code = Code::ExtractBase;
    return ins;
  }
  if (n == "llvm.int_to_ptr") {
    ins.code = Code::IntToPtr;
    return ins;
  }
  if (n == "func.call") {
    ins.code = Code::Call;
    return ins;
  }
  if (n == "stencil.load") {
    ins.code = Code::StencilLoad;
    return ins;
  }
  if (n == "stencil.store") {
    ins.code = Code::StencilStore;
    boundsPayload(op, "lb", ins.ia);
    boundsPayload(op, "ub", ins.ib);
    return ins;
  }
  if (n == "stencil.apply") {
    ins.code = Code::StencilApply;
    for (const Value &r : op.results) {
      const auto *tt = r.type.dynAs<ir::TempType>();
      if (!tt || !tt->bounds)
        trap(&op, "apply result bounds are unresolved; run propagate-bounds");
      ins.scalars.push_back(tt->elem);
      if (ins.ia.empty())
        for (const ir::Interval &iv : tt->bounds->dims) {
          ins.ia.push_back(iv.lb);
          ins.ib.push_back(iv.ub);
        }
    }
    const Region &body = op.regions[0];
    for (const Value &a : body.args)
      ins.regionArgs.push_back(a.slot);
    compileRegion(body, ins.body, "stencil.return", ins.termArgs);
    return ins;
  }
  if (n == "stencil.access") {
    ins.code = Code::StencilAccess;
    ins.scalar = resultScalar(op);
    boundsPayload(op, "offsets", ins.ia);
    return ins;
  }
  if (n == "dmp.swap") {
    ins.code = Code::DmpSwap;
    return ins;
  }
  if (op.dialect() == "mpi") {
    ins.code = Code::Mpi;
    std::string suffix = n.substr(4);
    static const std::unordered_map<std::string, MpiCode> table = {
        {"init", MpiCode::Init},
        {"finalize", MpiCode::Finalize},
        {"comm_rank", MpiCode::CommRank},
        {"comm_size", MpiCode::CommSize},
        {"send", MpiCode::Send},
        {"recv", MpiCode::Recv},
        {"isend", MpiCode::Isend},
        {"irecv", MpiCode::Irecv},
        {"wait", MpiCode::Wait},
        {"waitall", MpiCode::Waitall},
        {"test", MpiCode::Test},
        {"bcast", MpiCode::Bcast},
        {"reduce", MpiCode::Reduce},
        {"allreduce", MpiCode::Allreduce},
        {"gather", MpiCode::Gather},
        {"unwrap_memref", MpiCode::Unwrap},
    };
    auto it = table.find(suffix);
    if (it == table.end())
      trap(&op, "unknown message-passing op");
    ins.imm = static_cast<std::int64_t>(it->second);
    return ins;
  }
  trap(&op, "op has no interpretation");
}

void Interpreter::Impl::compileRegion(const Region &region,
                                      std::vector<Inst> &out,
                                      const char *termName,
                                      std::vector<int> &termArgs) {
  if (region.ops.empty())
    trap(region.owner, "region is missing its terminator");
  const Operation &term = *region.ops.back();
  if (term.name != termName)
    trap(&term, std::string("expected terminator '") + termName + "'");
  for (Value *v : term.operands)
    termArgs.push_back(slotOf(term, v));
  for (std::size_t i = 0; i + 1 < region.ops.size(); ++i)
    out.push_back(compileOp(*region.ops[i]));
}

const Program &Interpreter::Impl::programFor(const std::string &name,
                                             const Operation *site) {
  auto it = programs.find(name);
  if (it != programs.end())
    return it->second;
  Operation *func = ir::lookupFunc(module, name);
  if (!func || func->regions.empty() || func->regions[0].ops.empty())
    trap(site, "call to undefined function '" + name + "'");
  Program p;
  p.frameSize = ir::numberValues(*func);
  Region &body = func->regions[0];
  for (const Value &a : body.args)
    p.argSlots.push_back(a.slot);
  compileRegion(body, p.body, "func.return", p.returnSlots);
  auto [pos, inserted] = programs.emplace(name, std::move(p));
  (void)inserted;
  return pos->second;
}

namespace {

std::int64_t loadScalarInt(const Buffer &b, std::int64_t i) {
  return b.getInt(i);
}

void readRaw(const Inst &ins, const std::vector<RtValue> &f, int first,
             const std::shared_ptr<Buffer> &buf,
             std::vector<std::int64_t> &raw) {
  raw.clear();
  for (std::size_t k = static_cast<std::size_t>(first); k < ins.args.size();
       ++k)
    raw.push_back(f[ins.args[k]].i);
  if (!buf)
    trap(ins.src, "access through a null buffer");
  if (!buf->rawInBounds(raw)) {
    std::ostringstream os;
    os << "out-of-bounds access at [";
    for (std::size_t d = 0; d < raw.size(); ++d)
      os << (d ? ", " : "") << raw[d];
    os << "] in a buffer of shape [";
    for (std::size_t d = 0; d < buf->shape.size(); ++d)
      os << (d ? ", " : "") << buf->shape[d];
    os << "]";
    trap(ins.src, os.str());
  }
}

} // namespace

void Interpreter::Impl::run(const std::vector<Inst> &insts,
                            std::vector<RtValue> &f, Interpreter &self) {
  std::vector<std::int64_t> raw;
  for (const Inst &ins : insts) {
    ++statCounts[ins.statId];
    switch (ins.code) {
    case Code::ConstI:
      f[ins.outs[0]].i = ins.imm;
      break;
    case Code::ConstF64:
      f[ins.outs[0]].f = ins.fimm;
      break;
    case Code::ConstF32:
      f[ins.outs[0]].g = ins.gimm;
      break;
    case Code::AddF64:
      f[ins.outs[0]].f = f[ins.args[0]].f + f[ins.args[1]].f;
      break;
    case Code::SubF64:
      f[ins.outs[0]].f = f[ins.args[0]].f - f[ins.args[1]].f;
      break;
    case Code::MulF64:
      f[ins.outs[0]].f = f[ins.args[0]].f * f[ins.args[1]].f;
      break;
    case Code::DivF64:
      f[ins.outs[0]].f = f[ins.args[0]].f / f[ins.args[1]].f;
      break;
    case Code::AddF32:
      f[ins.outs[0]].g = f[ins.args[0]].g + f[ins.args[1]].g;
      break;
    case Code::SubF32:
      f[ins.outs[0]].g = f[ins.args[0]].g - f[ins.args[1]].g;
      break;
    case Code::MulF32:
      f[ins.outs[0]].g = f[ins.args[0]].g * f[ins.args[1]].g;
      break;
    case Code::DivF32:
      f[ins.outs[0]].g = f[ins.args[0]].g / f[ins.args[1]].g;
      break;
    case Code::AddI:
      f[ins.outs[0]].i = f[ins.args[0]].i + f[ins.args[1]].i;
      break;
    case Code::SubI:
      f[ins.outs[0]].i = f[ins.args[0]].i - f[ins.args[1]].i;
      break;
    case Code::MulI:
      f[ins.outs[0]].i = f[ins.args[0]].i * f[ins.args[1]].i;
      break;
    case Code::DivI: {
      std::int64_t d = f[ins.args[1]].i;
      if (d == 0)
        trap(ins.src, "integer division by zero");
      f[ins.outs[0]].i = f[ins.args[0]].i / d;
      break;
    }
    case Code::RemI: {
      std::int64_t d = f[ins.args[1]].i;
      if (d == 0)
        trap(ins.src, "integer division by zero");
      f[ins.outs[0]].i = f[ins.args[0]].i % d;
      break;
    }
    case Code::AndI:
      f[ins.outs[0]].i = f[ins.args[0]].i & f[ins.args[1]].i;
      break;
    case Code::OrI:
      f[ins.outs[0]].i = f[ins.args[0]].i | f[ins.args[1]].i;
      break;
    case Code::CmpI:
    case Code::CmpF64:
    case Code::CmpF32: {
      bool r;
      if (ins.code == Code::CmpI) {
        std::int64_t a = f[ins.args[0]].i, b = f[ins.args[1]].i;
        switch (static_cast<Pred>(ins.imm)) {
        case Pred::Eq:
          r = a == b;
          break;
        case Pred::Ne:
          r = a != b;
          break;
        case Pred::Slt:
          r = a < b;
          break;
        case Pred::Sle:
          r = a <= b;
          break;
        case Pred::Sgt:
          r = a > b;
          break;
        default:
          r = a >= b;
        }
      } else {
        double a = ins.code == Code::CmpF64 ? f[ins.args[0]].f
                                            : static_cast<double>(f[ins.args[0]].g);
        double b = ins.code == Code::CmpF64 ? f[ins.args[1]].f
                                            : static_cast<double>(f[ins.args[1]].g);
        switch (static_cast<Pred>(ins.imm)) {
        case Pred::Eq:
          r = a == b;
          break;
        case Pred::Ne:
          r = a != b;
          break;
        case Pred::Slt:
          r = a < b;
          break;
        case Pred::Sle:
          r = a <= b;
          break;
        case Pred::Sgt:
          r = a > b;
          break;
        default:
          r = a >= b;
        }
      }
      f[ins.outs[0]].i = r ? 1 : 0;
      break;
    }
    case Code::Select:
      f[ins.outs[0]] = f[ins.args[0]].i != 0 ? f[ins.args[1]] : f[ins.args[2]];
      break;
    case Code::For: {
      std::int64_t lo = f[ins.args[0]].i;
      std::int64_t hi = f[ins.args[1]].i;
      std::int64_t step = f[ins.args[2]].i;
      if (step <= 0)
        trap(ins.src, "loop step must be positive");
      std::size_t iters = ins.args.size() - 3;
      for (std::size_t k = 0; k < iters; ++k)
        f[ins.regionArgs[1 + k]] = f[ins.args[3 + k]];
      std::vector<RtValue> yielded(iters);
      for (std::int64_t iv = lo; iv < hi; iv += step) {
        f[ins.regionArgs[0]].i = iv;
        run(ins.body, f, self);
        for (std::size_t k = 0; k < iters; ++k)
          yielded[k] = f[ins.termArgs[k]];
        for (std::size_t k = 0; k < iters; ++k)
          f[ins.regionArgs[1 + k]] = yielded[k];
      }
      for (std::size_t k = 0; k < iters; ++k)
        f[ins.outs[k]] = f[ins.regionArgs[1 + k]];
      break;
    }
    case Code::Alloc:
      f[ins.outs[0]].buf = Buffer::make(ins.scalar, ins.ia);
      break;
    case Code::Dealloc:
      f[ins.args[0]].buf.reset();
      break;
    case Code::Load: {
      const auto &buf = f[ins.args[0]].buf;
      readRaw(ins, f, 1, buf, raw);
      std::int64_t idx = buf->flatIndex(raw);
      if (ins.scalar == Scalar::F64)
        f[ins.outs[0]].f = buf->getF64(idx);
      else if (ins.scalar == Scalar::F32)
        f[ins.outs[0]].g = buf->getF32(idx);
      else
        f[ins.outs[0]].i = loadScalarInt(*buf, idx);
      break;
    }
    case Code::Store: {
      const auto &buf = f[ins.args[1]].buf;
      readRaw(ins, f, 2, buf, raw);
      std::int64_t idx = buf->flatIndex(raw);
      if (ins.scalar == Scalar::F64)
        buf->setF64(idx, f[ins.args[0]].f);
      else if (ins.scalar == Scalar::F32)
        buf->setF32(idx, f[ins.args[0]].g);
      else
        buf->setInt(idx, f[ins.args[0]].i);
      break;
    }
    case Code::ExtractBase:
      if (!f[ins.args[0]].buf)
        trap(ins.src, "access through a null buffer");
      f[ins.outs[0]].i = self.registerBuffer(f[ins.args[0]].buf);
      break;
    case Code::IntToPtr:
      f[ins.outs[0]].i = f[ins.args[0]].i;
      break;
    case Code::Call: {
      auto callee = ins.src->strAttr("callee");
      if (!callee)
        trap(ins.src, "call without callee");
      std::vector<RtValue> args;
      args.reserve(ins.args.size());
      for (int s : ins.args)
        args.push_back(f[s]);
      const Operation *target = ir::lookupFunc(module, *callee);
      std::vector<RtValue> results;
      if (target && !target->regions.empty() && !target->regions[0].ops.empty()) {
        results = invoke(self, *callee, std::move(args), ins.src);
      } else {
        results.resize(ins.outs.size());
        if (!hooks)
          trap(ins.src, "call to undefined function '" + *callee + "'");
        hooks->call(self, *ins.src, *callee, args, results);
      }
      if (results.size() != ins.outs.size())
        trap(ins.src, "arity mismatch at a dispatched call");
      for (std::size_t k = 0; k < ins.outs.size(); ++k)
        f[ins.outs[k]] = results[k];
      break;
    }
    case Code::StencilLoad: {
      const auto &buf = f[ins.args[0]].buf;
      if (!buf)
        trap(ins.src, "access through a null buffer");
      f[ins.outs[0]].buf = buf->clone();
      break;
    }
    case Code::StencilStore: {
      const auto &src = f[ins.args[0]].buf;
      const auto &dst = f[ins.args[1]].buf;
      if (!src || !dst)
        trap(ins.src, "access through a null buffer");
      int r = static_cast<int>(ins.ia.size());
      std::vector<std::int64_t> p = ins.ia;
      bool done = false;
      while (!done) {
        std::int64_t si = 0, di = 0;
        for (int d = 0; d < r; ++d) {
          std::int64_t sr = p[d] - src->lb[d];
          std::int64_t dr = p[d] - dst->lb[d];
          if (sr < 0 || sr >= src->shape[d] || dr < 0 || dr >= dst->shape[d])
            trap(ins.src, "store region escapes the field bounds");
          si = si * src->shape[d] + sr;
          di = di * dst->shape[d] + dr;
        }
        dst->copyElem(di, *src, si);
        done = true;
        for (int d = r - 1; d >= 0; --d) {
          if (++p[d] < ins.ib[d]) {
            done = false;
            break;
          }
          p[d] = ins.ia[d];
        }
      }
      break;
    }
    case Code::StencilApply: {
      int r = static_cast<int>(ins.ia.size());
      std::size_t nres = ins.outs.size();
      std::vector<std::shared_ptr<Buffer>> results;
      for (std::size_t k = 0; k < nres; ++k) {
        ir::Bounds b;
        for (int d = 0; d < r; ++d)
          b.dims.push_back({ins.ia[d], ins.ib[d]});
        results.push_back(Buffer::forBounds(ins.scalars[k], b));
      }
      for (std::size_t k = 0; k < ins.args.size(); ++k)
        f[ins.regionArgs[k]] = f[ins.args[k]];
      std::vector<std::int64_t> p = ins.ia;
      std::vector<std::int64_t> saved = curPoint;
      bool any = true;
      for (int d = 0; d < r; ++d)
        if (ins.ia[d] >= ins.ib[d])
          any = false;
      while (any) {
        curPoint = p;
        run(ins.body, f, self);
        std::int64_t idx = 0;
        for (int d = 0; d < r; ++d)
          idx = idx * (ins.ib[d] - ins.ia[d]) + (p[d] - ins.ia[d]);
        for (std::size_t k = 0; k < nres; ++k) {
          if (ins.scalars[k] == Scalar::F64)
            results[k]->setF64(idx, f[ins.termArgs[k]].f);
          else if (ins.scalars[k] == Scalar::F32)
            results[k]->setF32(idx, f[ins.termArgs[k]].g);
          else
            results[k]->setInt(idx, f[ins.termArgs[k]].i);
        }
        any = false;
        for (int d = r - 1; d >= 0; --d) {
          if (++p[d] < ins.ib[d]) {
            any = true;
            break;
          }
          p[d] = ins.ia[d];
        }
      }
      curPoint = std::move(saved);
      for (std::size_t k = 0; k < nres; ++k)
        f[ins.outs[k]].buf = std::move(results[k]);
      break;
    }
    case Code::StencilAccess: {
      const auto &buf = f[ins.args[0]].buf;
      if (!buf)
        trap(ins.src, "access through a null buffer");
      if (curPoint.size() != ins.ia.size())
        trap(ins.src, "access outside an apply region");
      raw.clear();
      std::int64_t idx = 0;
      for (std::size_t d = 0; d < ins.ia.size(); ++d) {
        std::int64_t rr = curPoint[d] + ins.ia[d] - buf->lb[d];
        if (rr < 0 || rr >= buf->shape[d])
          trap(ins.src, "stencil access escapes the value bounds");
        idx = idx * buf->shape[d] + rr;
      }
      if (ins.scalar == Scalar::F64)
        f[ins.outs[0]].f = buf->getF64(idx);
      else if (ins.scalar == Scalar::F32)
        f[ins.outs[0]].g = buf->getF32(idx);
      else
        f[ins.outs[0]].i = loadScalarInt(*buf, idx);
      break;
    }
    case Code::DmpSwap:
      if (!hooks)
        trap(ins.src, "no halo-exchange runtime installed");
      hooks->swap(self, *ins.src, f[ins.args[0]].buf);
      break;
    case Code::Mpi: {
      auto mc = static_cast<MpiCode>(ins.imm);
      if (mc == MpiCode::Unwrap) {
        const auto &buf = f[ins.args[0]].buf;
        if (!buf)
          trap(ins.src, "access through a null buffer");
        f[ins.outs[0]].i = self.registerBuffer(buf);
        f[ins.outs[1]].i = buf->count();
        f[ins.outs[2]].i = abiTable.datatypeFor(buf->elem);
        break;
      }
      if (!hooks)
        trap(ins.src, "no message-passing runtime installed");
      std::vector<RtValue> args;
      args.reserve(ins.args.size());
      for (int s : ins.args)
        args.push_back(f[s]);
      std::vector<RtValue> results(ins.outs.size());
      hooks->mpiOp(self, *ins.src, args, results);
      for (std::size_t k = 0; k < ins.outs.size(); ++k)
        f[ins.outs[k]] = results[k];
      break;
    }
    }
  }
}

std::vector<RtValue> Interpreter::Impl::invoke(Interpreter &self,
                                               const std::string &funcName,
                                               std::vector<RtValue> args,
                                               const Operation *site) {
  const Program &p = programFor(funcName, site);
  if (args.size() != p.argSlots.size())
    trap(site, "arity mismatch calling '" + funcName + "'");
  std::vector<RtValue> frame(static_cast<std::size_t>(p.frameSize));
  for (std::size_t k = 0; k < args.size(); ++k)
    frame[p.argSlots[k]] = std::move(args[k]);
  run(p.body, frame, self);
  std::vector<RtValue> out;
  out.reserve(p.returnSlots.size());
  for (int s : p.returnSlots)
    out.push_back(frame[s]);
  return out;
}

Interpreter::Interpreter(ir::Operation &module, RuntimeHooks *hooks,
                         ir::mpi::AbiTable abi)
    : impl(std::make_unique<Impl>(module, hooks, std::move(abi))) {}

Interpreter::~Interpreter() = default;

std::vector<RtValue> Interpreter::invoke(const std::string &funcName,
                                         std::vector<RtValue> args) {
  return impl->invoke(*this, funcName, std::move(args), nullptr);
}

std::int64_t Interpreter::registerBuffer(const std::shared_ptr<Buffer> &b) {
  auto it = impl->handleOf.find(b.get());
  if (it != impl->handleOf.end())
    return it->second;
  std::int64_t id = static_cast<std::int64_t>(impl->handles.size());
  impl->handles.push_back(b);
  impl->handleOf.emplace(b.get(), id);
  return id;
}

std::shared_ptr<Buffer> Interpreter::bufferAt(std::int64_t handle,
                                              const std::string &opPath) const {
  if (handle < 0 ||
      handle >= static_cast<std::int64_t>(impl->handles.size()))
    throw TrapError(opPath, "pointer does not name a live buffer");
  return impl->handles[static_cast<std::size_t>(handle)];
}

const ir::mpi::AbiTable &Interpreter::abi() const { return impl->abiTable; }

std::map<std::string, std::int64_t> Interpreter::opCounts() const {
  std::map<std::string, std::int64_t> out;
  for (std::size_t i = 0; i < impl->statNames.size(); ++i)
    if (impl->statCounts[i] != 0)
      out[impl->statNames[i]] = impl->statCounts[i];
  return out;
}

void Interpreter::resetOpCounts() {
  for (auto &c : impl->statCounts)
    c = 0;
}

} // namespace halogen::exec
