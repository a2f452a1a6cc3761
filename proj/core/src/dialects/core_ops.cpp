//===- core_ops.cpp - builtin, func, arith, loop, memref, llvm ops -----------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "contracts.hpp"
#include "registration.hpp"

#include "halogen/ir/dialect.hpp"

namespace halogen::ir {

using namespace contract;

namespace {

void verifyModuleOp(const Operation &op, std::vector<Diagnostic> &diags) {
  expectOperands(op, 0, diags);
  expectResults(op, 0, diags);
  expectRegions(op, 1, diags);
}

void verifyFuncFunc(const Operation &op, std::vector<Diagnostic> &diags) {
  expectOperands(op, 0, diags);
  expectResults(op, 0, diags);
  if (!op.strAttr("sym_name")) {
    opError(op, diags, "func.func requires a sym_name attribute");
    return;
  }
  const Attribute *fnAttr = expectAttr(op, "function_type", diags);
  if (!fnAttr)
    return;
  const TypeAttr *ty = fnAttr->dynAs<TypeAttr>();
  if (!ty || !ty->type.is<FuncType>()) {
    opError(op, diags, "function_type must be a function type");
    return;
  }
  const FuncType &sig = ty->type.as<FuncType>();
  if (op.regions.empty())
    return; // external declaration
  if (op.regions.size() != 1) {
    opError(op, diags, "func.func takes at most one region");
    return;
  }
  const Region &body = op.regions[0];
  if (body.args.size() != sig.ins.size()) {
    opError(op, diags, "entry block arguments do not match the signature");
    return;
  }
  for (size_t i = 0; i < sig.ins.size(); ++i)
    if (!(body.args[i].type == sig.ins[i]))
      opError(op, diags,
              "entry argument #" + std::to_string(i) +
                  " does not match the signature");
  const Operation *term = lastOp(body);
  if (!term || term->name != "func.return") {
    opError(op, diags, "function body must end with func.return");
    return;
  }
  if (term->operands.size() != sig.outs.size()) {
    opError(*term, diags, "func.return arity does not match the signature");
    return;
  }
  for (size_t i = 0; i < sig.outs.size(); ++i)
    if (term->operands[i] && !(term->operands[i]->type == sig.outs[i]))
      opError(*term, diags,
              "func.return operand #" + std::to_string(i) +
                  " does not match the signature");
}

void verifyFuncReturn(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  // Types are checked against the signature by verifyFuncFunc.
}

void verifyFuncCall(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!op.strAttr("callee"))
    opError(op, diags, "func.call requires a callee attribute");
  // The callee's existence and signature are checked with module context.
}

void verifyArithConstant(const Operation &op, std::vector<Diagnostic> &diags) {
  expectOperands(op, 0, diags);
  expectNoRegions(op, diags);
  if (!expectResults(op, 1, diags))
    return;
  const Attribute *v = expectAttr(op, "value", diags);
  if (!v)
    return;
  const TypeDesc &rt = op.results[0].type;
  if (!rt.isScalar()) {
    opError(op, diags, "arith.constant result must be a scalar");
    return;
  }
  if (const auto *f = v->dynAs<FloatAttr>()) {
    if (!rt.isScalar(f->type))
      opError(op, diags, "constant value type does not match the result");
  } else if (const auto *i = v->dynAs<IntAttr>()) {
    if (!rt.isScalar(i->type))
      opError(op, diags, "constant value type does not match the result");
    if (i->type == Scalar::I1 && (i->value < 0 || i->value > 1))
      opError(op, diags, "i1 constant must be 0 or 1");
  } else {
    opError(op, diags, "arith.constant value must be a number");
  }
}

void verifyArithBinary(const Operation &op, std::vector<Diagnostic> &diags,
                       bool wantFloat) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 2, diags) || !expectResults(op, 1, diags))
    return;
  const TypeDesc &rt = op.results[0].type;
  if (wantFloat ? !rt.isFloat() : !rt.isInt()) {
    opError(op, diags, std::string("result must be ") +
                           (wantFloat ? "a float" : "an integer") + " scalar");
    return;
  }
  for (int i = 0; i < 2; ++i)
    if (op.operands[i] && !(op.operands[i]->type == rt))
      opError(op, diags,
              "operand #" + std::to_string(i) + " does not match the result");
}

void verifyArithCmp(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 2, diags) || !expectResults(op, 1, diags))
    return;
  expectResultType(
      op, 0, [](const TypeDesc &t) { return t.isScalar(Scalar::I1); }, "i1",
      diags);
  auto pred = op.strAttr("predicate");
  if (!pred) {
    opError(op, diags, "arith.cmp requires a predicate attribute");
    return;
  }
  static const char *known[] = {"eq", "ne", "slt", "sle", "sgt", "sge"};
  bool ok = false;
  for (const char *k : known)
    ok = ok || *pred == k;
  if (!ok)
    opError(op, diags, "unknown comparison predicate '" + *pred + "'");
  if (op.operands[0] && op.operands[1]) {
    if (!(op.operands[0]->type == op.operands[1]->type))
      opError(op, diags, "comparison operands must have the same type");
    else if (!op.operands[0]->type.isScalar())
      opError(op, diags, "comparison operands must be scalars");
  }
}

void verifyArithSelect(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 3, diags) || !expectResults(op, 1, diags))
    return;
  expectOperandScalar(op, 0, Scalar::I1, diags);
  const TypeDesc &rt = op.results[0].type;
  for (int i = 1; i < 3; ++i)
    if (op.operands[i] && !(op.operands[i]->type == rt))
      opError(op, diags,
              "operand #" + std::to_string(i) + " does not match the result");
}

void verifyLoopFor(const Operation &op, std::vector<Diagnostic> &diags) {
  if (op.numOperands() < 3) {
    opError(op, diags, "loop.for expects lower, upper, and step operands");
    return;
  }
  for (int i = 0; i < 3; ++i)
    expectOperandScalar(op, i, Scalar::Index, diags);
  size_t iters = op.numOperands() - 3;
  if (op.results.size() != iters) {
    opError(op, diags, "loop.for must return one value per iteration arg");
    return;
  }
  if (!expectRegions(op, 1, diags))
    return;
  const Region &body = op.regions[0];
  if (body.args.size() != 1 + iters) {
    opError(op, diags,
            "loop body needs the induction variable plus one argument per "
            "iteration arg");
    return;
  }
  if (!body.args[0].type.isScalar(Scalar::Index))
    opError(op, diags, "induction variable must be index-typed");
  for (size_t i = 0; i < iters; ++i) {
    const TypeDesc &t = op.operands[3 + i] ? op.operands[3 + i]->type
                                           : body.args[1 + i].type;
    if (!(body.args[1 + i].type == t) || !(op.results[i].type == t))
      opError(op, diags,
              "iteration arg #" + std::to_string(i) +
                  " must have one type across init, body, and result");
  }
  const Operation *term = lastOp(body);
  if (!term || term->name != "loop.yield") {
    opError(op, diags, "loop body must end with loop.yield");
    return;
  }
  if (term->operands.size() != iters) {
    opError(*term, diags, "loop.yield arity does not match iteration args");
    return;
  }
  for (size_t i = 0; i < iters; ++i)
    if (term->operands[i] && !(term->operands[i]->type == op.results[i].type))
      opError(*term, diags,
              "loop.yield operand #" + std::to_string(i) +
                  " does not match the iteration arg type");
}

void verifyLoopYield(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
}

void verifyMemrefAlloc(const Operation &op, std::vector<Diagnostic> &diags) {
  expectOperands(op, 0, diags);
  expectNoRegions(op, diags);
  if (!expectResults(op, 1, diags))
    return;
  const auto *b = op.results[0].type.dynAs<BufferType>();
  if (!b) {
    opError(op, diags, "memref.alloc result must be a memref type");
    return;
  }
  if (b->shape.empty())
    opError(op, diags, "memref.alloc needs at least one dimension");
  for (std::int64_t d : b->shape)
    if (d < 1)
      opError(op, diags, "memref dimensions must be at least 1");
}

bool checkIndexing(const Operation &op, int bufIdx, int firstIdx,
                   std::vector<Diagnostic> &diags) {
  const TypeDesc &bt = op.operands[bufIdx]->type;
  if (!bt.isBufferLike()) {
    opError(op, diags, "expected a buffer-like operand");
    return false;
  }
  size_t rank = bt.allocShape().size();
  size_t given = op.numOperands() - firstIdx;
  if (given != rank) {
    opError(op, diags, "expected " + std::to_string(rank) + " indices, got " +
                           std::to_string(given));
    return false;
  }
  bool ok = true;
  for (int i = firstIdx; i < op.numOperands(); ++i)
    ok &= expectOperandScalar(op, i, Scalar::Index, diags);
  return ok;
}

void verifyMemrefLoad(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectResults(op, 1, diags) || op.numOperands() < 1 ||
      !op.operands[0])
    return;
  if (!checkIndexing(op, 0, 1, diags))
    return;
  if (!op.results[0].type.isScalar(op.operands[0]->type.elemType()))
    opError(op, diags, "loaded value must have the buffer's element type");
}

void verifyMemrefStore(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  if (op.numOperands() < 2 || !op.operands[0] || !op.operands[1])
    return;
  if (!checkIndexing(op, 1, 2, diags))
    return;
  if (!op.operands[0]->type.isScalar(op.operands[1]->type.elemType()))
    opError(op, diags, "stored value must have the buffer's element type");
}

void verifyMemrefDealloc(const Operation &op, std::vector<Diagnostic> &diags) {
  expectResults(op, 0, diags);
  expectNoRegions(op, diags);
  if (!expectOperands(op, 1, diags))
    return;
  expectOperandType(
      op, 0, [](const TypeDesc &t) { return t.isBufferLike(); },
      "a buffer-like type", diags);
}

void verifyExtractBasePointer(const Operation &op,
                              std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 1, diags) || !expectResults(op, 1, diags))
    return;
  expectOperandType(
      op, 0, [](const TypeDesc &t) { return t.isBufferLike(); },
      "a buffer-like type", diags);
  expectResultType(
      op, 0, [](const TypeDesc &t) { return t.isScalar(Scalar::Index); },
      "index", diags);
}

void verifyIntToPtr(const Operation &op, std::vector<Diagnostic> &diags) {
  expectNoRegions(op, diags);
  if (!expectOperands(op, 1, diags) || !expectResults(op, 1, diags))
    return;
  expectOperandScalar(op, 0, Scalar::Index, diags);
  expectResultType(
      op, 0, [](const TypeDesc &t) { return t.is<PtrType>(); }, "!llvm.ptr",
      diags);
}

} // namespace

void registerCoreOps() {
  auto &reg = DialectRegistry::get();
  for (const char *d : {"builtin", "func", "arith", "loop", "memref", "llvm"})
    reg.registerDialect(d);

  reg.registerOp({"builtin.module", verifyModuleOp});
  reg.registerOp({"func.func", verifyFuncFunc});
  reg.registerOp({"func.return", verifyFuncReturn});
  reg.registerOp({"func.call", verifyFuncCall});

  reg.registerOp({"arith.constant", verifyArithConstant});
  for (const char *n : {"arith.addf", "arith.subf", "arith.mulf", "arith.divf"})
    reg.registerOp({n, [](const Operation &op, std::vector<Diagnostic> &d) {
                      verifyArithBinary(op, d, /*wantFloat=*/true);
                    }});
  for (const char *n : {"arith.addi", "arith.subi", "arith.muli", "arith.divi",
                        "arith.remi", "arith.andi", "arith.ori"})
    reg.registerOp({n, [](const Operation &op, std::vector<Diagnostic> &d) {
                      verifyArithBinary(op, d, /*wantFloat=*/false);
                    }});
  reg.registerOp({"arith.cmp", verifyArithCmp});
  reg.registerOp({"arith.select", verifyArithSelect});

  reg.registerOp({"loop.for", verifyLoopFor});
  reg.registerOp({"loop.yield", verifyLoopYield});

  reg.registerOp({"memref.alloc", verifyMemrefAlloc});
  reg.registerOp({"memref.load", verifyMemrefLoad});
  reg.registerOp({"memref.store", verifyMemrefStore});
  reg.registerOp({"memref.dealloc", verifyMemrefDealloc});
  reg.registerOp({"memref.extract_base_pointer", verifyExtractBasePointer});
  reg.registerOp({"llvm.int_to_ptr", verifyIntToPtr});
}

} // namespace halogen::ir
