//===- printer.cpp - textual IR printer -------------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// The printer emits the canonical form the parser accepts: pretty forms for
// the ops that define one, the bare generic form for everything else. Value
// names are %0, %1, ... assigned in print order and reset at every isolated
// scope, so printing is deterministic and print(parse(print(m))) == print(m).
// Ops with a pretty form that carry data the form cannot encode (extra
// attributes, unexpected structure) fall back to the quoted generic form,
// which the parser routes past the pretty parsers.
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/printer.hpp"

#include <cassert>
#include <set>
#include <sstream>
#include <unordered_map>

namespace halogen::ir {

namespace {

bool hasPrettyForm(const std::string &n) {
  static const std::set<std::string> pretty = {
      "builtin.module",
      "func.func",
      "func.return",
      "stencil.return",
      "loop.yield",
      "func.call",
      "arith.constant",
      "arith.addf",
      "arith.subf",
      "arith.mulf",
      "arith.divf",
      "arith.addi",
      "arith.subi",
      "arith.muli",
      "arith.divi",
      "arith.remi",
      "arith.andi",
      "arith.ori",
      "arith.cmp",
      "arith.select",
      "loop.for",
      "memref.alloc",
      "memref.load",
      "memref.store",
      "memref.dealloc",
      "memref.extract_base_pointer",
      "llvm.int_to_ptr",
      "stencil.load",
      "stencil.apply",
      "stencil.access",
      "stencil.store",
      "mpi.unwrap_memref",
      "mpi.comm_rank",
      "mpi.comm_size",
      "mpi.init",
      "mpi.finalize",
  };
  return pretty.count(n) != 0;
}

class Printer {
public:
  explicit Printer(const Operation &module) {
    printOp(module);
    // The module form ends with "}\n" already; nothing to add.
  }

  std::string take() { return os.str(); }

private:
  std::ostringstream os;
  std::unordered_map<const Value *, std::string> names;
  int counter = 0;
  int indent = 0;

  //===------------------------------------------------------------------===//
  // Naming
  //===------------------------------------------------------------------===//

  std::string fresh() { return "%" + std::to_string(counter++); }

  std::string defName(const Value &v) {
    auto it = names.find(&v);
    if (it != names.end())
      return it->second;
    std::string n = fresh();
    names.emplace(&v, n);
    return n;
  }

  std::string useName(const Value *v) const {
    auto it = names.find(v);
    // Unknown values only occur in IR that violates def-before-use; keep
    // printing so diagnostics can show the malformed op.
    return it == names.end() ? "%<unknown>" : it->second;
  }

  //===------------------------------------------------------------------===//
  // Small pieces
  //===------------------------------------------------------------------===//

  void nl() {
    os << "\n";
    for (int i = 0; i < indent; ++i)
      os << "  ";
  }

  void printResultsPrefix(const Operation &op) {
    if (op.results.empty())
      return;
    for (size_t i = 0; i < op.results.size(); ++i)
      os << (i ? ", " : "") << defName(op.results[i]);
    os << " = ";
  }

  void printOperandList(const Operation &op) {
    os << "(";
    for (size_t i = 0; i < op.operands.size(); ++i)
      os << (i ? ", " : "") << useName(op.operands[i]);
    os << ")";
  }

  void printAttrDict(const Operation &op,
                     const std::set<std::string> &exclude = {}) {
    bool first = true;
    for (const auto &[key, value] : op.attrs) {
      if (exclude.count(key))
        continue;
      os << (first ? "{" : ", ") << key << " = " << value.str();
      first = false;
    }
    if (!first)
      os << "}";
  }

  bool hasExtraAttrs(const Operation &op, const std::set<std::string> &known) {
    for (const auto &[key, value] : op.attrs)
      if (!known.count(key))
        return true;
    return false;
  }

  void printSignature(const Operation &op) {
    FuncType sig;
    for (const Value *v : op.operands)
      sig.ins.push_back(v ? v->type : TypeDesc(Scalar::Index));
    for (const Value &r : op.results)
      sig.outs.push_back(r.type);
    os << TypeDesc(sig).str();
  }

  void printTypeListOrSingle(const std::deque<Value> &results) {
    if (results.size() == 1) {
      os << results[0].type.str();
      return;
    }
    os << "(";
    for (size_t i = 0; i < results.size(); ++i)
      os << (i ? ", " : "") << results[i].type.str();
    os << ")";
  }

  /// Region body between braces at one deeper indent level. Caller already
  /// named any pretty-form-bound arguments.
  void printRegionOps(const Region &region) {
    os << "{";
    ++indent;
    for (const auto &op : region.ops) {
      nl();
      printOp(*op);
    }
    --indent;
    nl();
    os << "}";
  }

  /// Generic region: optional ^bb0 header when the region has arguments.
  void printGenericRegion(const Region &region) {
    os << "{";
    ++indent;
    if (!region.args.empty()) {
      nl();
      os << "^bb0(";
      for (size_t i = 0; i < region.args.size(); ++i)
        os << (i ? ", " : "") << defName(region.args[i]) << " : "
           << region.args[i].type.str();
      os << "):";
    }
    for (const auto &op : region.ops) {
      nl();
      printOp(*op);
    }
    --indent;
    nl();
    os << "}";
  }

  //===------------------------------------------------------------------===//
  // Operation dispatch
  //===------------------------------------------------------------------===//

  void printOp(const Operation &op) {
    const std::string &n = op.name;
    if (n == "builtin.module" && op.regions.size() == 1 &&
        op.operands.empty() && op.results.empty()) {
      printModuleOp(op);
      return;
    }
    if (tryPrintPretty(op))
      return;
    printGeneric(op, /*quoted=*/hasPrettyForm(n));
  }

  void printModuleOp(const Operation &op) {
    os << "builtin.module ";
    if (!op.attrs.empty()) {
      os << "attributes ";
      printAttrDict(op);
      os << " ";
    }
    int saved = counter;
    counter = 0;
    printRegionOps(op.regions[0]);
    counter = saved;
  }

  /// Returns false when the op's contents do not fit its pretty form, in
  /// which case the caller prints the quoted generic form.
  bool tryPrintPretty(const Operation &op) {
    const std::string &n = op.name;

    if (n == "func.func")
      return printFuncFunc(op);

    if (n == "func.return" || n == "stencil.return" || n == "loop.yield") {
      if (!op.attrs.empty() || !op.regions.empty() || !op.results.empty())
        return false;
      os << n;
      if (!op.operands.empty()) {
        os << " ";
        for (size_t i = 0; i < op.operands.size(); ++i)
          os << (i ? ", " : "") << useName(op.operands[i]);
        os << " : ";
        for (size_t i = 0; i < op.operands.size(); ++i)
          os << (i ? ", " : "") << op.operands[i]->type.str();
      }
      return true;
    }

    if (n == "func.call") {
      auto callee = op.strAttr("callee");
      if (!callee || hasExtraAttrs(op, {"callee"}) || !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "func.call @" << *callee;
      printOperandList(op);
      os << " : ";
      printSignature(op);
      return true;
    }

    if (n == "arith.constant") {
      const Attribute *v = op.attr("value");
      if (!v || hasExtraAttrs(op, {"value"}) || op.numResults() != 1 ||
          !op.operands.empty() || !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "arith.constant ";
      if (const auto *f = v->dynAs<FloatAttr>())
        os << formatFloatToken(*f);
      else if (const auto *i = v->dynAs<IntAttr>())
        os << i->value;
      else
        return false;
      os << " : " << op.results[0].type.str();
      return true;
    }

    if (n == "arith.addf" || n == "arith.subf" || n == "arith.mulf" ||
        n == "arith.divf" || n == "arith.addi" || n == "arith.subi" ||
        n == "arith.muli" || n == "arith.divi" || n == "arith.remi" ||
        n == "arith.andi" || n == "arith.ori") {
      if (op.numOperands() != 2 || op.numResults() != 1 ||
          !op.attrs.empty() || !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << n << " " << useName(op.operands[0]) << ", "
         << useName(op.operands[1]) << " : " << op.results[0].type.str();
      return true;
    }

    if (n == "arith.cmp") {
      auto pred = op.strAttr("predicate");
      if (!pred || hasExtraAttrs(op, {"predicate"}) || op.numOperands() != 2 ||
          op.numResults() != 1 || !op.regions.empty() ||
          !op.results[0].type.isScalar(Scalar::I1))
        return false;
      printResultsPrefix(op);
      os << "arith.cmp " << *pred << ", " << useName(op.operands[0]) << ", "
         << useName(op.operands[1]) << " : " << op.operands[0]->type.str();
      return true;
    }

    if (n == "arith.select") {
      if (op.numOperands() != 3 || op.numResults() != 1 ||
          !op.attrs.empty() || !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "arith.select " << useName(op.operands[0]) << ", "
         << useName(op.operands[1]) << ", " << useName(op.operands[2])
         << " : " << op.results[0].type.str();
      return true;
    }

    if (n == "loop.for")
      return printLoopFor(op);

    if (n == "memref.alloc") {
      if (!op.operands.empty() || op.numResults() != 1 || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "memref.alloc() : " << op.results[0].type.str();
      return true;
    }

    if (n == "memref.load") {
      if (op.numOperands() < 1 || op.numResults() != 1 || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "memref.load " << useName(op.operands[0]) << "[";
      for (int i = 1; i < op.numOperands(); ++i)
        os << (i > 1 ? ", " : "") << useName(op.operands[i]);
      os << "] : " << op.operands[0]->type.str();
      return true;
    }

    if (n == "memref.store") {
      if (op.numOperands() < 2 || !op.results.empty() || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      os << "memref.store " << useName(op.operands[0]) << ", "
         << useName(op.operands[1]) << "[";
      for (int i = 2; i < op.numOperands(); ++i)
        os << (i > 2 ? ", " : "") << useName(op.operands[i]);
      os << "] : " << op.operands[1]->type.str();
      return true;
    }

    if (n == "memref.dealloc") {
      if (op.numOperands() != 1 || !op.results.empty() || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      os << "memref.dealloc " << useName(op.operands[0]) << " : "
         << op.operands[0]->type.str();
      return true;
    }

    if (n == "memref.extract_base_pointer" || n == "llvm.int_to_ptr") {
      if (op.numOperands() != 1 || op.numResults() != 1 || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << n << " " << useName(op.operands[0]) << " : "
         << op.operands[0]->type.str() << " -> " << op.results[0].type.str();
      return true;
    }

    if (n == "stencil.load") {
      if (op.numOperands() != 1 || op.numResults() != 1 || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "stencil.load " << useName(op.operands[0]) << " : "
         << op.operands[0]->type.str() << " -> " << op.results[0].type.str();
      return true;
    }

    if (n == "stencil.apply")
      return printStencilApply(op);

    if (n == "stencil.access") {
      const Attribute *offsets = op.attr("offsets");
      std::vector<std::int64_t> offs;
      if (!offsets || !attrToIndexVector(*offsets, offs) ||
          hasExtraAttrs(op, {"offsets"}) || op.numOperands() != 1 ||
          op.numResults() != 1 || !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "stencil.access " << useName(op.operands[0]) << "[";
      for (size_t i = 0; i < offs.size(); ++i)
        os << (i ? "," : "") << offs[i];
      os << "] : " << op.results[0].type.str();
      return true;
    }

    if (n == "stencil.store") {
      const Attribute *lbA = op.attr("lb");
      const Attribute *ubA = op.attr("ub");
      std::vector<std::int64_t> lb, ub;
      if (!lbA || !ubA || !attrToIndexVector(*lbA, lb) ||
          !attrToIndexVector(*ubA, ub) || lb.size() != ub.size() ||
          lb.empty() || hasExtraAttrs(op, {"lb", "ub"}) ||
          op.numOperands() != 2 || !op.results.empty() || !op.regions.empty())
        return false;
      os << "stencil.store " << useName(op.operands[0]) << " to "
         << useName(op.operands[1]) << " (";
      for (size_t i = 0; i < lb.size(); ++i)
        os << (i ? "x" : "") << "[" << lb[i] << "," << ub[i] << "]";
      os << ") : " << op.operands[0]->type.str() << " to "
         << op.operands[1]->type.str();
      return true;
    }

    if (n == "mpi.unwrap_memref") {
      if (op.numOperands() != 1 || !op.attrs.empty() || !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << "mpi.unwrap_memref " << useName(op.operands[0]) << " : "
         << op.operands[0]->type.str() << " -> ";
      printTypeListOrSingle(op.results);
      return true;
    }

    if (n == "mpi.comm_rank" || n == "mpi.comm_size") {
      if (!op.operands.empty() || op.numResults() != 1 || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      printResultsPrefix(op);
      os << n << " : " << op.results[0].type.str();
      return true;
    }

    if (n == "mpi.init" || n == "mpi.finalize") {
      if (!op.operands.empty() || !op.results.empty() || !op.attrs.empty() ||
          !op.regions.empty())
        return false;
      os << n;
      return true;
    }

    return false;
  }

  bool printFuncFunc(const Operation &op) {
    auto sym = op.strAttr("sym_name");
    const Attribute *fnAttr = op.attr("function_type");
    const TypeAttr *ty = fnAttr ? fnAttr->dynAs<TypeAttr>() : nullptr;
    if (!sym || !ty || !ty->type.is<FuncType>() || op.regions.size() > 1 ||
        !op.operands.empty() || !op.results.empty())
      return false;
    const FuncType &sig = ty->type.as<FuncType>();
    bool isDef = !op.regions.empty();
    if (isDef && op.regions[0].args.size() != sig.ins.size())
      return false;

    os << "func.func @" << *sym << "(";
    int saved = counter;
    if (isDef) {
      counter = 0;
      for (size_t i = 0; i < sig.ins.size(); ++i)
        os << (i ? ", " : "") << defName(op.regions[0].args[i]) << " : "
           << sig.ins[i].str();
    } else {
      for (size_t i = 0; i < sig.ins.size(); ++i)
        os << (i ? ", " : "") << sig.ins[i].str();
    }
    os << ")";
    if (sig.outs.size() == 1) {
      os << " -> " << sig.outs[0].str();
    } else if (!sig.outs.empty()) {
      os << " -> (";
      for (size_t i = 0; i < sig.outs.size(); ++i)
        os << (i ? ", " : "") << sig.outs[i].str();
      os << ")";
    }
    if (hasExtraAttrs(op, {"sym_name", "function_type"})) {
      os << " attributes ";
      printAttrDict(op, {"sym_name", "function_type"});
    }
    if (isDef) {
      os << " ";
      printRegionOps(op.regions[0]);
      counter = saved;
    }
    return true;
  }

  bool printLoopFor(const Operation &op) {
    size_t iters = op.results.size();
    if (op.regions.size() != 1 || !op.attrs.empty() ||
        op.operands.size() != 3 + iters ||
        op.regions[0].args.size() != 1 + iters)
      return false;
    const Region &body = op.regions[0];
    printResultsPrefix(op);
    os << "loop.for " << defName(body.args[0]) << " = "
       << useName(op.operands[0]) << " to " << useName(op.operands[1])
       << " step " << useName(op.operands[2]);
    if (iters) {
      os << " iter(";
      for (size_t i = 0; i < iters; ++i)
        os << (i ? ", " : "") << defName(body.args[1 + i]) << " = "
           << useName(op.operands[3 + i]) << " : "
           << body.args[1 + i].type.str();
      os << ")";
    }
    os << " ";
    printRegionOps(body);
    return true;
  }

  bool printStencilApply(const Operation &op) {
    if (op.regions.size() != 1 || !op.attrs.empty() || op.results.empty() ||
        op.regions[0].args.size() != op.operands.size())
      return false;
    const Region &body = op.regions[0];
    printResultsPrefix(op);
    os << "stencil.apply(";
    for (size_t i = 0; i < op.operands.size(); ++i)
      os << (i ? ", " : "") << defName(body.args[i]) << " = "
         << useName(op.operands[i]) << " : " << body.args[i].type.str();
    os << ") -> ";
    printTypeListOrSingle(op.results);
    os << " ";
    printRegionOps(body);
    return true;
  }

  void printGeneric(const Operation &op, bool quoted) {
    printResultsPrefix(op);
    if (quoted)
      os << '"' << op.name << '"';
    else
      os << op.name;
    printOperandList(op);
    if (!op.attrs.empty()) {
      os << " ";
      printAttrDict(op);
    }
    if (!op.regions.empty()) {
      os << " (";
      for (size_t i = 0; i < op.regions.size(); ++i) {
        if (i)
          os << ", ";
        printGenericRegion(op.regions[i]);
      }
      os << ")";
    }
    os << " : ";
    printSignature(op);
  }
};

} // namespace

std::string printModule(const Operation &module) {
  Printer p(module);
  return p.take() + "\n";
}

} // namespace halogen::ir
