//===- ir.cpp - SSA + regions intermediate representation ------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/ir.hpp"

#include <sstream>

namespace halogen::ir {

Value *Region::addArg(const TypeDesc &t) {
  args.push_back(Value{});
  Value &v = args.back();
  v.type = t;
  v.defRegion = this;
  v.argIdx = static_cast<int>(args.size()) - 1;
  return &v;
}

Operation *Region::push(std::unique_ptr<Operation> op) {
  op->parent = this;
  ops.push_back(std::move(op));
  return ops.back().get();
}

Value *Operation::addResult(const TypeDesc &t) {
  results.push_back(Value{});
  Value &v = results.back();
  v.type = t;
  v.defOp = this;
  v.resultIdx = static_cast<int>(results.size()) - 1;
  return &v;
}

Region &Operation::addRegion() {
  regions.emplace_back();
  regions.back().owner = this;
  return regions.back();
}

const Attribute *Operation::attr(const std::string &key) const {
  auto it = attrs.find(key);
  return it == attrs.end() ? nullptr : &it->second;
}

void Operation::setAttr(const std::string &key, Attribute a) {
  attrs[key] = std::move(a);
}

std::optional<std::int64_t> Operation::intAttr(const std::string &key) const {
  const Attribute *a = attr(key);
  if (!a)
    return std::nullopt;
  const auto *i = a->dynAs<IntAttr>();
  if (!i)
    return std::nullopt;
  return i->value;
}

std::optional<std::string> Operation::strAttr(const std::string &key) const {
  const Attribute *a = attr(key);
  if (!a)
    return std::nullopt;
  const auto *s = a->dynAs<StringAttr>();
  if (!s)
    return std::nullopt;
  return s->value;
}

std::string Operation::path() const {
  std::vector<std::string> parts;
  const Operation *op = this;
  while (op) {
    std::ostringstream os;
    if (op->name == "func.func") {
      if (auto sym = op->strAttr("sym_name"))
        os << "func @" << *sym;
      else
        os << "func.func";
    } else if (op->name == "builtin.module") {
      op = nullptr;
      continue;
    } else {
      int idx = -1;
      if (op->parent) {
        for (size_t i = 0; i < op->parent->ops.size(); ++i)
          if (op->parent->ops[i].get() == op)
            idx = static_cast<int>(i);
      }
      os << "op #" << idx << " (" << op->name << ")";
    }
    parts.push_back(os.str());
    op = op->parent ? op->parent->owner : nullptr;
  }
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty())
      out += " / ";
    out += *it;
  }
  return out;
}

ModuleOp makeModule() {
  auto m = std::make_unique<Operation>("builtin.module");
  m->addRegion();
  return m;
}

Region &moduleBody(Operation &module) { return module.regions.front(); }
const Region &moduleBody(const Operation &module) {
  return module.regions.front();
}

namespace {

void cloneRegionInto(const Region &src, Region &dst,
                     std::map<const Value *, Value *> &valueMap) {
  for (const Value &arg : src.args) {
    Value *n = dst.addArg(arg.type);
    valueMap[&arg] = n;
  }
  for (const auto &op : src.ops)
    dst.push(cloneOp(*op, valueMap));
}

} // namespace

std::unique_ptr<Operation>
cloneOp(const Operation &op, std::map<const Value *, Value *> &valueMap) {
  auto n = std::make_unique<Operation>(op.name);
  n->attrs = op.attrs;
  n->loc = op.loc;
  for (const Value *operand : op.operands) {
    auto it = valueMap.find(operand);
    // Operands must dominate: a clone of a well-formed op tree always finds
    // its operands in the map or in an enclosing scope cloned earlier.
    n->operands.push_back(it != valueMap.end() ? it->second
                                               : const_cast<Value *>(operand));
  }
  for (const Value &r : op.results) {
    Value *nr = n->addResult(r.type);
    valueMap[&r] = nr;
  }
  for (const Region &srcRegion : op.regions)
    cloneRegionInto(srcRegion, n->addRegion(), valueMap);
  return n;
}

ModuleOp cloneModule(const Operation &module) {
  std::map<const Value *, Value *> valueMap;
  return cloneOp(module, valueMap);
}

void walk(Operation &op, const std::function<void(Operation &)> &fn) {
  fn(op);
  for (auto &region : op.regions)
    for (auto &nested : region.ops)
      walk(*nested, fn);
}

void walk(const Operation &op,
          const std::function<void(const Operation &)> &fn) {
  fn(op);
  for (const auto &region : op.regions)
    for (const auto &nested : region.ops)
      walk(*nested, fn);
}

int countOps(const Operation &op, const std::string &name) {
  int n = 0;
  walk(op, [&](const Operation &o) {
    if (o.name == name)
      ++n;
  });
  return n;
}

namespace {

struct EquivChecker {
  std::map<const Value *, const Value *> map;
  std::string difference;

  bool fail(const Operation &a, const std::string &what) {
    difference = a.path() + ": " + what;
    return false;
  }

  bool checkRegion(const Operation &owner, const Region &ra, const Region &rb) {
    if (ra.args.size() != rb.args.size())
      return fail(owner, "region argument count differs");
    for (size_t i = 0; i < ra.args.size(); ++i) {
      if (!(ra.args[i].type == rb.args[i].type))
        return fail(owner, "region argument type differs");
      map[&ra.args[i]] = &rb.args[i];
    }
    if (ra.ops.size() != rb.ops.size())
      return fail(owner, "op count differs");
    for (size_t i = 0; i < ra.ops.size(); ++i)
      if (!checkOp(*ra.ops[i], *rb.ops[i]))
        return false;
    return true;
  }

  bool checkOp(const Operation &a, const Operation &b) {
    if (a.name != b.name)
      return fail(a, "op name differs: " + a.name + " vs " + b.name);
    if (!(a.attrs == b.attrs))
      return fail(a, "attributes differ");
    if (a.operands.size() != b.operands.size())
      return fail(a, "operand count differs");
    for (size_t i = 0; i < a.operands.size(); ++i) {
      auto it = map.find(a.operands[i]);
      if (it == map.end() || it->second != b.operands[i])
        return fail(a, "operand #" + std::to_string(i) + " wiring differs");
    }
    if (a.results.size() != b.results.size())
      return fail(a, "result count differs");
    for (size_t i = 0; i < a.results.size(); ++i) {
      if (!(a.results[i].type == b.results[i].type))
        return fail(a, "result #" + std::to_string(i) + " type differs");
      map[&a.results[i]] = &b.results[i];
    }
    if (a.regions.size() != b.regions.size())
      return fail(a, "region count differs");
    for (size_t i = 0; i < a.regions.size(); ++i)
      if (!checkRegion(a, a.regions[i], b.regions[i]))
        return false;
    return true;
  }
};

} // namespace

bool structurallyEqual(const Operation &a, const Operation &b,
                       std::string &firstDifference) {
  EquivChecker checker;
  bool eq = checker.checkOp(a, b);
  if (!eq)
    firstDifference = checker.difference;
  return eq;
}

bool structurallyEqual(const Operation &a, const Operation &b) {
  std::string ignored;
  return structurallyEqual(a, b, ignored);
}

Operation *lookupFunc(Operation &module, const std::string &symbol) {
  for (auto &op : moduleBody(module).ops)
    if (op->name == "func.func" && op->strAttr("sym_name") == symbol)
      return op.get();
  return nullptr;
}

const Operation *lookupFunc(const Operation &module,
                            const std::string &symbol) {
  for (const auto &op : moduleBody(module).ops)
    if (op->name == "func.func" && op->strAttr("sym_name") == symbol)
      return op.get();
  return nullptr;
}

namespace {

void numberRegion(Region &region, int &next) {
  for (Value &arg : region.args)
    arg.slot = next++;
  for (auto &op : region.ops) {
    for (Value &r : op->results)
      r.slot = next++;
    for (Region &nested : op->regions)
      numberRegion(nested, next);
  }
}

} // namespace

int numberValues(Operation &func) {
  int next = 0;
  for (Region &region : func.regions)
    numberRegion(region, next);
  return next;
}

} // namespace halogen::ir
