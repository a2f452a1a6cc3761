//===- lowering_common.hpp - Shared IR building helpers --------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Builder utilities shared by the stencil-to-loops and dmp-to-mpi lowerings:
// op construction with per-region constant pooling, rectangular loop nest
// emission, and pointwise evaluation of stencil.apply regions against
// buffer-backed operand sources.
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_LOWERING_COMMON_HPP
#define HALOGEN_LOWERING_COMMON_HPP

#include "halogen/ir/ir.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace halogen::ir::lowering {

/// Appends ops to one region. Integer constants are pooled per builder so a
/// loop nest reuses its shift constants instead of re-emitting them.
class Builder {
public:
  explicit Builder(Region &block) : block_(&block) {}

  Region &block() { return *block_; }

  /// Create `name` with the given operands and result types, append it, and
  /// return it.
  Operation *op(const std::string &name, std::vector<Value *> operands,
                const std::vector<TypeDesc> &resultTypes);

  /// First result of `o`.
  static Value *res(Operation *o) { return &o->results[0]; }

  Value *constant(Scalar s, std::int64_t v);
  Value *cIndex(std::int64_t v) { return constant(Scalar::Index, v); }
  Value *cI32(std::int64_t v) { return constant(Scalar::I32, v); }

  /// iv + shift : index. Returns `iv` unchanged when shift == 0.
  Value *addIndex(Value *iv, std::int64_t shift);

private:
  Region *block_ = nullptr;
  std::map<std::pair<int, std::int64_t>, Value *> pool_;
};

/// A buffer-backed source or destination for pointwise copies and stencil
/// evaluation: the SSA buffer plus the logical coordinate of storage index
/// zero. Storage index = logical index - lb (per dimension).
struct BufSource {
  Value *buf = nullptr;
  std::vector<std::int64_t> lb;
};

/// Emit `loop.for iv = lo to hi step 1 { body }` with no iteration args. The
/// callback fills the body; a terminating loop.yield is appended after it.
void emitFor(Builder &b, Value *lo, Value *hi,
             const std::function<void(Builder &, Value *)> &body);

/// Row-major rectangular nest over the logical region `range`; the callback
/// receives the logical induction variables, outermost first.
void emitNest(Builder &b, const Bounds &range,
              const std::function<void(Builder &, const std::vector<Value *> &)>
                  &body);

/// dst[iv - dst.lb] = src[iv - src.lb] for every logical iv in `range`.
void emitCopyNest(Builder &b, const Bounds &range, const BufSource &dst,
                  const BufSource &src, Scalar elem);

/// Evaluate the region of `apply` at logical point `ivs`: stencil.access of
/// region argument k turns into a memref.load from sources[k] at
/// ivs + offsets - sources[k].lb; other region ops are cloned with operands
/// remapped through `outerMap` (which must cover every value the region
/// reads from enclosing scopes). Returns the remapped stencil.return
/// operands. Appends a diagnostic and returns empty on unsupported region
/// contents.
std::vector<Value *>
emitApplyAt(Builder &b, const Operation &apply,
            const std::vector<BufSource> &sources,
            const std::vector<Value *> &ivs,
            const std::map<const Value *, Value *> &outerMap,
            std::vector<Diagnostic> &diags);

/// Per-step lowering shared by the serial and distributed pipelines: lowers
/// the straight-line ops of `stepOps` (stencil.load / stencil.apply /
/// stencil.store plus plain cloned ops) into `b`, reading and writing fields
/// through `binding` (original field value -> current buffer). dmp.swap ops
/// are handed to `onSwap` when provided and rejected otherwise. Terminators
/// in `stepOps` are skipped.
struct StepLowering {
  Builder *b = nullptr;
  const std::vector<const Operation *> *stepOps = nullptr;
  std::map<const Value *, BufSource> binding;
  std::function<void(const Operation &, Builder &)> onSwap;
  std::vector<Diagnostic> *diags = nullptr;
};

void lowerStepOps(StepLowering &in);

/// Rotation groups from the module's "stencil.time_slots" attribute: a list
/// of groups of function argument indices that cyclically shift one position
/// per time step (binding of slot g[j] becomes the buffer previously bound to
/// slot g[j+1]). Absent attribute -> no groups. Malformed attribute or
/// out-of-range / duplicate indices append a diagnostic.
std::vector<std::vector<int>> timeSlotGroups(const Operation &module,
                                             int numArgs,
                                             std::vector<Diagnostic> &diags);

/// yieldSource[i] = the binding position whose buffer slot i receives after
/// one rotation step (identity outside all groups).
std::vector<int> rotationSources(const std::vector<std::vector<int>> &groups,
                                 int numArgs);

/// Runs bounds propagation directly on `module` (no pipeline, no clone).
/// Used by passes that rewrite store regions and need types re-resolved.
void propagateBoundsInPlace(Operation &module, std::vector<Diagnostic> &diags);

} // namespace halogen::ir::lowering

#endif // HALOGEN_LOWERING_COMMON_HPP
