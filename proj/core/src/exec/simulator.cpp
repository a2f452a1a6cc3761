//===- simulator.cpp - deterministic multi-rank executor ------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Every rank runs on its own thread, but a token scheduler admits exactly
// one at a time: a rank keeps the token until it blocks on a message that
// has not arrived or finishes, then the token moves to the next runnable
// rank in a seed-shuffled round-robin order. Sends are buffered and
// complete immediately, receives match by exact (source, tag) with no
// wildcards, so the delivered data is independent of the schedule and the
// seed only exercises different interleavings. When no rank can make
// progress the run stops with a per-rank report of the blocked ops.
//
//===----------------------------------------------------------------------===//

#include "halogen/exec/simulator.hpp"

#include "halogen/dialects/dmp.hpp"
#include "halogen/exec/interpreter.hpp"
#include "halogen/exec/serial.hpp"
#include "halogen/exec/transport.hpp"
#include "halogen/ir/parser.hpp"

#include "../dialects/lowering_common.hpp"

#include <condition_variable>
#include <cstring>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace halogen::exec {

using ir::ArrayAttr;
using ir::Attribute;
using ir::Bounds;
using ir::Diagnostic;
using ir::ExchangeAttr;
using ir::Expected;
using ir::FieldType;
using ir::GridAttr;
using ir::Interval;
using ir::Operation;
using ir::Region;
using ir::Scalar;
using ir::TrapError;
using ir::TypeDesc;
using ir::Value;
using ir::mpi::AbiTable;

namespace {

//===----------------------------------------------------------------------===//
// Token scheduler
//===----------------------------------------------------------------------===//

class Scheduler {
public:
  Scheduler(int n, std::uint64_t seed) : states(n, State::Ready), blocked(n) {
    order.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      order[i] = i;
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
      auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    current = order[0];
  }

  /// Runs every body to completion (or deadlock). Returns per-rank error
  /// strings, empty when the rank finished cleanly.
  std::vector<std::string> run(std::vector<std::function<void()>> bodies) {
    std::vector<std::string> errors(bodies.size());
    std::vector<std::thread> threads;
    threads.reserve(bodies.size());
    for (std::size_t r = 0; r < bodies.size(); ++r) {
      threads.emplace_back([this, r, &bodies, &errors] {
        int rank = static_cast<int>(r);
        {
          std::unique_lock<std::mutex> lk(mu);
          cv.wait(lk, [&] { return dead || current == rank; });
          if (dead) {
            states[r] = State::Finished;
            return;
          }
        }
        try {
          bodies[r]();
        } catch (const TrapError &e) {
          errors[r] = e.what();
        } catch (const std::exception &e) {
          errors[r] = e.what();
        }
        std::unique_lock<std::mutex> lk(mu);
        states[r] = State::Finished;
        advance();
        cv.notify_all();
      });
    }
    for (auto &t : threads)
      t.join();
    return errors;
  }

  /// Yield until `ready` holds. `what` describes the blocking op for the
  /// deadlock report. Throws TrapError when the whole simulation stalls.
  void block(int rank, const std::function<bool()> &ready,
             const std::string &what) {
    std::unique_lock<std::mutex> lk(mu);
    if (ready())
      return;
    states[rank] = State::Blocked;
    blocked[rank] = {ready, what};
    advance();
    cv.notify_all();
    cv.wait(lk, [&] { return dead || current == rank; });
    if (dead)
      throw TrapError("", "deadlock: " + what);
    blocked[rank] = {};
  }

  /// Serializes access to shared state from outside a rank's turn.
  std::mutex &lock() { return mu; }

  bool deadlocked() const { return dead; }
  std::vector<std::pair<int, std::string>> deadlockReport() const {
    return report;
  }

private:
  enum class State { Ready, Blocked, Finished };
  struct Waiting {
    std::function<bool()> ready;
    std::string what;
  };

  // Lock held. Move the token to the next runnable rank after `current`
  // in the shuffled order; declare deadlock when no rank can run.
  void advance() {
    int n = static_cast<int>(states.size());
    int pos = 0;
    for (int i = 0; i < n; ++i)
      if (order[i] == current)
        pos = i;
    for (int k = 1; k <= n; ++k) {
      int c = order[(pos + k) % n];
      if (states[c] == State::Finished)
        continue;
      if (states[c] == State::Blocked) {
        if (!blocked[c].ready())
          continue;
        states[c] = State::Ready;
      }
      current = c;
      return;
    }
    bool allDone = true;
    for (int r = 0; r < n; ++r)
      if (states[r] != State::Finished) {
        allDone = false;
        if (states[r] == State::Blocked)
          report.emplace_back(r, blocked[r].what);
      }
    if (!allDone)
      dead = true;
    current = -1;
  }

  std::mutex mu;
  std::condition_variable cv;
  std::vector<int> order;
  std::vector<State> states;
  std::vector<Waiting> blocked;
  std::vector<std::pair<int, std::string>> report;
  int current = -1;
  bool dead = false;
};

//===----------------------------------------------------------------------===//
// Per-rank message-passing endpoint
//===----------------------------------------------------------------------===//

enum class ReduceOp { Sum, Min, Max };

class Endpoint {
public:
  Endpoint(Transport &net, Scheduler &sched, int rank, int world,
           const AbiTable &abi)
      : net(net), sched(sched), rank(rank), world(world), abi(abi) {}

  int myRank() const { return rank; }
  int worldSize() const { return world; }
  const AbiTable &abiTable() const { return abi; }

  std::int64_t isend(const std::shared_ptr<Buffer> &buf, std::int64_t count,
                     std::int64_t dst, std::int64_t tag, const Operation *op) {
    if (dst != abi.procNull) {
      checkPeer(dst, op);
      net.send(rank, static_cast<int>(dst), tag, prefixBytes(buf, count, op));
    }
    reqs.push_back({false, 0, true});
    return static_cast<std::int64_t>(reqs.size()) - 1;
  }

  std::int64_t irecv(const std::shared_ptr<Buffer> &buf, std::int64_t count,
                     std::int64_t src, std::int64_t tag, const Operation *op) {
    if (src == abi.procNull) {
      reqs.push_back({false, 0, true});
    } else {
      checkPeer(src, op);
      checkCount(buf, count, op);
      pendings.push_back(
          {buf, count, static_cast<int>(src), tag});
      reqs.push_back({true, pendings.size() - 1, false});
      progress();
    }
    return static_cast<std::int64_t>(reqs.size()) - 1;
  }

  void send(const std::shared_ptr<Buffer> &buf, std::int64_t count,
            std::int64_t dst, std::int64_t tag, const Operation *op) {
    isend(buf, count, dst, tag, op);
  }

  void recv(const std::shared_ptr<Buffer> &buf, std::int64_t count,
            std::int64_t src, std::int64_t tag, const Operation *op) {
    wait(irecv(buf, count, src, tag, op), op);
  }

  void wait(std::int64_t id, const Operation *op) {
    checkReq(id, op);
    sched.block(
        rank,
        [this, id] {
          progress();
          return reqs[static_cast<std::size_t>(id)].done;
        },
        describe(op) + ": " + pendingDesc(id));
  }

  void waitall(const std::vector<std::int64_t> &ids, const Operation *op) {
    for (std::int64_t id : ids)
      checkReq(id, op);
    sched.block(
        rank,
        [this, ids] {
          progress();
          for (std::int64_t id : ids)
            if (!reqs[static_cast<std::size_t>(id)].done)
              return false;
          return true;
        },
        describe(op) + ": " + firstPendingDesc(ids));
  }

  bool test(std::int64_t id, const Operation *op) {
    checkReq(id, op);
    progress();
    return reqs[static_cast<std::size_t>(id)].done;
  }

  void bcast(const std::shared_ptr<Buffer> &buf, std::int64_t count,
             std::int64_t root, const Operation *op) {
    checkPeer(root, op);
    std::int64_t tag = collTagBase + collSeq++;
    if (rank == root) {
      auto bytes = prefixBytes(buf, count, op);
      for (int r = 0; r < world; ++r)
        if (r != root)
          net.send(rank, r, tag, bytes);
    } else {
      blockingBytes(static_cast<int>(root), tag, buf, count, op);
    }
  }

  void reduce(const std::shared_ptr<Buffer> &sbuf,
              const std::shared_ptr<Buffer> &rbuf, std::int64_t count,
              ReduceOp rop, std::int64_t root, const Operation *op) {
    checkPeer(root, op);
    std::int64_t tag = collTagBase + collSeq++;
    if (rank != root) {
      net.send(rank, static_cast<int>(root), tag, prefixBytes(sbuf, count, op));
      return;
    }
    checkCount(rbuf, count, op);
    // Contributions fold left in rank order so every run of every
    // schedule reassociates identically.
    std::vector<unsigned char> acc = prefixBytes(sbuf, count, op);
    std::vector<unsigned char> in;
    for (int r = 0; r < world; ++r) {
      if (r == root)
        continue;
      in.clear();
      recvBytesFrom(r, tag, in, op);
      foldInto(acc, in, sbuf->elem, rop, r < rank, op);
    }
    std::memcpy(rbuf->data.data(), acc.data(), acc.size());
  }

  void allreduce(const std::shared_ptr<Buffer> &sbuf,
                 const std::shared_ptr<Buffer> &rbuf, std::int64_t count,
                 ReduceOp rop, const Operation *op) {
    reduce(sbuf, rbuf, count, rop, 0, op);
    bcast(rbuf, count, 0, op);
  }

  void gather(const std::shared_ptr<Buffer> &sbuf, std::int64_t scount,
              const std::shared_ptr<Buffer> &rbuf, std::int64_t rcount,
              std::int64_t root, const Operation *op) {
    checkPeer(root, op);
    std::int64_t tag = collTagBase + collSeq++;
    if (rank != root) {
      net.send(rank, static_cast<int>(root), tag, prefixBytes(sbuf, scount, op));
      return;
    }
    int w = rbuf->elemWidth();
    if (rcount * world * w > static_cast<std::int64_t>(rbuf->data.size()))
      throw TrapError(describe(op), "receive buffer is too small to gather");
    std::vector<unsigned char> in;
    for (int r = 0; r < world; ++r) {
      if (r == rank) {
        auto own = prefixBytes(sbuf, scount, op);
        std::memcpy(rbuf->data.data() + r * rcount * w, own.data(),
                    std::min<std::size_t>(own.size(),
                                          static_cast<std::size_t>(rcount * w)));
        continue;
      }
      in.clear();
      recvBytesFrom(r, tag, in, op);
      std::memcpy(rbuf->data.data() + r * rcount * w, in.data(),
                  std::min<std::size_t>(in.size(),
                                        static_cast<std::size_t>(rcount * w)));
    }
  }

  void finalize(const Operation *op) {
    for (const Req &r : reqs)
      if (!r.done)
        throw TrapError(describe(op), "finalize with an incomplete request");
  }

  /// Direct channel access for the native halo-exchange path.
  void rawSend(int dst, std::int64_t tag, std::vector<unsigned char> bytes) {
    net.send(rank, dst, tag, std::move(bytes));
  }
  void rawRecv(int src, std::int64_t tag, std::vector<unsigned char> &out,
               const std::string &what) {
    sched.block(
        rank, [this, src, tag] { return net.hasMessage(src, rank, tag); },
        what);
    if (!net.tryRecv(src, rank, tag, out))
      throw TrapError("", "matched message vanished");
  }

private:
  struct Pending {
    std::shared_ptr<Buffer> buf;
    std::int64_t count = 0;
    int peer = -1;
    std::int64_t tag = 0;
    bool done = false;
  };
  struct Req {
    bool isRecv = false;
    std::size_t idx = 0;
    bool done = false;
  };

  static std::string describe(const Operation *op) {
    return op ? op->path() : "";
  }

  void checkPeer(std::int64_t peer, const Operation *op) const {
    if (peer < 0 || peer >= world)
      throw TrapError(describe(op), "peer rank " + std::to_string(peer) +
                                        " is outside the communicator");
  }

  void checkCount(const std::shared_ptr<Buffer> &buf, std::int64_t count,
                  const Operation *op) const {
    if (!buf)
      throw TrapError(describe(op), "access through a null buffer");
    if (count < 0 || count * buf->elemWidth() >
                         static_cast<std::int64_t>(buf->data.size()))
      throw TrapError(describe(op), "message count exceeds the buffer");
  }

  void checkReq(std::int64_t id, const Operation *op) const {
    if (id < 0 || id >= static_cast<std::int64_t>(reqs.size()))
      throw TrapError(describe(op), "value is not a live request");
  }

  std::vector<unsigned char> prefixBytes(const std::shared_ptr<Buffer> &buf,
                                         std::int64_t count,
                                         const Operation *op) const {
    checkCount(buf, count, op);
    auto n = static_cast<std::size_t>(count * buf->elemWidth());
    return {buf->data.begin(), buf->data.begin() + static_cast<long>(n)};
  }

  // Match undone receives in post order so equal (peer, tag) pairs keep
  // their non-overtaking order.
  void progress() {
    for (Req &r : reqs) {
      if (!r.isRecv || r.done)
        continue;
      Pending &p = pendings[r.idx];
      std::vector<unsigned char> bytes;
      if (!net.tryRecv(p.peer, rank, p.tag, bytes))
        continue;
      auto n = std::min<std::size_t>(
          bytes.size(), static_cast<std::size_t>(p.count) *
                            static_cast<std::size_t>(p.buf->elemWidth()));
      std::memcpy(p.buf->data.data(), bytes.data(), n);
      p.done = true;
      r.done = true;
    }
  }

  std::string pendingDesc(std::int64_t id) const {
    const Req &r = reqs[static_cast<std::size_t>(id)];
    if (r.done || !r.isRecv)
      return "request already complete";
    const Pending &p = pendings[r.idx];
    std::ostringstream os;
    os << "waiting for a message from rank " << p.peer << " (tag " << p.tag
       << ")";
    return os.str();
  }

  std::string firstPendingDesc(const std::vector<std::int64_t> &ids) const {
    for (std::int64_t id : ids)
      if (!reqs[static_cast<std::size_t>(id)].done)
        return pendingDesc(id);
    return "requests already complete";
  }

  void blockingBytes(int src, std::int64_t tag,
                     const std::shared_ptr<Buffer> &buf, std::int64_t count,
                     const Operation *op) {
    checkCount(buf, count, op);
    std::vector<unsigned char> bytes;
    rawRecv(src, tag, bytes,
            describe(op) + ": waiting for a message from rank " +
                std::to_string(src));
    auto n = std::min<std::size_t>(
        bytes.size(),
        static_cast<std::size_t>(count) * buf->elemWidth());
    std::memcpy(buf->data.data(), bytes.data(), n);
  }

  void recvBytesFrom(int src, std::int64_t tag, std::vector<unsigned char> &out,
                     const Operation *op) {
    rawRecv(src, tag, out,
            describe(op) + ": waiting for a message from rank " +
                std::to_string(src));
  }

  void foldInto(std::vector<unsigned char> &acc,
                const std::vector<unsigned char> &in, Scalar elem, ReduceOp rop,
                bool inIsLeft, const Operation *op) {
    if (in.size() != acc.size())
      throw TrapError(describe(op), "reduce contributions differ in size");
    int w = ir::scalarByteWidth(elem);
    std::size_t n = acc.size() / static_cast<std::size_t>(w);
    for (std::size_t i = 0; i < n; ++i) {
      if (elem == Scalar::F64) {
        double a, b;
        std::memcpy(&a, acc.data() + i * 8, 8);
        std::memcpy(&b, in.data() + i * 8, 8);
        double lhs = inIsLeft ? b : a, rhs = inIsLeft ? a : b;
        double r = rop == ReduceOp::Sum   ? lhs + rhs
                   : rop == ReduceOp::Min ? (rhs < lhs ? rhs : lhs)
                                          : (rhs > lhs ? rhs : lhs);
        std::memcpy(acc.data() + i * 8, &r, 8);
      } else if (elem == Scalar::F32) {
        float a, b;
        std::memcpy(&a, acc.data() + i * 4, 4);
        std::memcpy(&b, in.data() + i * 4, 4);
        float lhs = inIsLeft ? b : a, rhs = inIsLeft ? a : b;
        float r = rop == ReduceOp::Sum   ? lhs + rhs
                  : rop == ReduceOp::Min ? (rhs < lhs ? rhs : lhs)
                                         : (rhs > lhs ? rhs : lhs);
        std::memcpy(acc.data() + i * 4, &r, 4);
      } else {
        std::int64_t a = 0, b = 0;
        std::memcpy(&a, acc.data() + i * static_cast<std::size_t>(w),
                    static_cast<std::size_t>(w));
        std::memcpy(&b, in.data() + i * static_cast<std::size_t>(w),
                    static_cast<std::size_t>(w));
        std::int64_t lhs = inIsLeft ? b : a, rhs = inIsLeft ? a : b;
        std::int64_t r = rop == ReduceOp::Sum   ? lhs + rhs
                         : rop == ReduceOp::Min ? std::min(lhs, rhs)
                                                : std::max(lhs, rhs);
        std::memcpy(acc.data() + i * static_cast<std::size_t>(w), &r,
                    static_cast<std::size_t>(w));
      }
    }
  }

  static constexpr std::int64_t collTagBase = std::int64_t(1) << 40;

  Transport &net;
  Scheduler &sched;
  int rank;
  int world;
  const AbiTable &abi;
  std::vector<Pending> pendings;
  std::vector<Req> reqs;
  std::int64_t collSeq = 0;
};

//===----------------------------------------------------------------------===//
// Region (de)serialization for the native halo-exchange path
//===----------------------------------------------------------------------===//

std::vector<unsigned char> packRegion(const Buffer &buf,
                                      const std::vector<std::int64_t> &at,
                                      const std::vector<std::int64_t> &size,
                                      const Operation *op) {
  int r = static_cast<int>(size.size());
  std::int64_t n = 1;
  for (std::int64_t s : size)
    n *= s;
  int w = buf.elemWidth();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(n * w));
  std::vector<std::int64_t> p(static_cast<std::size_t>(r), 0);
  for (std::int64_t k = 0; k < n; ++k) {
    std::int64_t idx = 0;
    for (int d = 0; d < r; ++d) {
      std::int64_t raw = at[d] + p[d];
      if (raw < 0 || raw >= buf.shape[d])
        throw TrapError(op ? op->path() : "",
                        "exchange region escapes the buffer");
      idx = idx * buf.shape[d] + raw;
    }
    std::memcpy(bytes.data() + k * w, buf.data.data() + idx * w,
                static_cast<std::size_t>(w));
    for (int d = r - 1; d >= 0; --d) {
      if (++p[d] < size[d])
        break;
      p[d] = 0;
    }
  }
  return bytes;
}

void unpackRegion(Buffer &buf, const std::vector<std::int64_t> &at,
                  const std::vector<std::int64_t> &size,
                  const std::vector<unsigned char> &bytes,
                  const Operation *op) {
  int r = static_cast<int>(size.size());
  std::int64_t n = 1;
  for (std::int64_t s : size)
    n *= s;
  int w = buf.elemWidth();
  if (static_cast<std::int64_t>(bytes.size()) != n * w)
    throw TrapError(op ? op->path() : "",
                    "exchange message has the wrong size");
  std::vector<std::int64_t> p(static_cast<std::size_t>(r), 0);
  for (std::int64_t k = 0; k < n; ++k) {
    std::int64_t idx = 0;
    for (int d = 0; d < r; ++d) {
      std::int64_t raw = at[d] + p[d];
      if (raw < 0 || raw >= buf.shape[d])
        throw TrapError(op ? op->path() : "",
                        "exchange region escapes the buffer");
      idx = idx * buf.shape[d] + raw;
    }
    std::memcpy(buf.data.data() + idx * w, bytes.data() + k * w,
                static_cast<std::size_t>(w));
    for (int d = r - 1; d >= 0; --d) {
      if (++p[d] < size[d])
        break;
      p[d] = 0;
    }
  }
}

//===----------------------------------------------------------------------===//
// Runtime hooks wiring ops to the endpoint
//===----------------------------------------------------------------------===//

class RankHooks : public RuntimeHooks {
public:
  explicit RankHooks(Endpoint &ep) : ep(ep) {}

  void mpiOp(Interpreter &interp, const Operation &op,
             const std::vector<RtValue> &args,
             std::vector<RtValue> &results) override {
    const std::string &n = op.name;
    auto buf = [&](int k) {
      return interp.bufferAt(args[static_cast<std::size_t>(k)].i, op.path());
    };
    if (n == "mpi.init" || n == "mpi.finalize") {
      if (n == "mpi.finalize")
        ep.finalize(&op);
      return;
    }
    if (n == "mpi.comm_rank") {
      results[0].i = ep.myRank();
      return;
    }
    if (n == "mpi.comm_size") {
      results[0].i = ep.worldSize();
      return;
    }
    if (n == "mpi.send" || n == "mpi.isend") {
      auto id = ep.isend(buf(0), args[1].i, args[3].i, args[4].i, &op);
      if (n == "mpi.isend")
        results[0].i = id;
      else
        ep.wait(id, &op);
      return;
    }
    if (n == "mpi.recv") {
      ep.recv(buf(0), args[1].i, args[3].i, args[4].i, &op);
      return;
    }
    if (n == "mpi.irecv") {
      results[0].i = ep.irecv(buf(0), args[1].i, args[3].i, args[4].i, &op);
      return;
    }
    if (n == "mpi.wait") {
      ep.wait(args[0].i, &op);
      return;
    }
    if (n == "mpi.waitall") {
      std::vector<std::int64_t> ids;
      for (const RtValue &v : args)
        ids.push_back(v.i);
      ep.waitall(ids, &op);
      return;
    }
    if (n == "mpi.test") {
      results[0].i = ep.test(args[0].i, &op) ? 1 : 0;
      results[1].i = args[0].i;
      return;
    }
    if (n == "mpi.bcast") {
      ep.bcast(buf(0), args[1].i, args[3].i, &op);
      return;
    }
    if (n == "mpi.reduce") {
      ep.reduce(buf(0), buf(1), args[2].i, reduceAttr(op), args[4].i, &op);
      return;
    }
    if (n == "mpi.allreduce") {
      ep.allreduce(buf(0), buf(1), args[2].i, reduceAttr(op), &op);
      return;
    }
    if (n == "mpi.gather") {
      ep.gather(buf(0), args[1].i, buf(3), args[4].i, args[6].i, &op);
      return;
    }
    throw TrapError(op.path(), "no interpretation for this op");
  }

  void call(Interpreter &interp, const Operation &op, const std::string &callee,
            const std::vector<RtValue> &args,
            std::vector<RtValue> &results) override {
    const AbiTable &abi = ep.abiTable();
    auto buf = [&](int k) {
      return interp.bufferAt(args[static_cast<std::size_t>(k)].i, op.path());
    };
    auto elemOf = [&](int k) {
      auto s = abi.scalarForDatatype(args[static_cast<std::size_t>(k)].i);
      if (!s)
        throw TrapError(op.path(), "unknown datatype handle");
      return *s;
    };
    auto commOf = [&](int k) {
      if (args[static_cast<std::size_t>(k)].i != abi.commWorld)
        throw TrapError(op.path(), "unknown communicator handle");
    };
    auto typedBuf = [&](int bufArg, int dtArg) {
      auto b = buf(bufArg);
      if (b->elem != elemOf(dtArg))
        throw TrapError(op.path(), "datatype does not match the buffer");
      return b;
    };
    auto reduceOf = [&](int k) {
      auto name = abi.reduceOpName(args[static_cast<std::size_t>(k)].i);
      if (!name)
        throw TrapError(op.path(), "unknown reduction handle");
      return *name == "sum" ? ReduceOp::Sum
             : *name == "min" ? ReduceOp::Min
                              : ReduceOp::Max;
    };
    if (callee == "MPI_Init" || callee == "MPI_Finalize") {
      if (callee == "MPI_Finalize")
        ep.finalize(&op);
      return;
    }
    if (callee == "MPI_Comm_rank") {
      commOf(0);
      results[0].i = ep.myRank();
      return;
    }
    if (callee == "MPI_Comm_size") {
      commOf(0);
      results[0].i = ep.worldSize();
      return;
    }
    if (callee == "MPI_Send") {
      commOf(5);
      ep.send(typedBuf(0, 2), args[1].i, args[3].i, args[4].i, &op);
      return;
    }
    if (callee == "MPI_Recv") {
      commOf(5);
      ep.recv(typedBuf(0, 2), args[1].i, args[3].i, args[4].i, &op);
      return;
    }
    if (callee == "MPI_Isend") {
      commOf(5);
      results[0].i = ep.isend(typedBuf(0, 2), args[1].i, args[3].i, args[4].i, &op);
      return;
    }
    if (callee == "MPI_Irecv") {
      commOf(5);
      results[0].i = ep.irecv(typedBuf(0, 2), args[1].i, args[3].i, args[4].i, &op);
      return;
    }
    if (callee == "MPI_Wait") {
      ep.wait(args[0].i, &op);
      return;
    }
    if (callee == "MPI_Test") {
      results[0].i = ep.test(args[0].i, &op) ? 1 : 0;
      return;
    }
    if (callee == "MPI_Waitall") {
      auto reqBuf = buf(1);
      std::vector<std::int64_t> ids;
      for (std::int64_t k = 0; k < args[0].i; ++k)
        ids.push_back(reqBuf->getInt(k));
      ep.waitall(ids, &op);
      return;
    }
    if (callee == "MPI_Bcast") {
      commOf(4);
      ep.bcast(typedBuf(0, 2), args[1].i, args[3].i, &op);
      return;
    }
    if (callee == "MPI_Reduce") {
      commOf(6);
      ep.reduce(typedBuf(0, 3), typedBuf(1, 3), args[2].i, reduceOf(4),
                args[5].i, &op);
      return;
    }
    if (callee == "MPI_Allreduce") {
      commOf(5);
      ep.allreduce(typedBuf(0, 3), typedBuf(1, 3), args[2].i, reduceOf(4), &op);
      return;
    }
    if (callee == "MPI_Gather") {
      commOf(7);
      ep.gather(typedBuf(0, 2), args[1].i, typedBuf(3, 5), args[4].i,
                args[6].i, &op);
      return;
    }
    RuntimeHooks::call(interp, op, callee, args, results);
  }

  void swap(Interpreter &, const Operation &op,
            const std::shared_ptr<Buffer> &field) override {
    if (!field)
      throw TrapError(op.path(), "access through a null buffer");
    const Attribute *g = op.attr("grid");
    const auto *ga = g ? g->dynAs<GridAttr>() : nullptr;
    const Attribute *x = op.attr("exchanges");
    const auto *xs = x ? x->dynAs<ArrayAttr>() : nullptr;
    if (!ga || !xs)
      throw TrapError(op.path(), "swap is missing its exchange attributes");
    const Value *operand = op.operands[0];
    if (!operand->isArg())
      throw TrapError(op.path(), "swap operand must be a function argument");
    int fieldArg = operand->argIdx;
    int gridRank = static_cast<int>(ga->dims.size());

    std::vector<const ExchangeAttr *> decls;
    for (const Attribute &e : xs->elems) {
      const auto *ea = e.dynAs<ExchangeAttr>();
      if (!ea)
        throw TrapError(op.path(), "swap is missing its exchange attributes");
      decls.push_back(ea);
    }
    auto dirOf = [&](const ExchangeAttr &e) {
      int dim = -1, sign = 0;
      for (std::size_t d = 0; d < e.to.size(); ++d)
        if (e.to[d] != 0) {
          dim = static_cast<int>(d);
          sign = e.to[d] > 0 ? 1 : -1;
        }
      if (dim < 0)
        throw TrapError(op.path(), "exchange direction is all zero");
      return std::pair<int, int>(dim, sign);
    };
    // Buffered sends first, then blocking receives: the matching sends of
    // every neighbor were queued before any rank waits.
    for (const ExchangeAttr *e : decls) {
      auto [dim, sign] = dirOf(*e);
      std::int64_t nbr = ir::dmp::neighborRank(ep.myRank(), e->to, ga->dims);
      if (nbr < 0)
        continue;
      std::vector<std::int64_t> sendAt(e->at.size());
      for (std::size_t d = 0; d < e->at.size(); ++d)
        sendAt[d] = e->at[d] + e->offset[d];
      std::int64_t tag =
          fieldArg * 2 * gridRank + 2 * dim + (sign > 0 ? 1 : 0);
      ep.rawSend(static_cast<int>(nbr), tag,
                 packRegion(*field, sendAt, e->size, &op));
    }
    for (const ExchangeAttr *e : decls) {
      auto [dim, sign] = dirOf(*e);
      std::int64_t nbr = ir::dmp::neighborRank(ep.myRank(), e->to, ga->dims);
      if (nbr < 0)
        continue;
      std::int64_t tag =
          fieldArg * 2 * gridRank + 2 * dim + (sign > 0 ? 0 : 1);
      std::vector<unsigned char> bytes;
      ep.rawRecv(static_cast<int>(nbr), tag, bytes,
                 op.path() + ": waiting for a message from rank " +
                     std::to_string(nbr));
      unpackRegion(*field, e->at, e->size, bytes, &op);
    }
  }

private:
  static ReduceOp reduceAttr(const Operation &op) {
    auto name = op.strAttr("op");
    if (!name)
      throw TrapError(op.path(), "reduction without an op attribute");
    if (*name == "sum")
      return ReduceOp::Sum;
    if (*name == "min")
      return ReduceOp::Min;
    if (*name == "max")
      return ReduceOp::Max;
    throw TrapError(op.path(), "unknown reduction '" + *name + "'");
  }

  Endpoint &ep;
};

} // namespace

//===----------------------------------------------------------------------===//
// Geometry
//===----------------------------------------------------------------------===//

std::int64_t DecompGeometry::ranks() const {
  std::int64_t n = 1;
  for (std::int64_t g : grid)
    n *= g;
  return n;
}

Bounds DecompGeometry::coreOf(const std::vector<std::int64_t> &coord) const {
  Bounds b;
  for (std::size_t d = 0; d < grid.size(); ++d) {
    std::int64_t lb = domain.dims[d].lb + coord[d] * coreSize[d];
    b.dims.push_back({lb, lb + coreSize[d]});
  }
  return b;
}

namespace {

Diagnostic geomError(const std::string &msg) {
  Diagnostic d;
  d.message = msg;
  return d;
}

const Operation *constStencilEntry(const Operation &module) {
  const Operation *found = nullptr;
  for (const auto &op : ir::moduleBody(module).ops) {
    if (op->name != "func.func" || op->regions.empty() ||
        op->regions[0].args.empty())
      continue;
    bool allFields = true;
    for (const Value &a : op->regions[0].args)
      if (!a.type.is<FieldType>())
        allFields = false;
    if (!allFields)
      continue;
    if (found)
      return nullptr;
    found = op.get();
  }
  return found;
}

} // namespace

Expected<DecompGeometry> geometryOf(const Operation &module) {
  DecompGeometry g;
  const Attribute *topo = module.attr("dmp.topology");
  const auto *ga = topo ? topo->dynAs<GridAttr>() : nullptr;
  if (!ga)
    return Expected<DecompGeometry>::failure(
        geomError("module is not decomposed: missing the dmp.topology "
                  "attribute"));
  g.grid = ga->dims;

  const Attribute *ref = module.attr("dmp.reference");
  const auto *rs = ref ? ref->dynAs<ir::StringAttr>() : nullptr;
  if (!rs)
    return Expected<DecompGeometry>::failure(
        geomError("module is missing the dmp.reference snapshot"));
  auto parsed = ir::parseModule(rs->value, "<dmp.reference>");
  if (!parsed.ok())
    return Expected<DecompGeometry>::failure(parsed.diags);
  g.reference = std::move(*parsed);

  const Operation *refEntry = constStencilEntry(*g.reference);
  if (!refEntry)
    return Expected<DecompGeometry>::failure(
        geomError("reference module has no single all-field function"));
  for (const Value &a : refEntry->regions[0].args) {
    const auto &ft = a.type.as<FieldType>();
    g.globalBounds.push_back(ft.bounds);
    g.elems.push_back(ft.elem);
  }

  bool haveDomain = false;
  ir::walk(*refEntry, [&](const Operation &op) {
    if (op.name != "stencil.store")
      return;
    std::vector<std::int64_t> lb, ub;
    const Attribute *la = op.attr("lb");
    const Attribute *ua = op.attr("ub");
    if (!la || !ua || !ir::attrToIndexVector(*la, lb) ||
        !ir::attrToIndexVector(*ua, ub))
      return;
    Bounds b;
    for (std::size_t d = 0; d < lb.size(); ++d)
      b.dims.push_back({lb[d], ub[d]});
    g.domain = haveDomain ? Bounds::hull(g.domain, b) : b;
    haveDomain = true;
  });
  if (!haveDomain)
    return Expected<DecompGeometry>::failure(
        geomError("reference module has no resolved store bounds"));
  if (static_cast<std::size_t>(g.domain.rank()) != g.grid.size())
    return Expected<DecompGeometry>::failure(
        geomError("process grid rank does not match the domain"));

  for (int d = 0; d < g.domain.rank(); ++d) {
    if (g.domain.size(d) % g.grid[d] != 0)
      return Expected<DecompGeometry>::failure(
          geomError("domain does not divide evenly across the process grid"));
    g.coreSize.push_back(g.domain.size(d) / g.grid[d]);
  }

  const Operation *distEntry = ir::lookupFunc(module, "run");
  std::size_t firstField = 0;
  if (distEntry && !distEntry->regions.empty() &&
      !distEntry->regions[0].args.empty() &&
      distEntry->regions[0].args[0].type.isScalar(Scalar::Index)) {
    firstField = 1;
  } else {
    distEntry = constStencilEntry(module);
    if (!distEntry)
      return Expected<DecompGeometry>::failure(
          geomError("module has no runnable entry function"));
  }
  const Region &body = distEntry->regions[0];
  for (std::size_t i = firstField; i < body.args.size(); ++i) {
    const auto *ft = body.args[i].type.dynAs<FieldType>();
    if (!ft)
      return Expected<DecompGeometry>::failure(
          geomError("entry function argument is not a field"));
    g.localBounds.push_back(ft->bounds);
  }
  if (g.localBounds.size() != g.globalBounds.size())
    return Expected<DecompGeometry>::failure(
        geomError("field count differs between the module and its "
                  "reference"));
  return Expected<DecompGeometry>::success(std::move(g));
}

//===----------------------------------------------------------------------===//
// Scatter and gather
//===----------------------------------------------------------------------===//

std::vector<std::shared_ptr<Buffer>>
scatterRank(const DecompGeometry &g,
            const std::vector<std::shared_ptr<Buffer>> &globalInit,
            std::int64_t rank) {
  auto coord = ir::dmp::coordFromRank(rank, g.grid);
  std::vector<std::shared_ptr<Buffer>> out;
  for (std::size_t i = 0; i < g.localBounds.size(); ++i) {
    const Bounds &lb = g.localBounds[i];
    const Buffer &src = *globalInit[i];
    auto local = Buffer::forBounds(g.elems[i], lb);
    int r = local->rank();
    std::vector<std::int64_t> raw(static_cast<std::size_t>(r), 0);
    std::vector<std::int64_t> sraw(static_cast<std::size_t>(r), 0);
    std::int64_t n = local->count();
    for (std::int64_t k = 0; k < n; ++k) {
      for (int d = 0; d < r; ++d)
        sraw[d] = lb.dims[d].lb + raw[d] + coord[d] * g.coreSize[d] -
                  g.globalBounds[i].dims[d].lb;
      if (!src.rawInBounds(sraw))
        throw TrapError("", "local field escapes the global field");
      local->copyElem(local->flatIndex(raw), src, src.flatIndex(sraw));
      for (int d = r - 1; d >= 0; --d) {
        if (++raw[d] < local->shape[d])
          break;
        raw[d] = 0;
      }
    }
    out.push_back(std::move(local));
  }
  return out;
}

void gatherRank(const DecompGeometry &g, std::int64_t rank,
                const std::vector<std::shared_ptr<Buffer>> &local,
                std::vector<std::shared_ptr<Buffer>> &globalOut) {
  auto coord = ir::dmp::coordFromRank(rank, g.grid);
  Bounds core = g.coreOf(coord);
  for (std::size_t i = 0; i < local.size(); ++i) {
    Buffer &dst = *globalOut[i];
    const Buffer &src = *local[i];
    int r = static_cast<int>(g.grid.size());
    std::vector<std::int64_t> p(static_cast<std::size_t>(r));
    for (int d = 0; d < r; ++d)
      p[d] = core.dims[d].lb;
    std::vector<std::int64_t> sraw(static_cast<std::size_t>(r));
    std::vector<std::int64_t> draw(static_cast<std::size_t>(r));
    bool more = core.numPoints() > 0;
    while (more) {
      for (int d = 0; d < r; ++d) {
        sraw[d] = p[d] - coord[d] * g.coreSize[d] - src.lb[d];
        draw[d] = p[d] - dst.lb[d];
      }
      if (!src.rawInBounds(sraw) || !dst.rawInBounds(draw))
        throw TrapError("", "core region escapes a field");
      dst.copyElem(dst.flatIndex(draw), src, src.flatIndex(sraw));
      more = false;
      for (int d = r - 1; d >= 0; --d) {
        if (++p[d] < core.dims[d].ub) {
          more = true;
          break;
        }
        p[d] = core.dims[d].lb;
      }
    }
  }
}

//===----------------------------------------------------------------------===//
// Simulation driver
//===----------------------------------------------------------------------===//

SimResult simulate(Operation &module,
                   const std::vector<std::shared_ptr<Buffer>> &globalInit,
                   const SimOptions &opts) {
  SimResult res;
  auto geom = geometryOf(module);
  if (!geom.ok()) {
    res.error = geom.diagText();
    return res;
  }
  const DecompGeometry &g = *geom;
  std::size_t numFields = g.localBounds.size();
  if (globalInit.size() != numFields) {
    res.error = "initial field count does not match the module";
    return res;
  }
  for (std::size_t i = 0; i < numFields; ++i) {
    if (!globalInit[i] || globalInit[i]->bounds() != g.globalBounds[i]) {
      res.error = "initial field " + std::to_string(i) +
                  " does not match the reference bounds";
      return res;
    }
  }

  auto n = static_cast<std::size_t>(g.ranks());

  Operation *runFunc = ir::lookupFunc(module, "run");
  bool runPath = runFunc && !runFunc->regions.empty() &&
                 !runFunc->regions[0].args.empty() &&
                 runFunc->regions[0].args[0].type.isScalar(Scalar::Index);
  Operation *stepFunc = nullptr;
  std::string stepName;
  if (!runPath) {
    stepFunc = stencilEntry(module);
    if (!stepFunc) {
      res.error = "module has no runnable entry function";
      return res;
    }
    stepName = *stepFunc->strAttr("sym_name");
  }

  std::vector<Diagnostic> diags;
  auto groups = ir::lowering::timeSlotGroups(
      module, static_cast<int>(numFields), diags);
  if (!diags.empty()) {
    res.error = diags[0].message;
    return res;
  }
  std::vector<int> src =
      ir::lowering::rotationSources(groups, static_cast<int>(numFields));

  std::vector<std::vector<std::shared_ptr<Buffer>>> rankFields(n);
  for (std::size_t r = 0; r < n; ++r)
    rankFields[r] = scatterRank(g, globalInit, static_cast<std::int64_t>(r));

  Transport net;
  Scheduler sched(static_cast<int>(n), opts.seed);
  std::vector<std::unique_ptr<Endpoint>> endpoints;
  std::vector<std::unique_ptr<RankHooks>> hooks;
  std::vector<std::unique_ptr<Interpreter>> interps;
  for (std::size_t r = 0; r < n; ++r) {
    endpoints.push_back(std::make_unique<Endpoint>(
        net, sched, static_cast<int>(r), static_cast<int>(n), opts.abi));
    hooks.push_back(std::make_unique<RankHooks>(*endpoints.back()));
    interps.push_back(
        std::make_unique<Interpreter>(module, hooks.back().get(), opts.abi));
  }

  std::vector<std::vector<std::shared_ptr<Buffer>>> finals(n);
  std::vector<std::function<void()>> bodies;
  for (std::size_t r = 0; r < n; ++r) {
    bodies.push_back([&, r] {
      if (runPath) {
        std::vector<RtValue> args(1 + numFields);
        args[0].i = opts.timesteps;
        for (std::size_t i = 0; i < numFields; ++i)
          args[1 + i].buf = rankFields[r][i];
        auto results = interps[r]->invoke("run", std::move(args));
        for (RtValue &v : results) {
          if (!v.buf)
            throw TrapError("", "run returned a non-buffer result");
          finals[r].push_back(v.buf);
        }
      } else {
        auto binding = rankFields[r];
        std::vector<std::shared_ptr<Buffer>> next(binding.size());
        for (std::int64_t t = 0; t < opts.timesteps; ++t) {
          std::vector<RtValue> args(binding.size());
          for (std::size_t i = 0; i < binding.size(); ++i)
            args[i].buf = binding[i];
          interps[r]->invoke(stepName, std::move(args));
          for (std::size_t i = 0; i < binding.size(); ++i)
            next[i] = binding[static_cast<std::size_t>(src[i])];
          binding = next;
        }
        finals[r] = binding;
      }
    });
  }

  auto errors = sched.run(std::move(bodies));

  res.rankOpCounts.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    res.rankOpCounts[r] = interps[r]->opCounts();
    for (const auto &[name, count] : res.rankOpCounts[r])
      res.opCounts[name] += count;
  }

  std::string report;
  for (std::size_t r = 0; r < n; ++r)
    if (!errors[r].empty())
      report += "rank " + std::to_string(r) + ": " + errors[r] + "\n";
  if (!report.empty()) {
    res.error = report;
    return res;
  }
  if (net.pendingCount() != 0) {
    res.error = "transport still holds " +
                std::to_string(net.pendingCount()) +
                " undelivered messages";
    return res;
  }
  for (std::size_t r = 0; r < n; ++r)
    if (finals[r].size() != numFields) {
      res.error = "rank " + std::to_string(r) +
                  " finished with the wrong field count";
      return res;
    }

  std::vector<int> origin = bindingAfter(groups, static_cast<int>(numFields),
                                         opts.timesteps);
  for (std::size_t i = 0; i < numFields; ++i)
    res.fields.push_back(globalInit[static_cast<std::size_t>(origin[i])]->clone());
  for (std::size_t r = 0; r < n; ++r)
    gatherRank(g, static_cast<std::int64_t>(r), finals[r], res.fields);
  res.ok = true;
  return res;
}

} // namespace halogen::exec
