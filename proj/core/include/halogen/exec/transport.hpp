//===- transport.hpp - in-memory message fabric ----------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_EXEC_TRANSPORT_HPP
#define HALOGEN_EXEC_TRANSPORT_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <tuple>
#include <vector>

namespace halogen::exec {

/// One FIFO byte queue per (source, destination, tag). Receives match by
/// the exact triple with no wildcards, so the delivered bytes depend only
/// on per-sender program order, never on the interleaving of ranks; the
/// caller serializes access (the simulator runs one rank at a time).
class Transport {
public:
  void send(int src, int dst, std::int64_t tag,
            std::vector<unsigned char> bytes);
  bool tryRecv(int src, int dst, std::int64_t tag,
               std::vector<unsigned char> &out);
  bool hasMessage(int src, int dst, std::int64_t tag) const;
  /// Messages sent and not yet received.
  std::size_t pendingCount() const;

private:
  using Key = std::tuple<int, int, std::int64_t>;
  std::map<Key, std::deque<std::vector<unsigned char>>> queues;
};

} // namespace halogen::exec

#endif // HALOGEN_EXEC_TRANSPORT_HPP
