//===- transport.cpp - in-memory message fabric ---------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "halogen/exec/transport.hpp"

namespace halogen::exec {

void Transport::send(int src, int dst, std::int64_t tag,
                     std::vector<unsigned char> bytes) {
  queues[{src, dst, tag}].push_back(std::move(bytes));
}

bool Transport::tryRecv(int src, int dst, std::int64_t tag,
                        std::vector<unsigned char> &out) {
  auto it = queues.find({src, dst, tag});
  if (it == queues.end() || it->second.empty())
    return false;
  out = std::move(it->second.front());
  it->second.pop_front();
  if (it->second.empty())
    queues.erase(it);
  return true;
}

bool Transport::hasMessage(int src, int dst, std::int64_t tag) const {
  auto it = queues.find({src, dst, tag});
  return it != queues.end() && !it->second.empty();
}

std::size_t Transport::pendingCount() const {
  std::size_t n = 0;
  for (const auto &[key, q] : queues)
    n += q.size();
  return n;
}

} // namespace halogen::exec
