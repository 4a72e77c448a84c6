// Copyright 2026 The EntailSum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace entailsum {

// Runs fn(i) for i in [0, n). Each index is claimed by exactly one worker and
// results must be written to index-addressed slots, so the outcome does not
// depend on the worker count. Reductions over those slots stay sequential in
// the caller; that is what makes corpus-level means bitwise reproducible.
template <typename Fn>
void parallel_for_indexed(size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  size_t thread_count = std::min<size_t>(static_cast<size_t>(workers), n);
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(thread_count);
  for (size_t t = 0; t < thread_count; ++t) {
    pool.emplace_back([&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next.store(n);  // drain remaining work
          break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Kahan compensated summation. Corpus means are accumulated with this in a
// fixed (sorted-id) order so the reduction is exact enough to be stable and
// identical across worker counts.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;

  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace entailsum
