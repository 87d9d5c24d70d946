// Copyright 2026 The fba Authors. All rights reserved.
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

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace fba {

/// Worker count for a request of 0 (one per hardware thread).
std::size_t default_workers();

/// Computes produce(i) for i in [0, n) on up to `workers` threads and hands
/// each result to consume(i, result) on the calling thread in index order.
/// The first exception (by index) stops new work and is rethrown.
template <typename R>
void ordered_parallel(std::size_t n, std::size_t workers, const std::function<R(std::size_t)>& produce,
                      const std::function<void(std::size_t, R&)>& consume) {
  if (workers == 0) workers = default_workers();
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      R r = produce(i);
      consume(i, r);
    }
    return;
  }

  std::mutex mutex;
  std::condition_variable ready;
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::size_t next = 0;
  std::size_t consumed = 0;
  bool stop = false;
  // Bound on results held but not yet consumed.
  const std::size_t window = 4 * workers;

  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return stop || next >= n || next < consumed + window; });
        if (stop || next >= n) return;
        i = next++;
      }
      std::optional<R> result;
      std::exception_ptr error;
      try {
        result.emplace(produce(i));
      } catch (...) {
        error = std::current_exception();
      }
      {
        std::lock_guard lock(mutex);
        slots[i] = std::move(result);
        errors[i] = error;
      }
      ready.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);

  std::exception_ptr failure;
  for (std::size_t i = 0; i < n && !failure; ++i) {
    std::optional<R> item;
    {
      std::unique_lock lock(mutex);
      ready.wait(lock, [&] { return slots[i].has_value() || errors[i]; });
      if (errors[i]) {
        failure = errors[i];
        stop = true;
      } else {
        item = std::move(slots[i]);
        slots[i].reset();
      }
    }
    ready.notify_all();
    if (failure) break;
    try {
      consume(i, *item);
    } catch (...) {
      failure = std::current_exception();
    }
    {
      std::lock_guard lock(mutex);
      consumed = i + 1;
      if (failure) stop = true;
    }
    ready.notify_all();
  }
  {
    std::lock_guard lock(mutex);
    stop = true;
  }
  ready.notify_all();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fba
