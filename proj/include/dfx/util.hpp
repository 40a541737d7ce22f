#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace dfx::util {

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

std::string read_text_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, const std::string& content);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& p);
void write_binary_file(const std::filesystem::path& p, const void* data, std::size_t len);

// Ordered parallel map: outputs land at the same index as their input, so the
// result is identical to the sequential run regardless of thread count.
// Exceptions from workers are rethrown on the calling thread.
template <typename In, typename Out>
std::vector<Out> parallel_map(const std::vector<In>& items,
                              const std::function<Out(const In&)>& fn,
                              unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Out> out(items.size());
  if (items.empty()) return out;
  if (threads == 1 || items.size() == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = fn(items[i]);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  std::size_t nthreads = std::min<std::size_t>(threads, items.size());
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < items.size(); i += nthreads) out[i] = fn(items[i]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Exclusive workdir lock (O_CREAT|O_EXCL lockfile holding the pid).
// Released in the destructor; a stale file from a dead pid is reclaimed.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path lockfile_;
  bool held_ = false;
};

}  // namespace dfx::util
