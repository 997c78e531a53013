/*
 * Copyright 2026 The DFCL Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DFCL_COMMON_HPP_
#define DFCL_COMMON_HPP_

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace dfcl {

// Row-major so that one individual's treatments are contiguous.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Error hierarchy. The CLI maps each family onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or command usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data violates an invariant (schema, bounds, shape).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Parse failure with the offending 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Non-finite values, failed convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

// No allocation satisfies the budget.
class InfeasibleError : public NumericError {
 public:
  InfeasibleError(const std::string& what, double floor_cost)
      : NumericError(what), floor_cost_(floor_cost) {}
  double floor_cost() const { return floor_cost_; }

 private:
  double floor_cost_;
};

// Instance too large for an exhaustive or quadratic reference routine.
class SizeError : public Error {
 public:
  using Error::Error;
};

namespace internal {

inline std::size_t& ThreadCap() {
  static std::size_t cap = 0;  // 0: hardware concurrency
  return cap;
}

}  // namespace internal

// Caps the worker count used by ParallelFor. 0 restores the default.
inline void SetMaxThreads(std::size_t n) { internal::ThreadCap() = n; }

inline std::size_t MaxThreads() {
  std::size_t cap = internal::ThreadCap();
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return cap;
}

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks are disjoint,
// so callers writing to per-index slots need no synchronization.
inline void ParallelFor(std::size_t n,
                        const std::function<void(std::size_t, std::size_t)>& fn,
                        std::size_t min_chunk = 4096) {
  std::size_t workers = std::min(MaxThreads(), (n + min_chunk - 1) / min_chunk);
  if (workers <= 1) {
    if (n > 0) fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

// Shortest decimal text that parses back to the same double.
inline std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool ParseDouble(std::string_view s, double* out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool ParseInt(std::string_view s, long long* out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> SplitFields(std::string_view line,
                                                 char sep = ',') {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

}  // namespace dfcl

#endif  // DFCL_COMMON_HPP_
