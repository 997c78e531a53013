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

// Flat key=value configuration text. Keys may carry a section prefix
// ("train.alpha=1.0"); '#' starts a comment line.

#ifndef DFCL_CONFIG_HPP_
#define DFCL_CONFIG_HPP_

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dfcl/common.hpp"

namespace dfcl {

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig Parse(std::string_view text) {
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      std::string_view line = Trim(text.substr(start, end - start));
      start = end + 1;
      if (line.empty() || line.front() == '#') {
        if (end == text.size()) break;
        continue;
      }
      std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key=value");
      }
      std::string key(Trim(line.substr(0, eq)));
      if (key.empty()) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty key");
      }
      cfg.values_[key] = std::string(Trim(line.substr(eq + 1)));
      if (end == text.size()) break;
    }
    return cfg;
  }

  static KeyValueConfig Load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return Parse(ss.str());
  }

  // "key=value" command-line override; later calls win.
  void Override(std::string_view assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError("override must be key=value: " + std::string(assignment));
    }
    values_[std::string(Trim(assignment.substr(0, eq)))] =
        std::string(Trim(assignment.substr(eq + 1)));
  }

  void Set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool Has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> Find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  // Looks up "section.key" first, then the bare "key".
  std::optional<std::string> Lookup(const std::string& section,
                                    const std::string& key) const {
    if (!section.empty()) {
      if (auto v = Find(section + "." + key)) return v;
    }
    return Find(key);
  }

  std::string GetString(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    auto v = Lookup(section, key);
    return v ? *v : fallback;
  }

  double GetDouble(const std::string& section, const std::string& key,
                   double fallback) const {
    auto v = Lookup(section, key);
    if (!v) return fallback;
    double out;
    if (!ParseDouble(*v, &out)) {
      throw ConfigError("not a number for " + key + ": " + *v);
    }
    return out;
  }

  long long GetInt(const std::string& section, const std::string& key,
                   long long fallback) const {
    auto v = Lookup(section, key);
    if (!v) return fallback;
    long long out;
    if (!ParseInt(*v, &out)) {
      throw ConfigError("not an integer for " + key + ": " + *v);
    }
    return out;
  }

  std::vector<double> GetDoubleList(const std::string& section,
                                    const std::string& key,
                                    std::vector<double> fallback) const {
    auto v = Lookup(section, key);
    if (!v) return fallback;
    return ParseDoubleList(*v, key);
  }

  std::vector<long long> GetIntList(const std::string& section,
                                    const std::string& key,
                                    std::vector<long long> fallback) const {
    auto v = Lookup(section, key);
    if (!v) return fallback;
    std::vector<long long> out;
    if (Trim(*v).empty()) return out;
    for (auto field : SplitFields(*v)) {
      long long x;
      if (!ParseInt(field, &x)) {
        throw ConfigError("bad integer list for " + key + ": " + *v);
      }
      out.push_back(x);
    }
    return out;
  }

  static std::vector<double> ParseDoubleList(std::string_view text,
                                             const std::string& what) {
    std::vector<double> out;
    if (Trim(text).empty()) return out;
    for (auto field : SplitFields(text)) {
      double x;
      if (!ParseDouble(field, &x)) {
        throw ConfigError("bad number list for " + what + ": " +
                          std::string(text));
      }
      out.push_back(x);
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  std::string ToString() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dfcl

#endif  // DFCL_CONFIG_HPP_
