#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "crfn/errors.hpp"

namespace crfn::toml {

// The TOML subset the configs use: one level of [section] tables, scalar
// values (string, number, bool) and flat arrays of strings or numbers.
using Value = std::variant<std::string, double, bool, std::vector<std::string>,
                           std::vector<double>>;

class Doc {
 public:
  static Doc parse(const std::string& text,
                   const std::string& origin = "<string>");
  static Doc parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_number(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<std::string> get_string_array(
      const std::string& section, const std::string& key,
      const std::vector<std::string>& fallback) const;

  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

 private:
  const Value* find(const std::string& section, const std::string& key) const;
  std::string origin_;
  std::map<std::string, std::map<std::string, Value>> tables_;
};

}  // namespace crfn::toml
