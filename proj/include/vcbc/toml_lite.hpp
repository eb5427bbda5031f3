// Reader and writer for the TOML subset used by run configs: [section]
// headers, key = value pairs, # comments, numbers, booleans, basic strings
// and (nested, possibly multi-line) arrays.
#pragma once

#include "vcbc/types.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vcbc::toml {

struct Value {
  enum class Kind { Number, Bool, String, Array };
  Kind kind = Kind::Number;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<Value> items;
  int line = 0;

  static Value of(double x);
  static Value of(bool b);
  static Value of(std::string s);
  static Value array(std::vector<Value> v);
};

/// Keys of one section, in file order.
using Table = std::vector<std::pair<std::string, Value>>;

struct Document {
  std::vector<std::pair<std::string, Table>> sections;

  bool has(const std::string& section) const;
  const Table& at(const std::string& section) const;  // ConfigError naming the section
  Table& add(const std::string& section);
};

/// Syntax errors are ConfigError keyed "line <n>".
Document parse(const std::string& text);
Document parse_file(const std::string& path);

void write(std::ostream& os, const Document& doc);
std::string to_string(const Document& doc);

}  // namespace vcbc::toml
