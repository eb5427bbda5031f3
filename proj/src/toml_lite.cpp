#include "vcbc/toml_lite.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vcbc::toml {

Value Value::of(double x) {
  Value v;
  v.kind = Kind::Number;
  v.number = x;
  return v;
}

Value Value::of(bool b) {
  Value v;
  v.kind = Kind::Bool;
  v.boolean = b;
  return v;
}

Value Value::of(std::string s) {
  Value v;
  v.kind = Kind::String;
  v.text = std::move(s);
  return v;
}

Value Value::array(std::vector<Value> items) {
  Value v;
  v.kind = Kind::Array;
  v.items = std::move(items);
  return v;
}

bool Document::has(const std::string& section) const {
  for (const auto& s : sections)
    if (s.first == section) return true;
  return false;
}

const Table& Document::at(const std::string& section) const {
  for (const auto& s : sections)
    if (s.first == section) return s.second;
  throw ConfigError(section, "missing section [" + section + "]");
}

Table& Document::add(const std::string& section) {
  for (auto& s : sections)
    if (s.first == section) return s.second;
  sections.emplace_back(section, Table{});
  return sections.back().second;
}

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line), what);
}

class Parser {
 public:
  Parser(const std::string& text, int line) : s_(text), line_(line) {}

  Value value() {
    skip_ws();
    if (pos_ >= s_.size()) fail(line_, "missing value");
    const char c = s_[pos_];
    Value v;
    if (c == '"') {
      v = Value::of(string());
    } else if (c == '[') {
      v = array();
    } else if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      v = Value::of(true);
    } else if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      v = Value::of(false);
    } else {
      v = Value::of(number());
    }
    v.line = line_;
    return v;
  }

  void finish() {
    skip_ws();
    if (pos_ != s_.size()) fail(line_, "unexpected trailing text '" + s_.substr(pos_) + "'");
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) break;
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(line_, std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail(line_, "unterminated string");
    ++pos_;
    return out;
  }

  double number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '+' || s_[pos_] == '-' ||
                                s_[pos_] == '_'))
      ++pos_;
    std::string tok;
    for (std::size_t i = start; i < pos_; ++i)
      if (s_[i] != '_') tok += s_[i];
    if (tok.empty()) fail(line_, "expected a value");
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || tok == "nan" || tok == "inf")
      fail(line_, "invalid number '" + tok + "'");
    return x;
  }

  Value array() {
    ++pos_;
    std::vector<Value> items;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail(line_, "unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        break;
      }
      items.push_back(value());
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
      } else if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        break;
      } else {
        fail(line_, "expected ',' or ']' in array");
      }
    }
    return Value::array(std::move(items));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
};

// Drops a trailing comment and reports the bracket balance outside strings.
std::string strip_comment(const std::string& line, int& depth) {
  std::string out;
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str) {
      if (c == '\\' && i + 1 < line.size()) {
        out += c;
        out += line[++i];
        continue;
      }
      if (c == '"') in_str = false;
    } else {
      if (c == '#') break;
      if (c == '"') in_str = true;
      if (c == '[') ++depth;
      if (c == ']') --depth;
    }
    out += c;
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

void write_value(std::ostream& os, const Value& v) {
  switch (v.kind) {
    case Value::Kind::Number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v.number);
      os << buf;
      break;
    }
    case Value::Kind::Bool:
      os << (v.boolean ? "true" : "false");
      break;
    case Value::Kind::String:
      os << '"';
      for (char c : v.text) {
        if (c == '"' || c == '\\') os << '\\' << c;
        else if (c == '\n') os << "\\n";
        else if (c == '\t') os << "\\t";
        else os << c;
      }
      os << '"';
      break;
    case Value::Kind::Array:
      os << '[';
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) os << ", ";
        write_value(os, v.items[i]);
      }
      os << ']';
      break;
  }
}

}  // namespace

Document parse(const std::string& text) {
  Document doc;
  Table* current = nullptr;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    int depth = 0;
    std::string line = trim(strip_comment(raw, depth));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail(line_no, "malformed section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!valid_key(name)) fail(line_no, "invalid section name '" + name + "'");
      if (doc.has(name)) fail(line_no, "duplicate section [" + name + "]");
      current = &doc.add(name);
      continue;
    }
    const int start_line = line_no;
    // Multi-line arrays: keep reading until the brackets balance.
    while (depth > 0 && std::getline(in, raw)) {
      ++line_no;
      line += " " + trim(strip_comment(raw, depth));
    }
    if (depth != 0) fail(start_line, "unbalanced brackets");
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(start_line, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(start_line, "invalid key '" + key + "'");
    if (!current) fail(start_line, "key '" + key + "' outside any section");
    for (const auto& kv : *current)
      if (kv.first == key) fail(start_line, "duplicate key '" + key + "'");
    const std::string rhs = line.substr(eq + 1);
    Parser p(rhs, start_line);
    Value v = p.value();
    p.finish();
    current->emplace_back(key, std::move(v));
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void write(std::ostream& os, const Document& doc) {
  bool first = true;
  for (const auto& [name, table] : doc.sections) {
    if (!first) os << "\n";
    first = false;
    os << "[" << name << "]\n";
    for (const auto& [key, value] : table) {
      os << key << " = ";
      write_value(os, value);
      os << "\n";
    }
  }
}

std::string to_string(const Document& doc) {
  std::ostringstream os;
  write(os, doc);
  return os.str();
}

}  // namespace vcbc::toml
