#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mmhar {

// Clear-text `key = value` document. Blank lines and `#` comments are ignored.
// Lines without `=` are kept verbatim as body lines (used by scripts).
class KvDocument {
 public:
  static KvDocument parse(std::string_view text);
  static KvDocument load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::vector<std::string>& body() const { return body_; }

  // Throws ConfigError naming the first key not in `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> body_;
};

std::string trim(std::string_view s);

}  // namespace mmhar
