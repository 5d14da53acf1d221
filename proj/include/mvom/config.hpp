#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvom/error.hpp"

namespace mvom {

/// Parse or validation problem tied to one config field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }  // 0 when the field is missing

 private:
  std::string field_;
  int line_;
};

/// Flat key = value text. Lines starting with '#' and blank lines are
/// ignored; keys may repeat to form lists. Entry order is preserved.
class Config {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static Config parse(const std::string& text);
  static Config load(const std::string& file);
  std::string serialize() const;

  void set(const std::string& key, const std::string& value);  // replaces all entries of key
  void add(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  /// Scalar access: the key must appear at most once.
  std::optional<std::string> find(const std::string& key) const;
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::vector<const Entry*> all(const std::string& key) const;

  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int_or(const std::string& key, int fallback) const;
  std::optional<std::uint64_t> get_u64(const std::string& key) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  /// Whitespace-separated numbers; repeated keys are concatenated.
  std::vector<double> get_doubles(const std::string& key) const;

  /// Throws for the first key outside `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

  const std::vector<Entry>& entries() const { return entries_; }
  /// Directory of the loaded file, used to resolve relative paths.
  const std::string& base_dir() const { return base_dir_; }
  void set_base_dir(std::string dir) { base_dir_ = std::move(dir); }

  bool operator==(const Config& other) const;

  static double to_double(const Entry& e, const std::string& token);
  static std::vector<double> to_doubles(const Entry& e, const std::string& text);

 private:
  const Entry* single(const std::string& key) const;

  std::vector<Entry> entries_;
  std::string base_dir_ = ".";
};

}  // namespace mvom
