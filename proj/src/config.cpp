#include "mvom/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mvom {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string describe(const std::string& field, int line, const std::string& message) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << "field '" << field << "': " << message;
  return os.str();
}

bool valid_key(const std::string& key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

}  // namespace

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : Error(ErrorCode::ConfigParse, describe(field, line, message)), field_(std::move(field)), line_(line) {}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(s, line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(key, line, "invalid key");
    const std::string value = trim(s.substr(eq + 1));
    if (value.find('\n') != std::string::npos) throw ConfigError(key, line, "value spans lines");
    c.entries_.push_back({key, value, line});
  }
  return c;
}

Config Config::load(const std::string& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::Io, "cannot read config file '" + file + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Config c = parse(buffer.str());
  const auto parent = std::filesystem::path(file).parent_path();
  c.base_dir_ = parent.empty() ? "." : parent.string();
  return c;
}

std::string Config::serialize() const {
  std::ostringstream out;
  for (const auto& e : entries_) out << e.key << " = " << e.value << '\n';
  return out.str();
}

void Config::set(const std::string& key, const std::string& value) {
  std::erase_if(entries_, [&](const Entry& e) { return e.key == key; });
  add(key, value);
}

void Config::add(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError(key, 0, "invalid key");
  entries_.push_back({key, trim(value), 0});
}

bool Config::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
}

const Config::Entry* Config::single(const std::string& key) const {
  const Entry* found = nullptr;
  for (const auto& e : entries_) {
    if (e.key != key) continue;
    if (found) throw ConfigError(key, e.line, "given more than once");
    found = &e;
  }
  return found;
}

std::optional<std::string> Config::find(const std::string& key) const {
  const Entry* e = single(key);
  if (!e) return std::nullopt;
  return e->value;
}

std::string Config::get(const std::string& key) const {
  const Entry* e = single(key);
  if (!e) throw ConfigError(key, 0, "missing required field");
  return e->value;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  const Entry* e = single(key);
  return e ? e->value : fallback;
}

std::vector<const Config::Entry*> Config::all(const std::string& key) const {
  std::vector<const Entry*> out;
  for (const auto& e : entries_)
    if (e.key == key) out.push_back(&e);
  return out;
}

double Config::to_double(const Entry& e, const std::string& token) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end || token.empty()) throw ConfigError(e.key, e.line, "expected a number, got '" + token + "'");
  return v;
}

std::vector<double> Config::to_doubles(const Entry& e, const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(to_double(e, token));
  return out;
}

double Config::get_double(const std::string& key) const {
  const Entry* e = single(key);
  if (!e) throw ConfigError(key, 0, "missing required field");
  return to_double(*e, e->value);
}

double Config::get_double_or(const std::string& key, double fallback) const {
  const Entry* e = single(key);
  return e ? to_double(*e, e->value) : fallback;
}

int Config::get_int_or(const std::string& key, int fallback) const {
  const Entry* e = single(key);
  if (!e) return fallback;
  int v = 0;
  const char* end = e->value.data() + e->value.size();
  const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
  if (ec != std::errc() || ptr != end || e->value.empty())
    throw ConfigError(key, e->line, "expected an integer, got '" + e->value + "'");
  return v;
}

std::optional<std::uint64_t> Config::get_u64(const std::string& key) const {
  const Entry* e = single(key);
  if (!e) return std::nullopt;
  std::uint64_t v = 0;
  const char* end = e->value.data() + e->value.size();
  const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
  if (ec != std::errc() || ptr != end || e->value.empty())
    throw ConfigError(key, e->line, "expected an unsigned 64-bit integer, got '" + e->value + "'");
  return v;
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
  const Entry* e = single(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  throw ConfigError(key, e->line, "expected true or false, got '" + e->value + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const Entry* e : all(key)) {
    const auto part = to_doubles(*e, e->value);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void Config::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& e : entries_)
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
      throw ConfigError(e.key, e.line, "unknown field for this subcommand");
}

bool Config::operator==(const Config& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].key != other.entries_[i].key || entries_[i].value != other.entries_[i].value) return false;
  return true;
}

}  // namespace mvom
