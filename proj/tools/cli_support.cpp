#include "cli_support.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kgin/error.hpp"

namespace kgin::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  if (!text.empty() && text.back() == sep) parts.push_back("");
  return parts;
}

}  // namespace

std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path.string());
  std::vector<ConfigEntry> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
    if (e.key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (e.value.size() >= 2 && e.value.front() == '"' && e.value.back() == '"') {
      e.value = e.value.substr(1, e.value.size() - 2);
    }
    for (const auto& prev : out) {
      if (prev.key == e.key) throw ConfigError("config key '" + e.key + "' given twice");
    }
    out.push_back(std::move(e));
  }
  return out;
}

void apply_config(CLI::App& app, const std::vector<ConfigEntry>& entries) {
  for (const auto& e : entries) {
    if (e.key == "config" || e.key == "help") throw Error("config_key", "config key '" + e.key + "' is not allowed");
    CLI::Option* opt = app.get_option_no_throw("--" + e.key);
    if (opt == nullptr) throw Error("config_key", "unknown config key '" + e.key + "'");
    try {
      opt->default_val(e.value);
      opt->required(false);  // satisfied by the file
    } catch (const CLI::Error& err) {
      throw ConfigError("config key '" + e.key + "': " + err.what());
    }
  }
}

std::optional<std::string> find_config_arg(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

void ResolvedConfig::add(const std::string& key, std::string value) { entries_.emplace_back(key, std::move(value)); }

std::string ResolvedConfig::format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string ResolvedConfig::str() const {
  std::string s;
  for (const auto& [k, v] : entries_) s += k + " = " + v + "\n";
  return s;
}

void ResolvedConfig::write(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << str();
  if (!os) throw IoError("write failed for " + path.string());
}

Dims parse_dims(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw ConfigError("--dims expects X,Y,T, got '" + text + "'");
  std::size_t v[3];
  for (int i = 0; i < 3; ++i) {
    const auto& p = parts[std::size_t(i)];
    const auto r = std::from_chars(p.data(), p.data() + p.size(), v[i]);
    if (r.ec != std::errc() || r.ptr != p.data() + p.size() || v[i] == 0) {
      throw ConfigError("--dims expects positive integers, got '" + text + "'");
    }
  }
  return {v[0], v[1], v[2]};
}

std::string format_dims(const Dims& d) {
  return std::to_string(d.x) + "," + std::to_string(d.y) + "," + std::to_string(d.t);
}

std::vector<double> parse_r_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) {
    double r = 0;
    const auto res = std::from_chars(p.data(), p.data() + p.size(), r);
    if (p.empty() || res.ec != std::errc() || res.ptr != p.data() + p.size() || !std::isfinite(r) || !(r > 1.0)) {
      throw ConfigError("--R expects comma-separated values > 1, got '" + text + "'");
    }
    out.push_back(r);
  }
  if (out.empty()) throw ConfigError("--R list is empty");
  return out;
}

int exit_code_for(const std::string& kind) {
  if (kind == "usage" || kind == "config" || kind == "spec" || kind == "range") return 2;
  if (kind == "config_key") return 3;
  if (kind == "io") return 4;
  if (kind == "dimension" || kind == "partition") return 5;
  if (kind == "format" || kind == "checkpoint") return 6;
  if (kind == "training" || kind == "numeric") return 7;
  if (kind == "degenerate_input" || kind == "unsupported_size") return 8;
  return 1;
}

std::string error_line(const std::string& kind, int code, const std::string& message) {
  std::string msg;
  for (char c : message) {
    if (c == '"' || c == '\\') msg += '\\';
    if (c == '\n') {
      msg += "\\n";
      continue;
    }
    msg += c;
  }
  return "kgin: error kind=" + kind + " exit=" + std::to_string(code) + " msg=\"" + msg + "\"";
}

}  // namespace kgin::cli
