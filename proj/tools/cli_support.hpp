#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <CLI11.hpp>

namespace kgin::cli {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Flat `key = value` file. Blank lines and lines starting with '#' are
/// skipped; values may be double-quoted.
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

/// Installs each entry as the default of the option `--key` on `app`, so
/// explicit flags still win. Unknown keys raise an error of kind
/// "config_key" naming the key.
void apply_config(CLI::App& app, const std::vector<ConfigEntry>& entries);

/// Value of `--config` (or `--config=...`) anywhere in argv.
std::optional<std::string> find_config_arg(int argc, const char* const* argv);

/// Ordered key/value pairs written back as a config file.
class ResolvedConfig {
 public:
  template <typename V>
  void set(const std::string& key, const V& value) {
    if constexpr (std::is_same_v<V, bool>) {
      add(key, value ? "true" : "false");
    } else if constexpr (std::is_integral_v<V>) {
      add(key, std::to_string(value));
    } else if constexpr (std::is_convertible_v<V, std::string>) {
      add(key, std::string(value));
    } else {
      add(key, format_number(value));
    }
  }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  void add(const std::string& key, std::string value);
  static std::string format_number(double v);
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct Dims {
  std::size_t x = 0, y = 0, t = 0;
};

/// "X,Y,T" with positive integers.
Dims parse_dims(const std::string& text);
std::string format_dims(const Dims& d);

/// Comma-separated positive reals, e.g. "4,6,8".
std::vector<double> parse_r_list(const std::string& text);

/// Process exit status for an error kind. 0 is success; every kind maps to a
/// fixed nonzero code.
int exit_code_for(const std::string& kind);

/// `kgin: error kind=<kind> exit=<code> msg="<message>"` with quotes and
/// newlines escaped.
std::string error_line(const std::string& kind, int code, const std::string& message);

}  // namespace kgin::cli
