#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainlab {

inline constexpr const char* kVersion = "chainlab 0.1.0";

// Raised for schema violations; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class FieldType { integer, unsigned_integer, real, text, real_list, integer_list };

struct FieldSpec {
  std::string name;
  FieldType type;
  std::string default_value;
  std::string doc;
};

// All recognized keys with their defaults.
const std::vector<FieldSpec>& config_schema();

// Resolved experiment configuration. Values are kept as validated strings so that the
// exact text can be echoed into every output file.
class ExperimentConfig {
 public:
  // Defaults, overridden by the file (if any), then by `overrides`.
  static ExperimentConfig load(const std::string& path, const std::map<std::string, std::string>& overrides);
  static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);

  long get_int(const std::string& key) const;
  unsigned long long get_uint(const std::string& key) const;
  double get_real(const std::string& key) const;
  const std::string& get_text(const std::string& key) const;
  std::vector<double> get_reals(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  // Output directory after the CHAINLAB_OUTPUT_DIR override.
  std::string output_dir() const;
  const std::map<std::string, std::string>& resolved() const { return values_; }
  bool defaulted(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> defaulted_;
  const FieldSpec& field(const std::string& key) const;
};

// key = value lines; '#' starts a comment; blank lines are ignored.
std::map<std::string, std::string> read_kv_file(const std::string& path);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// CSV (header line, '#' metadata lines before it) or JSON object with "meta" and "rows".
// Floats are written with 17 significant digits.
void emit_table(const Table& t, const std::string& path, const std::string& format,
                const std::map<std::string, std::string>& meta);
Table read_table(const std::string& path, const std::string& format);

std::string format_double(double x);

}  // namespace chainlab
