#include "chainlab/io.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace chainlab {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_real(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e;
}

bool parse_int(const std::string& s, long& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e;
}

void check_value(const FieldSpec& f, const std::string& v) {
  double d;
  long i;
  switch (f.type) {
    case FieldType::integer:
      if (!parse_int(v, i)) throw ConfigError(f.name, "expected an integer, got '" + v + "'");
      break;
    case FieldType::unsigned_integer:
      if (!parse_int(v, i) || i < 0) throw ConfigError(f.name, "expected a non-negative integer, got '" + v + "'");
      break;
    case FieldType::real:
      if (!parse_real(v, d) || !std::isfinite(d)) throw ConfigError(f.name, "expected a finite number, got '" + v + "'");
      break;
    case FieldType::text:
      break;
    case FieldType::real_list:
      for (const auto& x : split_list(v))
        if (!parse_real(x, d)) throw ConfigError(f.name, "bad list entry '" + x + "'");
      break;
    case FieldType::integer_list:
      for (const auto& x : split_list(v))
        if (!parse_int(x, i)) throw ConfigError(f.name, "bad list entry '" + x + "'");
      break;
  }
}

// Range checks that need more than the field type.
void check_semantics(const ExperimentConfig& c) {
  const std::string& pot = c.get_text("potential");
  if (pot != "lj" && pot != "table") throw ConfigError("potential", "must be 'lj' or 'table'");
  if (pot == "table" && c.get_text("potential_table").empty())
    throw ConfigError("potential_table", "required when potential = table");
  if (c.get_real("lj_scale") <= 0) throw ConfigError("lj_scale", "must be positive");
  if (c.get_real("p") < 0) throw ConfigError("p", "must be non-negative");
  if (c.get_int("m") < 0) throw ConfigError("m", "must be >= 0 (0 means infinite range)");
  if (c.get_int("M_cut") < 2) throw ConfigError("M_cut", "must be >= 2");
  if (c.get_int("N") < 3) throw ConfigError("N", "must be >= 3");
  if (c.get_int("K") < 2) throw ConfigError("K", "must be >= 2");
  if (c.get_int("steps") < 1) throw ConfigError("steps", "must be positive");
  if (c.get_int("burn_in") < 0) throw ConfigError("burn_in", "must be non-negative");
  if (c.get_int("thinning") < 1) throw ConfigError("thinning", "must be positive");
  if (c.get_int("chains") < 1) throw ConfigError("chains", "must be positive");
  if (c.get_int("grid_nodes") < 0) throw ConfigError("grid_nodes", "must be non-negative");
  if (c.get_int("value_points") < 0) throw ConfigError("value_points", "must be non-negative");
  auto betas = c.get_reals("betas");
  if (betas.empty()) throw ConfigError("betas", "needs at least one value");
  for (size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0)) throw ConfigError("betas[" + std::to_string(i) + "]", "must be positive");
    if (i > 0 && !(betas[i] > betas[i - 1])) throw ConfigError("betas[" + std::to_string(i) + "]", "must be ascending");
  }
  for (int n : c.get_ints("N_list"))
    if (n < 3) throw ConfigError("N_list", "entries must be >= 3");
  const std::string& fmt = c.get_text("format");
  if (fmt != "json" && fmt != "csv") throw ConfigError("format", "must be 'json' or 'csv'");
}

}  // namespace

const std::vector<FieldSpec>& config_schema() {
  static const std::vector<FieldSpec> schema{
      {"potential", FieldType::text, "lj", "lj or table"},
      {"potential_table", FieldType::text, "", "two-column r v file for potential = table"},
      {"lj_scale", FieldType::real, "1", "prefactor of r^-12 - r^-6"},
      {"tail_exponent", FieldType::real, "6", "decay exponent s of a tabulated potential"},
      {"m", FieldType::integer, "2", "interaction range, 0 for infinite"},
      {"M_cut", FieldType::integer, "50", "truncation of the infinite range"},
      {"p", FieldType::real, "0.1", "pressure"},
      {"beta", FieldType::real, "20", "inverse temperature for single-beta subcommands"},
      {"betas", FieldType::real_list, "10,20,40,80", "ascending beta schedule"},
      {"N", FieldType::integer, "256", "particles"},
      {"N_list", FieldType::integer_list, "50,100,200,400", "particle counts for the convergence study"},
      {"K", FieldType::integer, "100", "surface profile length"},
      {"grid_nodes", FieldType::integer, "0", "transfer grid nodes per dimension, 0 for the default"},
      {"value_points", FieldType::integer, "0", "value-iteration points per dimension, 0 for the default"},
      {"steps", FieldType::integer, "1000000", "sampler sweeps after burn-in"},
      {"burn_in", FieldType::integer, "100000", "sampler burn-in sweeps"},
      {"thinning", FieldType::integer, "10", "record every n-th sweep"},
      {"seed", FieldType::unsigned_integer, "1", "RNG seed"},
      {"chains", FieldType::integer, "1", "independent chains"},
      {"max_lag", FieldType::integer, "8", "largest correlation lag"},
      {"output_dir", FieldType::text, "chainlab_out", "output directory (CHAINLAB_OUTPUT_DIR overrides)"},
      {"format", FieldType::text, "json", "json or csv"},
  };
  return schema;
}

const FieldSpec& ExperimentConfig::field(const std::string& key) const {
  for (const auto& f : config_schema())
    if (f.name == key) return f;
  throw ConfigError(key, "unknown key");
}

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  for (const auto& f : config_schema()) {
    c.values_[f.name] = f.default_value;
    c.defaulted_[f.name] = true;
  }
  for (const auto& [k, v] : kv) {
    const FieldSpec& f = c.field(k);
    std::string val = trim(v);
    check_value(f, val);
    c.values_[k] = val;
    c.defaulted_[k] = false;
  }
  check_semantics(c);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) kv = read_kv_file(path);
  for (const auto& [k, v] : overrides) kv[k] = v;
  return from_map(kv);
}

long ExperimentConfig::get_int(const std::string& key) const {
  long v = 0;
  parse_int(values_.at(key), v);
  return v;
}

unsigned long long ExperimentConfig::get_uint(const std::string& key) const {
  return std::stoull(values_.at(key));
}

double ExperimentConfig::get_real(const std::string& key) const {
  double v = 0;
  parse_real(values_.at(key), v);
  return v;
}

const std::string& ExperimentConfig::get_text(const std::string& key) const { return values_.at(key); }

std::vector<double> ExperimentConfig::get_reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& x : split_list(values_.at(key))) {
    double v = 0;
    parse_real(x, v);
    out.push_back(v);
  }
  return out;
}

std::vector<int> ExperimentConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (const auto& x : split_list(values_.at(key))) {
    long v = 0;
    parse_int(x, v);
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::string ExperimentConfig::output_dir() const {
  if (const char* env = std::getenv("CHAINLAB_OUTPUT_DIR"); env && *env) return env;
  return values_.at("output_dir");
}

bool ExperimentConfig::defaulted(const std::string& key) const { return defaulted_.at(key); }

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno), "expected key = value");
    std::string k = trim(line.substr(0, eq));
    if (k.empty()) throw ConfigError(path + ":" + std::to_string(lineno), "empty key");
    kv[k] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

void emit_table(const Table& t, const std::string& path, const std::string& format,
                const std::map<std::string, std::string>& meta) {
  for (const auto& r : t.rows)
    if (r.size() != t.columns.size()) throw std::invalid_argument("emit_table: row width differs from header");
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_table: cannot write '" + path + "'");
  if (format == "csv") {
    out << "# version = " << kVersion << "\n";
    for (const auto& [k, v] : meta) out << "# " << k << " = " << v << "\n";
    for (size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << "\n";
    for (const auto& r : t.rows) {
      for (size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << format_double(r[c]);
      out << "\n";
    }
  } else if (format == "json") {
    // numbers are written as 17-digit literals so that the text round-trips exactly
    out << "{\n  \"meta\": " << nlohmann::json(meta).dump() << ",\n";
    out << "  \"version\": " << nlohmann::json(kVersion).dump() << ",\n";
    out << "  \"columns\": " << nlohmann::json(t.columns).dump() << ",\n  \"rows\": [";
    for (size_t i = 0; i < t.rows.size(); ++i) {
      out << (i ? ",\n    [" : "\n    [");
      for (size_t c = 0; c < t.rows[i].size(); ++c) {
        double x = t.rows[i][c];
        std::string lit = format_double(x);
        if (!std::isfinite(x)) lit = "\"" + lit + "\"";
        else if (x == 0.0 && std::signbit(x)) lit = "-0.0";  // "-0" would parse as the integer 0
        out << (c ? ", " : "") << lit;
      }
      out << "]";
    }
    out << (t.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
  } else {
    throw std::invalid_argument("emit_table: format must be csv or json");
  }
  if (!out) throw std::runtime_error("emit_table: write failed for '" + path + "'");
}

Table read_table(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_table: cannot open '" + path + "'");
  Table t;
  auto num = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    if (!parse_real(s, v)) throw std::runtime_error("read_table: bad number '" + s + "'");
    return v;
  };
  if (format == "csv") {
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (header) {
        t.columns = cells;
        header = false;
      } else {
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(num(c));
        t.rows.push_back(row);
      }
    }
  } else {
    nlohmann::json j = nlohmann::json::parse(in);
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      std::vector<double> row;
      for (const auto& x : r) row.push_back(x.is_string() ? num(x.get<std::string>()) : x.get<double>());
      t.rows.push_back(row);
    }
  }
  return t;
}

}  // namespace chainlab
