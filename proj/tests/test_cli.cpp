#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "chainlab/io.hpp"

using namespace chainlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("chainlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(CHAINLAB_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string field_of(const std::map<std::string, std::string>& kv) {
  try {
    ExperimentConfig::from_map(kv);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("empty table gives a header-only csv") {
  auto dir = scratch("empty");
  Table t{{"beta", "g"}, {}};
  emit_table(t, (dir / "t.csv").string(), "csv", {{"m", "2"}});
  std::string text = slurp(dir / "t.csv");
  std::vector<std::string> data;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') data.push_back(line);
  REQUIRE(data.size() == 1);
  CHECK(data[0] == "beta,g");
  CHECK(text.find(kVersion) != std::string::npos);
  auto back = read_table((dir / "t.csv").string(), "csv");
  CHECK(back.columns == t.columns);
  CHECK(back.rows.empty());
}

TEST_CASE("tables round-trip bit-exactly") {
  auto dir = scratch("roundtrip");
  const double inf = std::numeric_limits<double>::infinity();
  Table t{{"x", "y", "z"},
          {{0.1, 1.0 / 3.0, -2.5e-300},
           {std::nextafter(1.0, 2.0), 6.02214076e23, inf},
           {-inf, 5e-324, -0.0}}};
  for (std::string fmt : {"csv", "json"}) {
    std::string path = (dir / ("t." + fmt)).string();
    emit_table(t, path, fmt, {{"seed", "7"}});
    auto back = read_table(path, fmt);
    REQUIRE(back.rows.size() == t.rows.size());
    CHECK(back.columns == t.columns);
    for (size_t i = 0; i < t.rows.size(); ++i)
      for (size_t j = 0; j < t.rows[i].size(); ++j) {
        CHECK(std::signbit(back.rows[i][j]) == std::signbit(t.rows[i][j]));
        CHECK(back.rows[i][j] == t.rows[i][j]);
      }
  }
  auto nan_path = (dir / "nan.json").string();
  emit_table({{"v"}, {{std::nan("")}}}, nan_path, "json", {});
  CHECK(std::isnan(read_table(nan_path, "json").rows[0][0]));
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("schema violations name the field") {
  CHECK(field_of({{"bogus", "1"}}) == "bogus");
  CHECK(field_of({{"m", "two"}}) == "m");
  CHECK(field_of({{"p", "-0.1"}}) == "p");
  CHECK(field_of({{"seed", "-3"}}) == "seed");
  CHECK(field_of({{"betas", "10,5"}}) == "betas[1]");
  CHECK(field_of({{"betas", "10,0,20"}}) == "betas[1]");
  CHECK(field_of({{"format", "xml"}}) == "format");
  CHECK(field_of({{"potential", "table"}}) == "potential_table");
  CHECK(field_of({{"m", "3"}, {"p", "0.05"}, {"betas", "5,10"}}) == "");
}

TEST_CASE("config file, overrides and defaults") {
  auto dir = scratch("config");
  {
    std::ofstream out(dir / "run.cfg");
    out << "# experiment\n\nm = 3\np = 0.05   # pressure\nbetas = 5, 10\n";
  }
  auto kv = read_kv_file((dir / "run.cfg").string());
  CHECK(kv.at("m") == "3");
  CHECK(kv.at("p") == "0.05");
  auto c = ExperimentConfig::load((dir / "run.cfg").string(), {{"p", "0.07"}});
  CHECK(c.get_int("m") == 3);
  CHECK(c.get_real("p") == 0.07);
  CHECK(c.get_reals("betas") == std::vector<double>{5.0, 10.0});
  CHECK(c.defaulted("seed"));
  CHECK_FALSE(c.defaulted("m"));
  CHECK(c.resolved().size() == config_schema().size());
  {
    std::ofstream out(dir / "bad.cfg");
    out << "m 3\n";
  }
  CHECK_THROWS_AS(ExperimentConfig::load((dir / "bad.cfg").string(), {}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load((dir / "missing.cfg").string(), {}), ConfigError);
}

TEST_CASE("output directory honours the environment override") {
  auto c = ExperimentConfig::from_map({{"output_dir", "here"}});
  unsetenv("CHAINLAB_OUTPUT_DIR");
  CHECK(c.output_dir() == "here");
  setenv("CHAINLAB_OUTPUT_DIR", "/tmp/elsewhere", 1);
  CHECK(c.output_dir() == "/tmp/elsewhere");
  unsetenv("CHAINLAB_OUTPUT_DIR");
}

TEST_CASE("validate fails on the pressure bound") {
  auto dir = scratch("validate");
  int code = run_cli("validate --p 0.3 --output-dir " + dir.string(), dir / "log");
  CHECK(code == 2);
  CHECK(slurp(dir / "log").find("pressure bound") != std::string::npos);
  CHECK(run_cli("validate --p 0.1 --output-dir " + dir.string(), dir / "log") == 0);
  CHECK(run_cli("validate --set nonsense=1 --output-dir " + dir.string(), dir / "log") == 2);
  CHECK(slurp(dir / "log").find("nonsense") != std::string::npos);
}

TEST_CASE("gaussian subcommand reports the scalar Riccati root") {
  auto dir = scratch("gaussian");
  REQUIRE(run_cli("gaussian --m 2 --p 0.1 --output-dir " + dir.string(), dir / "log") == 0);
  auto j = nlohmann::json::parse(slurp(dir / "gaussian_matrices.json"));
  CHECK(j.at("version") == kVersion);
  CHECK(j.at("meta").at("m") == "2");
  CHECK(j.at("meta").at("seed") == "1");
  double C = std::stod(j.at("meta").at("result.C").get<std::string>());
  double A = 0.0, B = 0.0;
  for (const auto& row : j.at("rows")) {
    if (row[0] == 0 && row[1] == 0) {
      A = row[2];
      B = row[3];
    }
  }
  CHECK(C == doctest::Approx((A + std::sqrt(A * A - 4 * B * B)) / 2).epsilon(1e-14));

  std::string first = slurp(dir / "gaussian_matrices.json");
  REQUIRE(run_cli("gaussian --m 2 --p 0.1 --output-dir " + dir.string(), dir / "log") == 0);
  CHECK(slurp(dir / "gaussian_matrices.json") == first);
}

TEST_CASE("sample subcommand is reproducible") {
  auto dir = scratch("sample");
  std::string args = "sample --m 2 --beta 20 --N 16 --steps 2000 --burn-in 200 --seed 9 --format csv --output-dir " +
                     dir.string();
  REQUIRE(run_cli(args, dir / "log") == 0);
  std::string hist = slurp(dir / "sample_histogram.csv");
  std::string summary = slurp(dir / "sample_summary.json");
  CHECK(hist.find("# seed = 9") != std::string::npos);
  REQUIRE(run_cli(args, dir / "log") == 0);
  CHECK(slurp(dir / "sample_histogram.csv") == hist);
  CHECK(slurp(dir / "sample_summary.json") == summary);
}

TEST_CASE("beta schedule output is ascending") {
  auto dir = scratch("spectrum");
  REQUIRE(run_cli("spectrum --m 2 --betas 5,10 --format csv --output-dir " + dir.string(), dir / "log") == 0);
  auto t = read_table((dir / "spectrum.csv").string(), "csv");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.columns[0] == "beta");
  CHECK(t.rows[0][0] < t.rows[1][0]);
  CHECK(run_cli("spectrum --betas 10,5 --output-dir " + dir.string(), dir / "log") == 2);
}
