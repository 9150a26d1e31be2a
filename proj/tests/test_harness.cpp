#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gfrls/harness.hpp"
#include "test_support.hpp"

using namespace gfrls;
using gfrls::testing::TestRng;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("gfrls_test_" + std::to_string(++counter));
  fs::create_directories(dir);
  return dir;
}

fs::path write_temp(const fs::path& dir, const std::string& name,
                    const std::string& contents) {
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  out << contents;
  return path;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json minimal_config(const std::string& out_dir) {
  return nlohmann::json{
      {"version", 1},
      {"scenario",
       {{"n", 1},
        {"p", 1},
        {"horizon", 80},
        {"theta_true0", 0.7},
        {"regressor", "sinusoidal-pe"},
        {"seed", 5}}},
      {"strategy", {{"tag", "plain-rls"}}},
      {"estimator", {{"theta0", 0.0}, {"p0", 1.0}}},
      {"analysis", {{"window", 1}}},
      {"output", {{"dir", out_dir}, {"plot_data", true}}},
  };
}

}  // namespace

TEST_CASE("doubles survive a format/parse round trip") {
  TestRng rng(401);
  for (int trial = 0; trial < 2000; ++trial) {
    const double value =
        rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-30, 30));
    const std::string text = format_double(value);
    REQUIRE(parse_double(text, 1, 1) == value);  // binary-identical
  }
  REQUIRE(format_double(0.0) == "0");
  REQUIRE(parse_double("1e300", 1, 1) == 1e300);
}

TEST_CASE("trace emit/ingest round trip is lossless") {
  TestRng rng(403);
  std::vector<Sample> samples;
  for (int k = 0; k < 25; ++k) {
    samples.emplace_back(rng.vector(2), RectMatrix(rng.matrix(2, 3)),
                         rng.spd(2));
  }
  std::ostringstream out;
  emit_trace(out, samples, true);
  std::istringstream in(out.str());
  const auto back = ingest_trace(in, 3, 2);
  REQUIRE(back.size() == samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    REQUIRE((back[k].y - samples[k].y).norm() == 0.0);
    REQUIRE((back[k].phi.m() - samples[k].phi.m()).norm() == 0.0);
    REQUIRE((back[k].gamma.m() - samples[k].gamma.m()).norm() == 0.0);
  }
}

TEST_CASE("gamma columns default to the identity") {
  std::istringstream in("k,y_1,phi_1_1,phi_1_2\n0,1.5,1,0\n1,-2,0,1\n");
  const auto samples = ingest_trace(in, 2, 1);
  REQUIRE(samples.size() == 2);
  REQUIRE(samples[0].gamma.m().isIdentity(0.0));
  REQUIRE(samples[1].y(0) == -2.0);
}

TEST_CASE("schema violations cite their location") {
  SECTION("bad header") {
    std::istringstream in("k,y_1,phi_1_1\n0,1,1\n");
    REQUIRE_THROWS_AS(ingest_trace(in, 2, 1), SchemaError);
  }
  SECTION("malformed float cites the line") {
    std::istringstream in("k,y_1,phi_1_1,phi_1_2\n0,oops,1,0\n");
    try {
      ingest_trace(in, 2, 1);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
      REQUIRE(std::string(e.what()).find("oops") != std::string::npos);
    }
  }
  SECTION("field count mismatch") {
    std::istringstream in("k,y_1,phi_1_1,phi_1_2\n0,1,1\n");
    REQUIRE_THROWS_AS(ingest_trace(in, 2, 1), SchemaError);
  }
  SECTION("out-of-order step index") {
    std::istringstream in("k,y_1,phi_1_1,phi_1_2\n1,1,1,0\n");
    REQUIRE_THROWS_AS(ingest_trace(in, 2, 1), SchemaError);
  }
}

TEST_CASE("config validation rejects out-of-domain parameters up front") {
  auto config = minimal_config("unused");
  SECTION("unknown strategy names the valid tags") {
    config["strategy"]["tag"] = "quantum-forgetting";
    try {
      parse_config(config);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      REQUIRE(what.find("quantum-forgetting") != std::string::npos);
      REQUIRE(what.find("exponential-forgetting") != std::string::npos);
      REQUIRE(what.find("multiple-forgetting") != std::string::npos);
    }
  }
  SECTION("lambda outside (0,1]") {
    config["strategy"] = {{"tag", "exponential-forgetting"}, {"lambda", 1.5}};
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
    config["strategy"]["lambda"] = 0.0;
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
  }
  SECTION("mu outside its domain, scalar and schedule") {
    config["strategy"] = {{"tag", "data-dependent-updating"}, {"mu", 1.0}};
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
    config["strategy"] = {{"tag", "data-dependent-updating"}, {"mu", 0.0}};
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
    config["strategy"] = {{"tag", "variable-rate-forgetting"},
                          {"schedule", {0.9, 1.2, 0.8}}};
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
  }
  SECTION("negative noise bound") {
    config["scenario"]["walk_bound"] = -0.1;
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
  }
  SECTION("both scenario and trace") {
    config["external_trace"] = {{"path", "x.csv"}, {"n", 1}, {"p", 1}};
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
  }
  SECTION("unsupported version") {
    config["version"] = 2;
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
  }
  SECTION("indefinite p0") {
    config["estimator"]["p0"] = -1.0;
    REQUIRE_THROWS_AS(parse_config(config), ConfigError);
  }
}

TEST_CASE("minimal experiment produces the artifact set") {
  const auto dir = temp_dir();
  const auto config_path =
      write_temp(dir, "config.json", minimal_config((dir / "out").string()).dump());

  const int status = run_experiment(config_path.string(), CliOverrides{});
  REQUIRE(status == 0);
  REQUIRE(fs::exists(dir / "out" / "trace.csv"));
  REQUIRE(fs::exists(dir / "out" / "trajectory.csv"));
  REQUIRE(fs::exists(dir / "out" / "report.json"));
  REQUIRE(fs::exists(dir / "out" / "plot.csv"));

  const auto report = nlohmann::json::parse(read_file(dir / "out" / "report.json"));
  REQUIRE(report.contains("profile"));
  REQUIRE(report.contains("tier"));
  REQUIRE(report["profile"]["a1_proper"].get<bool>());
  // Plain RLS on persistently exciting data certifies every condition on a
  // finite horizon.
  REQUIRE(report["tier"].get<std::string>() == "global-uniform-exponential");

  // The error trend decreases overall: final tilde norm well below the
  // initial one.
  const auto trajectory = read_file(dir / "out" / "trajectory.csv");
  std::istringstream lines(trajectory);
  std::string line;
  std::getline(lines, line);  // header
  REQUIRE(line.find("tilde_norm") != std::string::npos);
  std::string first_row;
  std::string last_row;
  while (std::getline(lines, line)) {
    if (first_row.empty()) {
      first_row = line;
    }
    if (!line.empty()) {
      last_row = line;
    }
  }
  const auto tilde_of = [&](const std::string& row) {
    // columns: k,theta_1,theta_true_1,tilde_norm,...
    std::istringstream cells(row);
    std::string cell;
    for (int i = 0; i < 4; ++i) std::getline(cells, cell, ',');
    return parse_double(cell, 0, 0);
  };
  // Plain RLS error contracts like 1/k under excitation; the trend is what
  // matters here.
  REQUIRE(tilde_of(last_row) < 0.05 * tilde_of(first_row));

  // --strict exits cleanly when every checked guarantee holds.
  CliOverrides strict;
  strict.strict = true;
  REQUIRE(run_experiment(config_path.string(), strict) == 0);

  // Re-running the identical config is byte-identical.
  const auto dir2 = temp_dir();
  const auto config2 =
      write_temp(dir2, "config.json", minimal_config((dir2 / "out").string()).dump());
  REQUIRE(run_experiment(config2.string(), CliOverrides{}) == 0);
  REQUIRE(read_file(dir / "out" / "trace.csv") ==
          read_file(dir2 / "out" / "trace.csv"));
  REQUIRE(read_file(dir / "out" / "trajectory.csv") ==
          read_file(dir2 / "out" / "trajectory.csv"));
  REQUIRE(read_file(dir / "out" / "report.json") ==
          read_file(dir2 / "out" / "report.json"));
}

TEST_CASE("external trace experiments run the same pipeline") {
  const auto dir = temp_dir();
  // Build a small trace via the generator, emit, then ingest through the
  // external-trace path.
  ScenarioSpec spec;
  spec.n = 2;
  spec.p = 1;
  spec.horizon = 40;
  spec.theta_true0 = Vector::Zero(2);
  spec.theta_true0 << 0.4, -0.3;
  spec.seed = 9;
  std::vector<Sample> samples;
  for (const auto& s : generate(spec)) {
    samples.push_back(s.sample);
  }
  std::ostringstream trace;
  emit_trace(trace, samples, false);
  const auto trace_path = write_temp(dir, "trace.csv", trace.str());

  nlohmann::json config{
      {"version", 1},
      {"external_trace", {{"path", trace_path.string()}, {"n", 2}, {"p", 1}}},
      {"strategy", {{"tag", "exponential-forgetting"}, {"lambda", 0.95}}},
      {"estimator", {{"theta0", 0.0}, {"p0", 10.0}}},
      {"analysis", {{"window", 2}, {"checks", {"conditions", "tier", "lemma5", "lemma7"}}}},
      {"output", {{"dir", (dir / "out").string()}}},
  };
  const auto config_path = write_temp(dir, "config.json", config.dump());
  REQUIRE(run_experiment(config_path.string(), CliOverrides{}) == 0);
  const auto report = nlohmann::json::parse(read_file(dir / "out" / "report.json"));
  REQUIRE(report["profile"]["a4"]["is_pe"].get<bool>());
  REQUIRE(report["lemma_checks"]["lemma7"]["min_margin"].get<double>() >=
          -report["lemma_checks"]["lemma7"]["tolerance"].get<double>());
}

TEST_CASE("oracle verb agrees with the batch cost") {
  const auto dir = temp_dir();
  auto config = minimal_config((dir / "out").string());
  config["strategy"] = {{"tag", "exponential-forgetting"}, {"lambda", 0.9}};
  const auto config_path = write_temp(dir, "config.json", config.dump());
  std::ostringstream out;
  REQUIRE(oracle_check(config_path.string(), CliOverrides{}, out) == 0);
  const auto result = nlohmann::json::parse(out.str());
  REQUIRE(result["pass"].get<bool>());
  REQUIRE(result["relative_error"].get<double>() <= 1e-8);
}

TEST_CASE("certify-pe verb sweeps windows") {
  const auto dir = temp_dir();
  ScenarioSpec spec;
  spec.n = 3;
  spec.p = 1;
  spec.horizon = 60;
  spec.theta_true0 = Vector::Zero(3);
  spec.seed = 3;
  std::vector<Sample> samples;
  for (const auto& s : generate(spec)) {
    samples.push_back(s.sample);
  }
  std::ostringstream trace;
  emit_trace(trace, samples, false);
  const auto trace_path = write_temp(dir, "trace.csv", trace.str());

  std::ostringstream out;
  const int status =
      certify_pe(trace_path.string(), 3, 3, 1, 8, "json", out);
  REQUIRE(status == 0);
  const auto report = nlohmann::json::parse(out.str());
  REQUIRE(report["is_pe"].get<bool>());
  REQUIRE(report["smallest_pe_window"].get<int>() >= 1);
  REQUIRE(report["smallest_pe_window"].get<int>() <= 3);
}

TEST_CASE("bound verb evaluates the closed forms") {
  const auto dir = temp_dir();
  const auto inputs = write_temp(dir, "inputs.json",
                                 nlohmann::json{{"a", 1.0},
                                                {"b", 1.0},
                                                {"alpha_bar", 1.0},
                                                {"beta_bar", 1.0},
                                                {"window", 1},
                                                {"delta_theta", 0.0},
                                                {"delta_y_bar", 0.0},
                                                {"delta_phi_bar", 0.0},
                                                {"theta_max", 0.0}}
                                     .dump());
  std::ostringstream out;
  REQUIRE(bound_from_inputs(inputs.string(), false, out) == 0);
  const auto bound = nlohmann::json::parse(out.str());
  REQUIRE(bound["delta_n"].get<double>() == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(bound["eps_star"].get<double>() ==
          Catch::Approx(1.0 + std::sqrt(2.0)).margin(1e-12));
  REQUIRE(bound["eps"].get<double>() == 0.0);
}
