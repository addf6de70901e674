#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "egpd/cli.hpp"
#include "egpd/error.hpp"
#include "egpd/fitter.hpp"
#include "egpd/model_io.hpp"
#include "egpd/random.hpp"

using namespace egpd;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "egpd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "egpd_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Raw 6-minute records for a handful of stations.
fs::path raw_input() {
  static const fs::path path = [] {
    const fs::path p = scratch("raw") / "records.csv";
    std::ofstream out(p);
    out << "station_id,lon,lat,timestamp,precip\n";
    Rng rng(99);
    for (int s = 0; s < 6; ++s) {
      for (int hour = 0; hour < 24 * 120; ++hour) {
        const EpochSeconds h0 = 1577836800 + 3600L * hour;
        double total = 0.0;
        if (uniform_open01(rng) < 0.3) {
          const double psi = std::exp(0.3 * std::sin(2.0 * std::numbers::pi * hour / (24.0 * 366.0)));
          total = egpd_quantile(uniform_open01(rng), EgpdParams(0.1, psi, Carrier::model1(1.3)));
        }
        for (int k = 0; k < 10; ++k) {
          out << "R" << s << ',' << 2.0 + 0.3 * s << ',' << 44.0 + 0.2 * (s % 3) << ','
              << format_iso8601(h0 + 360 * k) << ',' << total / 10.0 << '\n';
        }
      }
    }
    return p;
  }();
  return path;
}

// Prepared tables shared by the fit/predict/simulate/diagnose cases.
fs::path prepared() {
  static const fs::path dir = [] {
    const fs::path d = scratch("prepared");
    REQUIRE(run({"prepare", "-i", raw_input().string(), "-o", d.string()}).code == kExitOk);
    return d;
  }();
  return dir;
}

fs::path fitted_intercept_model() {
  static const fs::path path = [] {
    const fs::path d = prepared();
    const Result r = run({"fit", "--family", "egpd1", "--variation", "M.0", "-o", d.string()});
    REQUIRE(r.code == kExitOk);
    return d / "models" / "megpd1.0.json";
  }();
  return path;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  CHECK(run({"fit", "--no-such-flag"}).code == kExitConfig);
  CHECK(run({"predict", "-m", "x.json"}).code == kExitConfig);
  CHECK(run({"--help"}).code == kExitOk);
  const Result bad_cfg = run({"fit", "-c", "/nonexistent/cfg.json"});
  CHECK(bad_cfg.code == kExitConfig);
  CHECK(bad_cfg.err.find("/nonexistent/cfg.json") != std::string::npos);
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
  CHECK(exit_code_for(DataError("x")) == kExitData);
  CHECK(exit_code_for(NumericalError("x", 1.0)) == kExitNumerical);
  CHECK(exit_code_for(FitError("x", 1.0)) == kExitNumerical);
}

TEST_CASE("prepare: missing input names the path") {
  const fs::path d = scratch("missing");
  const Result r = run({"prepare", "-i", "/nonexistent/input.csv", "-o", d.string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("/nonexistent/input.csv") != std::string::npos);
  CHECK(run({"prepare", "-o", d.string()}).code == kExitConfig);
  CHECK(run({"prepare", "-i", raw_input().string(), "--stride", "0", "-o", d.string()}).code == kExitConfig);
}

TEST_CASE("prepare is deterministic and reports its filters") {
  const fs::path a = scratch("prep_a"), b = scratch("prep_b");
  REQUIRE(run({"prepare", "-i", raw_input().string(), "-o", a.string()}).code == kExitOk);
  REQUIRE(run({"prepare", "-i", raw_input().string(), "-o", b.string()}).code == kExitOk);
  for (const char* f : {"train.csv", "validation.csv", "train.bin", "validation.bin", "prepare_report.json"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(fs::file_size(a / f) > 0);
  }
  CHECK(lines(slurp(a / "train.csv")).front() == "station_id,lon,lat,timestamp,day_of_year,precip_mm");

  const auto report = nlohmann::json::parse(slurp(a / "prepare_report.json"));
  CHECK(report.at("input_rows") == 6 * 24 * 120 * 10);
  CHECK(report.at("complete_hours") == 6 * 24 * 120);
  CHECK(report.at("train_stations").size() + report.at("validation_stations").size() == 6);
  CHECK(report.at("after_stride").get<int>() ==
        report.at("train_rows").get<int>() + report.at("validation_rows").get<int>());

  const fs::path low = scratch("prep_low");
  REQUIRE(run({"prepare", "-i", raw_input().string(), "--censor", "0.2", "-o", low.string()}).code == kExitOk);
  const auto low_report = nlohmann::json::parse(slurp(low / "prepare_report.json"));
  CHECK(low_report.at("after_censor").get<int>() > report.at("after_censor").get<int>());
  CHECK(low_report.at("after_stride").get<int>() > report.at("after_stride").get<int>());
}

TEST_CASE("fit: grid validation happens before any fitting") {
  const fs::path d = scratch("fit_bad");
  fs::copy_file(prepared() / "train.csv", d / "train.csv");
  const Result r = run({"fit", "--variation", "M.0", "--variation", "M.bogus", "-o", d.string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("M.bogus") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "criteria.csv"));
  CHECK_FALSE(fs::exists(d / "models"));
  CHECK(run({"fit", "--family", "egpd2", "-o", d.string()}).code == kExitConfig);
  CHECK(run({"fit", "--step", "1.5", "-o", d.string()}).code == kExitConfig);
  CHECK(run({"fit", "--train", (d / "absent.csv").string(), "-o", d.string()}).code == kExitData);
}

TEST_CASE("fit writes criteria and models") {
  const fs::path d = scratch("fit_ok");
  const Result r = run({"fit", "--train", (prepared() / "train.csv").string(), "--validation",
                        (prepared() / "validation.csv").string(), "--family", "egpd1", "--family",
                        "gamma", "--variation", "M.0", "-o", d.string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = lines(slurp(d / "criteria.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "model,family,status,gd,aic,bic,edf,n_train,gd_validation,converged,error");
  const auto e1 = split(rows[1]);
  const auto ga = split(rows[2]);
  CHECK(e1[0] == "megpd1.0");
  CHECK(e1[2] == "ok");
  CHECK(std::stod(e1[6]) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(ga[0] == "mga.0");
  CHECK(std::stod(ga[6]) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_FALSE(e1[8].empty());
  CHECK(fs::exists(d / "models" / "megpd1.0.json"));
  CHECK(fs::exists(d / "models" / "mga.0.json"));
  CHECK(fs::exists(d / "effective_config.json"));
  const FittedModel m = load_model(d / "models" / "megpd1.0.json");
  CHECK(m.global_deviance == doctest::Approx(std::stod(e1[3])).epsilon(1e-12));
}

TEST_CASE("predict") {
  const fs::path d = scratch("predict");
  std::ofstream(d / "new.csv") << "lon,lat,timestamp\n2.0,44.0,2020-01-10T00:00:00Z\n3.5,44.4,2020-07-10T06:00:00Z\n2.6,44.2,2021-03-01T00:00:00Z\n";
  const Result r = run({"predict", "-m", fitted_intercept_model().string(), "-d", (d / "new.csv").string(), "--output", "-"});
  REQUIRE(r.code == kExitOk);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "xi,psi,kappa1");
  CHECK(rows[1] == rows[2]);
  CHECK(rows[2] == rows[3]);

  // periodic model: t and t + 366 give the same parameters
  const fs::path md = scratch("predict_t");
  REQUIRE(run({"fit", "--train", (prepared() / "train.csv").string(), "--variation", "M.tnomu",
               "--cyclic-dim", "8", "--lambda", "10", "-o", md.string()}).code == kExitOk);
  std::ofstream(d / "doy.csv") << "day_of_year\n40.25\n406.25\n100\n";
  const Result p = run({"predict", "-m", (md / "models" / "megpd1.tnomu.json").string(), "-d",
                        (d / "doy.csv").string(), "--output", (d / "out.csv").string()});
  REQUIRE(p.code == kExitOk);
  const auto prow = lines(slurp(d / "out.csv"));
  REQUIRE(prow.size() == 4);
  const auto a = split(prow[1]), b = split(prow[2]);
  for (std::size_t c = 0; c < a.size(); ++c) CHECK(std::stod(a[c]) == doctest::Approx(std::stod(b[c])).epsilon(1e-12));
  CHECK(prow[1] != prow[3]);

  std::ofstream(d / "nocov.csv") << "lon,lat\n2.0,44.0\n";
  const Result miss = run({"predict", "-m", (md / "models" / "megpd1.tnomu.json").string(), "-d", (d / "nocov.csv").string()});
  CHECK(miss.code == kExitConfig);
  CHECK(miss.err.find("day_of_year") != std::string::npos);
}

TEST_CASE("simulate") {
  const fs::path d = scratch("simulate");
  std::ofstream(d / "new.csv") << "day_of_year\n10\n200\n";
  const std::string model = fitted_intercept_model().string();
  const auto sim = [&](const std::string& n, const std::string& seed) {
    return run({"simulate", "-m", model, "-d", (d / "new.csv").string(), "-n", n, "--seed", seed, "--output", "-"});
  };
  const Result a = sim("20000", "5"), b = sim("20000", "5"), c = sim("20000", "6");
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(sim("0", "5").out == "row,draw,y\n");
  CHECK(sim("-1", "5").code == kExitConfig);

  const auto rows = lines(a.out);
  REQUIRE(rows.size() == 1 + 40000);
  const FittedModel m = load_model(model);
  ModelFrame one;
  one.add_covariate("day_of_year", std::vector<double>{10.0});
  const ParameterTable p = predict_params(m, one);
  const double q99 = egpd_quantile(0.99, EgpdParams(p.values(0, 0), p.values(0, 1), Carrier::model1(p.values(0, 2))));
  int below = 0, n = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i]);
    if (f[0] != "0") continue;
    ++n;
    below += std::stod(f[2]) <= q99;
  }
  CHECK(n == 20000);
  const double share = double(below) / n;
  CHECK(std::abs(share - 0.99) < 4.0 * std::sqrt(0.99 * 0.01 / n));
}

TEST_CASE("diagnose") {
  const fs::path d = scratch("diagnose");
  const std::string model = fitted_intercept_model().string();
  const std::string data = (prepared() / "validation.bin").string();
  REQUIRE(run({"diagnose", "-m", model, "-d", data, "-o", d.string()}).code == kExitOk);
  const auto all = lines(slurp(d / "pp_megpd1.0.csv"));
  REQUIRE(all.size() > 10);
  CHECK(all[0] == "empirical,theoretical,season,tail_flag");
  CHECK(split(all[1])[2] == "all");
  CHECK(fs::exists(d / "diagnose_summary.csv"));

  REQUIRE(run({"diagnose", "-m", model, "-d", data, "--tail", "0.9", "-o", d.string()}).code == kExitOk);
  const auto tail = lines(slurp(d / "pp_megpd1.0.csv"));
  REQUIRE(tail.size() > 1);
  CHECK(tail.size() - 1 < (all.size() - 1) / 5);
  for (std::size_t i = 1; i < tail.size(); ++i) {
    const auto f = split(tail[i]);
    CHECK(std::stod(f[1]) >= 0.9);
    CHECK(f[3] == "1");
  }

  const fs::path s = scratch("diagnose_season");
  REQUIRE(run({"diagnose", "-m", model, "-d", data, "--by-season", "-o", s.string()}).code == kExitOk);
  std::size_t total = 0;
  for (const char* season : {"winter", "spring", "summer", "autumn"}) {
    const fs::path f = s / ("pp_megpd1.0_" + std::string(season) + ".csv");
    INFO(f);
    REQUIRE(fs::exists(f));
    const auto rows = lines(slurp(f));
    total += rows.size() - 1;
    if (rows.size() > 1) CHECK(split(rows[1])[2] == season);
  }
  CHECK(total == all.size() - 1);

  CHECK(run({"diagnose", "-m", model, "-d", "/nonexistent/v.csv", "-o", s.string()}).code == kExitData);
}

TEST_CASE("output directory from the environment") {
  const fs::path env_dir = scratch("env_out");
  const fs::path flag_dir = scratch("flag_out");
  ::setenv(kOutputDirEnv, env_dir.c_str(), 1);
  const Result a = run({"prepare", "-i", raw_input().string()});
  const Result b = run({"prepare", "-i", raw_input().string(), "-o", flag_dir.string()});
  ::unsetenv(kOutputDirEnv);
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);
  CHECK(fs::exists(env_dir / "train.csv"));
  CHECK(fs::exists(flag_dir / "train.csv"));
  CHECK(fs::exists(env_dir / "train.bin"));

  // env also beats the config file
  const fs::path cfg_dir = scratch("cfg_out");
  const fs::path env2 = scratch("env_out2");
  RunConfig c;
  c.inputs = {raw_input().string()};
  c.output_dir = cfg_dir.string();
  std::ofstream(cfg_dir / "cfg.json") << config_to_json(c).dump();
  ::setenv(kOutputDirEnv, env2.c_str(), 1);
  const Result r = run({"prepare", "-c", (cfg_dir / "cfg.json").string()});
  ::unsetenv(kOutputDirEnv);
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(env2 / "train.csv"));
  CHECK_FALSE(fs::exists(cfg_dir / "train.csv"));
}

TEST_CASE("config round trip and validation") {
  RunConfig c;
  c.inputs = {"a.csv", "b.csv"};
  c.format.delimiter = ';';
  c.format.station = "2";
  c.prepare.censor = 0.3;
  c.prepare.stride = 2;
  c.families = {"egpd3", "egpd4"};
  c.variations = {"M.t", "M.st"};
  c.links = {{"xi", "shifted-log:0.001"}};
  c.grid.lambda = 4.0;
  c.control.step = {0.5, 0.1};
  c.control.init = {{"xi", 0.1}};
  c.output_dir = "somewhere";
  const nlohmann::json j = config_to_json(c);
  CHECK(config_to_json(config_from_json(j)) == j);
  const RunConfig back = config_from_json(j);
  CHECK(back.format.delimiter == ';');
  CHECK(back.grid.lambda == 4.0);
  CHECK(back.links.at("xi") == "shifted-log:0.001");

  CHECK_THROWS_AS(config_from_json({{"colour", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"control", {{"n_cyc", 0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"prepare", {{"censor", "high"}}}}), ConfigError);

  const auto specs = grid_specs(c);
  CHECK(specs.size() == 4);
  CHECK(specs[0].parameters[0].link == LinkFunction::shifted_log(0.001));
  RunConfig badlink = c;
  badlink.families = {"egpd3", "gamma"};
  CHECK_THROWS_AS(grid_specs(badlink), ConfigError);
}

TEST_CASE("installed binaries") {
  const char* cli = std::getenv("EGPD_CLI");
  const char* synth = std::getenv("EGPD_SYNTH");
  if (cli == nullptr || synth == nullptr) return;
  const fs::path d = scratch("binaries");
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  const std::string raw = (d / "raw.csv").string();
  REQUIRE(status(std::string(synth) + " --stations 4 --days 30 --seed 3 -o " + raw) == 0);
  CHECK(status(std::string(cli)) == kExitConfig);
  CHECK(status(std::string(cli) + " prepare -i /nonexistent.csv -o " + d.string()) == kExitData);
  CHECK(status(std::string(cli) + " prepare -i " + raw + " -o " + d.string()) == kExitOk);
  CHECK(status(std::string(cli) + " fit --variation M.nope -o " + d.string()) == kExitConfig);
  CHECK(status(std::string(cli) + " fit --variation M.0 -o " + d.string()) == kExitOk);
}
