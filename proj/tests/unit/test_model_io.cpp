#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "egpd/error.hpp"
#include "egpd/fitter.hpp"
#include "egpd/model_io.hpp"
#include "egpd/random.hpp"

using namespace egpd;
namespace fs = std::filesystem;

namespace {

ModelFrame space_time_frame(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(n), lon(n), lat(n), t(n);
  for (int i = 0; i < n; ++i) {
    const int station = i % 25;
    lon[i] = 2.0 + 0.2 * (station % 5) + 0.01 * station;
    lat[i] = 44.0 + 0.15 * (station / 5);
    t[i] = 366.0 * uniform_open01(rng);
    const double psi = std::exp(0.3 + 0.3 * std::sin(2.0 * std::numbers::pi * t[i] / 366.0) + 0.2 * (lon[i] - 2.4));
    y[i] = egpd_quantile(uniform_open01(rng), EgpdParams(0.15, psi, Carrier::model1(1.4)));
  }
  ModelFrame f(y);
  f.add_covariate("lon", lon);
  f.add_covariate("lat", lat);
  f.add_covariate("day_of_year", t);
  return f;
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "egpd_model_io_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("fitted model survives a save/load round trip") {
  const ModelFrame f = space_time_frame(3000, 4);
  GridOptions opt;
  opt.cyclic_dim = 8;
  opt.thinplate_dim = 10;
  ModelSpec spec = make_grid_spec("egpd1", "M.st2nomu", opt);
  spec.parameters[0].link = LinkFunction::shifted_log(0.001);
  const FittedModel fm = fit(f, spec);
  const fs::path path = temp_dir() / "m.json";
  save_model(fm, path);
  const FittedModel back = load_model(path);

  CHECK(back.name == fm.name);
  CHECK(back.family().name() == "egpd1");
  CHECK(back.model.parameters[0].link == LinkFunction::shifted_log(0.001));
  CHECK(back.global_deviance == fm.global_deviance);
  CHECK(back.edf_total == fm.edf_total);
  CHECK(back.n_train == fm.n_train);
  CHECK(back.converged == fm.converged);
  CHECK(back.cycles == fm.cycles);
  CHECK(back.lambdas == fm.lambdas);
  CHECK(back.term_edf == fm.term_edf);
  CHECK(back.iterations.size() == fm.iterations.size());
  CHECK(back.training_fingerprint == fm.training_fingerprint);
  CHECK(back.covariance == fm.covariance);

  const ParameterTable a = predict_params(fm, f);
  const ParameterTable b = predict_params(back, f);
  CHECK(a.names == b.names);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  const ParameterTable sa = standard_errors(fm, f);
  const ParameterTable sb = standard_errors(back, f);
  CHECK((sa.values - sb.values).cwiseAbs().maxCoeff() == 0.0);

  // A second save of the loaded model is byte-identical.
  const fs::path path2 = temp_dir() / "m2.json";
  save_model(back, path2);
  std::ifstream i1(path), i2(path2);
  const std::string s1((std::istreambuf_iterator<char>(i1)), {});
  const std::string s2((std::istreambuf_iterator<char>(i2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("model JSON layout") {
  const ModelFrame f = space_time_frame(800, 5);
  const FittedModel fm = fit(f, make_grid_spec("egpd1", "M.tnomu", GridOptions{.cyclic_dim = 6, .lambda = 3.0}));
  const nlohmann::json j = model_to_json(fm);
  CHECK(j.at("schema") == kModelSchema);
  CHECK(j.at("family") == "egpd1");
  const auto& term = j.at("parameters").at(1).at("terms").at(1);
  const auto& spec = term.at("spec");
  CHECK(spec.at("kind") == "cyclic");
  CHECK(spec.at("covariates") == nlohmann::json::array({"day_of_year"}));
  CHECK(spec.at("dim") == 6);
  CHECK(spec.at("lambda") == 3.0);
  CHECK(spec.at("period") == 366.0);
  CHECK(j.at("parameters").at(0).at("link") == "log");
}

TEST_CASE("schema errors") {
  nlohmann::json j = {{"name", "x"}};
  CHECK_THROWS_AS(model_from_json(j), ConfigError);
  j["schema"] = "egpd-model/99";
  CHECK_THROWS_AS(model_from_json(j), ConfigError);
  j["schema"] = kModelSchema;
  CHECK_THROWS_AS(model_from_json(j), ConfigError);
  CHECK_THROWS_AS(load_model(temp_dir() / "does_not_exist.json"), ConfigError);

  const ModelFrame f = space_time_frame(300, 6);
  nlohmann::json good = model_to_json(fit(f, ModelSpec::intercept_only("egpd3")));
  good["parameters"][0]["terms"][0]["coefficients"] = {1.0, 2.0};
  CHECK_THROWS_AS(model_from_json(good), ConfigError);
}

TEST_CASE("spec JSON round trip") {
  ModelSpec s = make_grid_spec("egpd4", "M.st3nomu");
  s.parameters[2].link = LinkFunction::shifted_log(0.25);
  const ModelSpec back = spec_from_json(spec_to_json(s));
  CHECK(back.name == s.name);
  CHECK(back.family == s.family);
  REQUIRE(back.parameters.size() == s.parameters.size());
  for (std::size_t i = 0; i < s.parameters.size(); ++i) {
    CHECK(back.parameters[i].link == s.parameters[i].link);
    REQUIRE(back.parameters[i].terms.size() == s.parameters[i].terms.size());
    for (std::size_t k = 0; k < s.parameters[i].terms.size(); ++k) {
      const auto& a = s.parameters[i].terms[k];
      const auto& b = back.parameters[i].terms[k];
      CHECK(a.kind == b.kind);
      CHECK(a.covariates == b.covariates);
      CHECK(a.dim == b.dim);
      CHECK(a.period == b.period);
      CHECK(a.lambda == b.lambda);
      CHECK(a.select == b.select);
    }
  }
}
