#include "egpd/model_io.hpp"

#include <fstream>

#include "egpd/error.hpp"

namespace egpd {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, cols_if_empty);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& r = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(r.size()) != cols) throw ConfigError("ragged matrix in model file");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json term_spec_to_json(const TermSpec& t) {
  return {{"kind", to_string(t.kind)}, {"covariates", t.covariates}, {"dim", t.dim},
          {"period", t.period},        {"lambda", t.lambda},         {"select", t.select}};
}

TermSpec term_spec_from_json(const json& j) {
  TermSpec t;
  t.kind = term_kind_from_string(j.at("kind").get<std::string>());
  t.covariates = j.value("covariates", std::vector<std::string>{});
  t.dim = j.value("dim", 1);
  t.period = j.value("period", 0.0);
  t.lambda = j.value("lambda", 0.0);
  t.select = j.value("select", false);
  return t;
}

json basis_to_json(const Term::Basis& basis) {
  if (const auto* c = std::get_if<CyclicBasis>(&basis)) {
    return {{"type", "cyclic"}, {"size", c->size()}, {"period", c->period()}};
  }
  if (const auto* tp = std::get_if<ThinPlateBasis>(&basis)) {
    return {{"type", "thinplate"},
            {"rank", tp->k_},
            {"mean_x", tp->mean_x},
            {"sd_x", tp->sd_x},
            {"mean_y", tp->mean_y},
            {"sd_y", tp->sd_y},
            {"knots", matrix_to_json(tp->knots)},
            {"projection", matrix_to_json(tp->projection)},
            {"eigenvalues", vector_to_json(tp->eigenvalues)}};
  }
  return {{"type", "none"}};
}

Term::Basis basis_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "none") return std::monostate{};
  if (type == "cyclic") return CyclicBasis(j.at("size").get<int>(), j.at("period").get<double>());
  if (type == "thinplate") {
    ThinPlateBasis tp;
    tp.k_ = j.at("rank").get<int>();
    tp.mean_x = j.at("mean_x").get<double>();
    tp.sd_x = j.at("sd_x").get<double>();
    tp.mean_y = j.at("mean_y").get<double>();
    tp.sd_y = j.at("sd_y").get<double>();
    tp.knots = matrix_from_json(j.at("knots"), 2);
    tp.projection = matrix_from_json(j.at("projection"), tp.k_ - 3);
    tp.eigenvalues = vector_from_json(j.at("eigenvalues"));
    return tp;
  }
  throw ConfigError("unknown basis type '" + type + "'");
}

}  // namespace

json spec_to_json(const ModelSpec& spec) {
  json params = json::array();
  for (const auto& p : spec.parameters) {
    json terms = json::array();
    for (const auto& t : p.terms) terms.push_back(term_spec_to_json(t));
    params.push_back({{"link", p.link.name()}, {"terms", terms}});
  }
  return {{"name", spec.name}, {"family", spec.family}, {"parameters", params}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.family = j.at("family").get<std::string>();
  for (const auto& p : j.at("parameters")) {
    ParameterSpec ps{{}, LinkFunction::parse(p.at("link").get<std::string>())};
    for (const auto& t : p.at("terms")) ps.terms.push_back(term_spec_from_json(t));
    spec.parameters.push_back(std::move(ps));
  }
  spec.validate();
  return spec;
}

json model_to_json(const FittedModel& fitted) {
  json params = json::array();
  const auto& model = fitted.model;
  for (std::size_t p = 0; p < model.parameters.size(); ++p) {
    const auto& param = model.parameters[p];
    json terms = json::array();
    for (std::size_t k = 0; k < param.terms.size(); ++k) {
      const Term& t = param.terms[k];
      terms.push_back({{"spec", term_spec_to_json(t.spec())},
                       {"basis", basis_to_json(t.basis())},
                       {"constraint", vector_to_json(t.constraint())},
                       {"penalty_scale", t.penalty_scale()},
                       {"coefficients", vector_to_json(fitted.coefficients[p][k])},
                       {"lambda", fitted.lambdas[p][k]},
                       {"edf", fitted.term_edf[p][k]}});
    }
    params.push_back({{"name", param.name},
                      {"link", param.link.name()},
                      {"edf", fitted.parameter_edf[p]},
                      {"terms", terms}});
  }
  json iterations = json::array();
  for (const auto& r : fitted.iterations) {
    iterations.push_back({{"phase", r.phase},
                          {"iteration", r.iteration},
                          {"global_deviance", r.global_deviance},
                          {"penalized_deviance", r.penalized_deviance}});
  }
  return {{"schema", kModelSchema},
          {"name", fitted.name},
          {"family", model.spec.family},
          {"parameters", params},
          {"global_deviance", fitted.global_deviance},
          {"penalized_deviance", fitted.penalized_deviance},
          {"edf_total", fitted.edf_total},
          {"n_train", fitted.n_train},
          {"converged", fitted.converged},
          {"cycles", fitted.cycles},
          {"iterations", iterations},
          {"warnings", fitted.warnings},
          {"covariance", matrix_to_json(fitted.covariance)},
          {"training_fingerprint", fitted.training_fingerprint}};
}

FittedModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema")) throw ConfigError("model file has no schema field");
  const auto schema = j.at("schema").get<std::string>();
  if (schema != kModelSchema) {
    throw ConfigError("unsupported model schema '" + schema + "', expected " + kModelSchema);
  }
  try {
    FittedModel out;
    out.name = j.at("name").get<std::string>();
    RealizedModel& model = out.model;
    model.spec.name = out.name;
    model.spec.family = j.at("family").get<std::string>();
    model.family = make_family(model.spec.family);
    const auto names = model.family->parameter_names();
    const json& params = j.at("parameters");
    if (params.size() != names.size()) throw ConfigError("model file: wrong number of parameters");
    for (std::size_t p = 0; p < params.size(); ++p) {
      const json& pj = params[p];
      ParameterPredictor pred;
      pred.name = names[p];
      pred.link = LinkFunction::parse(pj.at("link").get<std::string>());
      ParameterSpec ps{{}, pred.link};
      std::vector<Eigen::VectorXd> coeffs;
      std::vector<double> lambdas, edf;
      for (const auto& tj : pj.at("terms")) {
        TermSpec ts = term_spec_from_json(tj.at("spec"));
        ps.terms.push_back(ts);
        pred.terms.push_back(Term::restore(ts, basis_from_json(tj.at("basis")),
                                           vector_from_json(tj.at("constraint")),
                                           tj.at("penalty_scale").get<double>()));
        coeffs.push_back(vector_from_json(tj.at("coefficients")));
        if (coeffs.back().size() != pred.terms.back().columns()) {
          throw ConfigError("model file: coefficient length mismatch for " + ts.label());
        }
        lambdas.push_back(tj.at("lambda").get<double>());
        edf.push_back(tj.at("edf").get<double>());
      }
      model.spec.parameters.push_back(std::move(ps));
      model.parameters.push_back(std::move(pred));
      out.coefficients.push_back(std::move(coeffs));
      out.lambdas.push_back(std::move(lambdas));
      out.term_edf.push_back(std::move(edf));
      out.parameter_edf.push_back(pj.at("edf").get<double>());
    }
    model.spec.validate();
    out.global_deviance = j.at("global_deviance").get<double>();
    out.penalized_deviance = j.at("penalized_deviance").get<double>();
    out.edf_total = j.at("edf_total").get<double>();
    out.n_train = j.at("n_train").get<std::size_t>();
    out.converged = j.at("converged").get<bool>();
    out.cycles = j.at("cycles").get<int>();
    for (const auto& r : j.value("iterations", json::array())) {
      out.iterations.push_back({r.at("phase").get<std::string>(), r.at("iteration").get<int>(),
                                r.at("global_deviance").get<double>(),
                                r.at("penalized_deviance").get<double>()});
    }
    out.warnings = j.value("warnings", std::vector<std::string>{});
    out.covariance = matrix_from_json(j.value("covariance", json::array()));
    out.training_fingerprint = j.value("training_fingerprint", std::uint64_t{0});
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const FittedModel& fitted, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file " + path.string());
  out << model_to_json(fitted).dump(1) << '\n';
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace egpd
