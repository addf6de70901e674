#include "egpd/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "egpd/error.hpp"

namespace egpd {

ModelSpec ModelSpec::intercept_only(const std::string& family, std::string name) {
  const FamilyPtr fam = make_family(family);
  ModelSpec spec;
  spec.name = name.empty() ? grid_model_name(family, "M.0") : std::move(name);
  spec.family = family;
  for (std::size_t i = 0; i < fam->size(); ++i) {
    spec.parameters.push_back({{TermSpec::intercept()}, fam->default_link(i)});
  }
  return spec;
}

void ModelSpec::validate() const {
  const FamilyPtr fam = make_family(family);
  if (parameters.size() != fam->size()) {
    std::ostringstream os;
    os << "model " << name << ": family " << family << " has " << fam->size()
       << " parameters, spec lists " << parameters.size();
    throw ConfigError(os.str());
  }
  const auto names = fam->parameter_names();
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    const auto& terms = parameters[i].terms;
    const auto n_int = std::count_if(terms.begin(), terms.end(), [](const TermSpec& t) {
      return t.kind == TermSpec::Kind::Intercept;
    });
    if (n_int != 1) {
      throw ConfigError("model " + name + ": parameter " + names[i] +
                        " needs exactly one intercept term");
    }
    for (const auto& t : terms) t.validate();
  }
}

std::vector<std::string> ModelSpec::covariates() const {
  std::set<std::string> names;
  for (const auto& p : parameters) {
    for (const auto& t : p.terms) names.insert(t.covariates.begin(), t.covariates.end());
  }
  return {names.begin(), names.end()};
}

const std::vector<std::string>& grid_variations() {
  static const std::vector<std::string> v{"M.0",  "M.t",      "M.tnomu",  "M.st",
                                          "M.st2mu", "M.st2nomu", "M.st3nomu"};
  return v;
}

std::string grid_model_name(const std::string& family, const std::string& variation) {
  std::string suffix = variation;
  if (suffix.rfind("M.", 0) == 0) suffix = suffix.substr(2);
  const std::string stem = family == "gamma" ? "ga" : family;
  return "m" + stem + "." + suffix;
}

ModelSpec make_grid_spec(const std::string& family, const std::string& variation,
                         const GridOptions& options) {
  // Smoothed parameters by position (mu, sigma, nu, tau) and whether the
  // spatial surface is included.
  std::set<std::size_t> smoothed;
  bool spatial = false;
  if (variation == "M.0") {
  } else if (variation == "M.t") {
    smoothed = {0, 1, 2, 3};
  } else if (variation == "M.tnomu") {
    smoothed = {1, 2, 3};
  } else if (variation == "M.st") {
    smoothed = {0, 1, 2, 3};
    spatial = true;
  } else if (variation == "M.st2mu") {
    smoothed = {0, 1};
    spatial = true;
  } else if (variation == "M.st2nomu") {
    smoothed = {1, 2};
    spatial = true;
  } else if (variation == "M.st3nomu") {
    if (family != "egpd4") throw ConfigError("M.st3nomu is defined for egpd4 only");
    smoothed = {1, 2, 3};
    spatial = true;
  } else {
    throw ConfigError("unknown model variation '" + variation + "'");
  }

  ModelSpec spec = ModelSpec::intercept_only(family, grid_model_name(family, variation));
  for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
    if (!smoothed.contains(i)) continue;
    auto& terms = spec.parameters[i].terms;
    if (spatial) {
      terms.push_back(
          TermSpec::thin_plate(options.lon, options.lat, options.thinplate_dim, options.lambda));
    }
    terms.push_back(TermSpec::cyclic(options.time_covariate, options.cyclic_dim, options.period,
                                     options.lambda));
  }
  return spec;
}

double FitControl::step_for(std::size_t parameter) const {
  if (step.empty()) return 1.0;
  return step[std::min(parameter, step.size() - 1)];
}

int ParameterPredictor::columns() const {
  int c = 0;
  for (const auto& t : terms) c += t.columns();
  return c;
}

Eigen::MatrixXd ParameterPredictor::design(const ModelFrame& frame) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(frame.rows()), columns());
  Eigen::Index col = 0;
  for (const auto& t : terms) {
    X.middleCols(col, t.columns()) = t.design(frame);
    col += t.columns();
  }
  return X;
}

Eigen::MatrixXd ParameterPredictor::penalty(const std::vector<double>& lambdas) const {
  const int p = columns();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const int c = terms[j].columns();
    if (terms[j].spec().kind != TermSpec::Kind::Intercept) {
      S.block(col, col, c, c) = lambdas.at(j) * terms[j].penalty();
    }
    col += c;
  }
  return S;
}

std::size_t RealizedModel::total_columns() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += static_cast<std::size_t>(p.columns());
  return n;
}

RealizedModel realize_model(const ModelSpec& spec, const ModelFrame& training) {
  spec.validate();
  RealizedModel m;
  m.spec = spec;
  m.family = make_family(spec.family);
  const auto names = m.family->parameter_names();
  for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
    ParameterPredictor p;
    p.name = names[i];
    p.link = spec.parameters[i].link;
    for (const auto& ts : spec.parameters[i].terms) p.terms.push_back(Term::realize(ts, training));
    m.parameters.push_back(std::move(p));
  }
  return m;
}

std::vector<std::string> FittedModel::parameter_names() const {
  return model.family->parameter_names();
}

}  // namespace egpd
