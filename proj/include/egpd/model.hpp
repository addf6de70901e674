#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egpd/family.hpp"
#include "egpd/frame.hpp"
#include "egpd/links.hpp"
#include "egpd/smoothers.hpp"

namespace egpd {

struct ParameterSpec {
  std::vector<TermSpec> terms;
  LinkFunction link;
};

// Additive predictor structure for every parameter of a family. Parameters
// are indexed as in Family::parameter_names().
struct ModelSpec {
  std::string name;
  std::string family;
  std::vector<ParameterSpec> parameters;

  // Default links and intercept-only predictors for every parameter.
  static ModelSpec intercept_only(const std::string& family, std::string name = {});
  // ConfigError unless every parameter has exactly one intercept and valid terms.
  void validate() const;
  std::vector<std::string> covariates() const;
};

// Options used by the model-grid constructors.
struct GridOptions {
  std::string time_covariate = "day_of_year";
  double period = 366.0;
  int cyclic_dim = 50;
  std::string lon = "lon";
  std::string lat = "lat";
  int thinplate_dim = 30;
  // Empty: smoothing parameters are selected.
  std::optional<double> lambda;
};

// "M.0", "M.t", "M.tnomu", "M.st", "M.st2mu", "M.st2nomu", "M.st3nomu".
const std::vector<std::string>& grid_variations();
// Builds one grid entry, e.g. ("egpd4", "M.st3nomu"). ConfigError for unknown
// names and for M.st3nomu with anything but egpd4.
ModelSpec make_grid_spec(const std::string& family, const std::string& variation,
                         const GridOptions& options = {});
// "megpd1.0", "mga.tnomu", ...
std::string grid_model_name(const std::string& family, const std::string& variation);

struct FitControl {
  int n_cyc = 200;
  // Per-parameter step sizes, indexed like the family parameters; the last
  // entry is reused when the family has more parameters.
  std::vector<double> step{0.01};
  // Halve the step on a deviance increase; grow it back towards 1 after an
  // accepted update.
  bool autostep = true;
  double tolerance = 1e-4;
  bool select_lambda = true;
  double log10_lambda_min = -8.0;
  double log10_lambda_max = 12.0;
  double curvature_floor = 1e-10;
  int max_rejections = 10;
  // Joint update of all coefficients after the parameter-wise cycles.
  bool joint_phase = true;
  // Starting values on the parameter scale, by parameter name.
  std::map<std::string, double> init;

  double step_for(std::size_t parameter) const;
};

struct ParameterPredictor {
  std::string name;
  LinkFunction link;
  std::vector<Term> terms;

  int columns() const;
  Eigen::MatrixXd design(const ModelFrame& frame) const;
  // Block-diagonal sum of lambda_j G_j.
  Eigen::MatrixXd penalty(const std::vector<double>& lambdas) const;
};

struct RealizedModel {
  ModelSpec spec;
  FamilyPtr family;
  std::vector<ParameterPredictor> parameters;

  std::size_t total_columns() const;
};

RealizedModel realize_model(const ModelSpec& spec, const ModelFrame& training);

// [parameter][term] coefficient vectors and smoothing parameters.
using Coefficients = std::vector<std::vector<Eigen::VectorXd>>;
using Lambdas = std::vector<std::vector<double>>;

struct IterationRecord {
  std::string phase;  // "cycle" or "joint"
  int iteration = 0;
  double global_deviance = 0.0;
  double penalized_deviance = 0.0;
};

struct FittedModel {
  std::string name;
  RealizedModel model;
  Coefficients coefficients;
  Lambdas lambdas;
  std::vector<std::vector<double>> term_edf;
  std::vector<double> parameter_edf;
  double edf_total = 0.0;
  double global_deviance = 0.0;
  double penalized_deviance = 0.0;
  std::size_t n_train = 0;
  bool converged = false;
  int cycles = 0;
  std::vector<IterationRecord> iterations;
  std::vector<std::string> warnings;
  // Posterior covariance of the stacked coefficients (parameter-major).
  Eigen::MatrixXd covariance;
  std::uint64_t training_fingerprint = 0;

  const Family& family() const { return *model.family; }
  std::vector<std::string> parameter_names() const;
};

}  // namespace egpd
