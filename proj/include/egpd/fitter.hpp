#pragma once

// Penalized maximum-likelihood fitting of distributional regression models.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egpd/frame.hpp"
#include "egpd/model.hpp"

namespace egpd {

// l - 1/2 sum lambda_ij b_ij' G_ij b_ij. Throws NumericalError naming the
// first row whose implied parameters are inadmissible.
double penalized_loglik(const ModelFrame& data, const RealizedModel& model,
                        const Coefficients& coeffs, const Lambdas& lambdas);

// Unpenalized log-likelihood for the same inputs.
double loglik(const ModelFrame& data, const RealizedModel& model, const Coefficients& coeffs);

// Fits the model. Throws DataError for empty or non-positive responses,
// FitError on divergence or a rank-deficient penalized system.
FittedModel fit(const ModelFrame& data, const ModelSpec& spec, const FitControl& control = {});

// Smoothing parameters chosen by the BIC search during a full fit. Fixed
// terms keep their values.
Lambdas select_lambda(const ModelFrame& data, const ModelSpec& spec,
                      const FitControl& control = {});

struct EdfSummary {
  std::vector<double> per_parameter;
  std::vector<std::vector<double>> per_term;
  double total = 0.0;
};

EdfSummary effective_df(const FittedModel& fitted);

// Per-row values of every distribution parameter; columns follow names.
struct ParameterTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  std::vector<double> row(Eigen::Index i) const;
  Eigen::VectorXd column(const std::string& name) const;
};

// Linear predictors at the rows of newdata (rows x parameters).
Eigen::MatrixXd predict_predictors(const FittedModel& fitted, const ModelFrame& newdata);
ParameterTable predict_params(const FittedModel& fitted, const ModelFrame& newdata);

// Delta-method standard errors of the fitted parameters. Only the training
// rows are supported; anything else raises UnsupportedError.
ParameterTable standard_errors(const FittedModel& fitted, const ModelFrame& at);

}  // namespace egpd
