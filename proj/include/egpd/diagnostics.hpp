#pragma once

// Model comparison criteria, validation deviance and probability integral
// transform (P-P) diagnostics.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "egpd/data.hpp"
#include "egpd/fitter.hpp"

namespace egpd {

struct CriterionReport {
  std::string model;
  std::string family;
  double gd = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double edf = 0.0;
  std::size_t n_train = 0;
  std::optional<double> gd_validation;
  bool converged = false;
  std::string status = "ok";  // "ok" or "failed"
  std::string error;
};

// GD + k * edf_total.
double gaic(const FittedModel& fitted, double k);
CriterionReport criterion_report(const FittedModel& fitted);

// -2 sum log f(y; predicted parameters) over newdata. DataError when empty,
// NumericalError naming the first row with an invalid density.
double validation_deviance(const FittedModel& fitted, const ModelFrame& newdata);

struct PPData {
  std::vector<double> empirical;    // sorted PIT values
  std::vector<double> theoretical;  // i / (n + 1) at the global rank i
  std::string season;               // empty when not split
  std::optional<double> tail_threshold;
  bool empty_tail = false;

  std::size_t size() const { return empirical.size(); }
};

PPData pit_residuals(const FittedModel& fitted, const ModelFrame& data);
// Points of the full P-P data whose reference probability is >= p0.
PPData tail_pp(const FittedModel& fitted, const ModelFrame& data, double p0);
PPData restrict_tail(const PPData& pp, double p0);

inline const std::array<std::string, 4> kSeasons{"winter", "spring", "summer", "autumn"};
// December-February, March-May, June-August, September-November.
int season_of(EpochSeconds t);
std::array<ObservationTable, 4> seasonal_split(const ObservationTable& table);

// Kolmogorov-Smirnov distance between sorted values and the uniform law.
double ks_uniform_statistic(const std::vector<double>& sorted);
// Asymptotic p-value of a KS distance from n points.
double ks_pvalue(double d, std::size_t n);

void write_criteria_csv(const std::vector<CriterionReport>& reports, std::ostream& out);
void write_pp_csv(const std::vector<PPData>& data, std::ostream& out);

}  // namespace egpd
