#include "egpd/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "egpd/error.hpp"

namespace egpd {

namespace {

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

double gaic(const FittedModel& fitted, double k) {
  if (!(k >= 0.0)) throw DomainError("gaic: k must be >= 0");
  return fitted.global_deviance + k * fitted.edf_total;
}

CriterionReport criterion_report(const FittedModel& fitted) {
  CriterionReport r;
  r.model = fitted.name;
  r.family = fitted.model.spec.family;
  r.gd = fitted.global_deviance;
  r.edf = fitted.edf_total;
  r.n_train = fitted.n_train;
  r.aic = gaic(fitted, 2.0);
  r.bic = gaic(fitted, std::log(static_cast<double>(fitted.n_train)));
  r.converged = fitted.converged;
  return r;
}

double validation_deviance(const FittedModel& fitted, const ModelFrame& newdata) {
  if (newdata.rows() == 0 || !newdata.has_response()) {
    throw DataError("validation deviance needs a nonempty data set with responses");
  }
  const ParameterTable params = predict_params(fitted, newdata);
  const auto y = newdata.response();
  const Family& family = fitted.family();
  double ll = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto theta = params.row(static_cast<Eigen::Index>(i));
    double l = -std::numeric_limits<double>::infinity();
    try {
      l = family.logpdf(y[i], theta);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "validation deviance: row " << i << ": " << e.what();
      throw NumericalError(os.str(), l);
    }
    if (!std::isfinite(l)) {
      std::ostringstream os;
      os << "validation deviance: zero density at row " << i << " (y = " << y[i] << ")";
      throw NumericalError(os.str(), l);
    }
    ll += l;
  }
  return -2.0 * ll;
}

PPData pit_residuals(const FittedModel& fitted, const ModelFrame& data) {
  const ParameterTable params = predict_params(fitted, data);
  const auto y = data.response();
  const Family& family = fitted.family();
  PPData pp;
  pp.empirical.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    pp.empirical[i] = family.cdf(y[i], params.row(static_cast<Eigen::Index>(i)));
  }
  std::stable_sort(pp.empirical.begin(), pp.empirical.end());
  const double n1 = static_cast<double>(y.size()) + 1.0;
  pp.theoretical.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) pp.theoretical[i] = static_cast<double>(i + 1) / n1;
  return pp;
}

PPData restrict_tail(const PPData& pp, double p0) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw DomainError("tail threshold must lie in [0, 1)");
  PPData out;
  out.season = pp.season;
  out.tail_threshold = p0;
  for (std::size_t i = 0; i < pp.size(); ++i) {
    if (pp.theoretical[i] >= p0) {
      out.empirical.push_back(pp.empirical[i]);
      out.theoretical.push_back(pp.theoretical[i]);
    }
  }
  out.empty_tail = out.empirical.empty();
  return out;
}

PPData tail_pp(const FittedModel& fitted, const ModelFrame& data, double p0) {
  return restrict_tail(pit_residuals(fitted, data), p0);
}

int season_of(EpochSeconds t) {
  const int m = month_of(t);
  return (m % 12) / 3;
}

std::array<ObservationTable, 4> seasonal_split(const ObservationTable& table) {
  std::array<ObservationTable, 4> out;
  for (const auto& r : table.rows) out[static_cast<std::size_t>(season_of(r.time))].rows.push_back(r);
  return out;
}

double ks_uniform_statistic(const std::vector<double>& sorted) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double u = std::clamp(sorted[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  if (n == 0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

void write_criteria_csv(const std::vector<CriterionReport>& reports, std::ostream& out) {
  out << "model,family,status,gd,aic,bic,edf,n_train,gd_validation,converged,error\n";
  for (const auto& r : reports) {
    out << r.model << ',' << r.family << ',' << r.status << ',';
    if (r.status == "ok") {
      out << num(r.gd) << ',' << num(r.aic) << ',' << num(r.bic) << ',' << num(r.edf) << ','
          << r.n_train << ',' << (r.gd_validation ? num(*r.gd_validation) : "") << ','
          << (r.converged ? "true" : "false") << ',';
    } else {
      out << ",,,,,,,";
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << err << '\n';
  }
}

void write_pp_csv(const std::vector<PPData>& data, std::ostream& out) {
  out << "empirical,theoretical,season,tail_flag\n";
  for (const auto& pp : data) {
    const std::string season = pp.season.empty() ? "all" : pp.season;
    for (std::size_t i = 0; i < pp.size(); ++i) {
      const bool tail = pp.tail_threshold && pp.theoretical[i] >= *pp.tail_threshold;
      out << num(pp.empirical[i]) << ',' << num(pp.theoretical[i]) << ',' << season << ','
          << (tail ? 1 : 0) << '\n';
    }
  }
}

}  // namespace egpd
