#include "egpd/family.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "egpd/error.hpp"

namespace egpd {

namespace {

constexpr std::array<const char*, 4> kAliases{"mu", "sigma", "nu", "tau"};

class EgpdFamily final : public Family {
 public:
  explicit EgpdFamily(CarrierFamily carrier) : carrier_(carrier) {}

  std::string name() const override {
    switch (carrier_) {
      case CarrierFamily::Model1: return "egpd1";
      case CarrierFamily::Model2: return "egpd2";
      case CarrierFamily::Model3: return "egpd3";
      case CarrierFamily::Model4: return "egpd4";
    }
    return "egpd";
  }

  std::vector<std::string> parameter_names() const override {
    std::vector<std::string> names{"xi", "psi"};
    for (std::size_t j = 0; j < carrier_arity(carrier_); ++j) {
      names.push_back("kappa" + std::to_string(j + 1));
    }
    return names;
  }

  // xi is kept positive for rainfall data.
  LinkFunction default_link(std::size_t) const override { return LinkFunction::log(); }

  bool admissible(std::span<const double> theta) const override {
    try {
      egpd_params_from(carrier_, theta);
      return true;
    } catch (const ParameterError&) {
      return false;
    }
  }

  double logpdf(double y, std::span<const double> theta) const override {
    return egpd_logpdf(y, egpd_params_from(carrier_, theta));
  }

  double logpdf_grad(double y, std::span<const double> theta,
                     std::span<double> grad) const override {
    const LogDensityGradient g = egpd_logpdf_grad(y, egpd_params_from(carrier_, theta));
    std::copy_n(g.grad.begin(), g.size, grad.begin());
    return g.value;
  }

  double cdf(double y, std::span<const double> theta) const override {
    return egpd_cdf(y, egpd_params_from(carrier_, theta));
  }

  double quantile(double p, std::span<const double> theta) const override {
    return egpd_quantile(p, egpd_params_from(carrier_, theta));
  }

  std::vector<double> initial_values(std::span<const double> y) const override {
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    std::vector<double> theta{0.1, mean};
    theta.resize(2 + carrier_arity(carrier_), 1.0);
    return theta;
  }

 private:
  CarrierFamily carrier_;
};

class GammaFamily final : public Family {
 public:
  std::string name() const override { return "gamma"; }
  std::vector<std::string> parameter_names() const override { return {"mu", "sigma"}; }
  LinkFunction default_link(std::size_t) const override { return LinkFunction::log(); }

  bool admissible(std::span<const double> theta) const override {
    return theta.size() == 2 && theta[0] > 0.0 && theta[1] > 0.0 && std::isfinite(theta[0]) &&
           std::isfinite(theta[1]);
  }

  double logpdf(double y, std::span<const double> theta) const override {
    check(theta);
    return gamma_logpdf(y, theta[0], theta[1]);
  }

  double logpdf_grad(double y, std::span<const double> theta,
                     std::span<double> grad) const override {
    check(theta);
    const double mu = theta[0], sigma = theta[1];
    const double shape = 1.0 / (sigma * sigma);
    const double scale = mu * sigma * sigma;
    grad[0] = (y - mu) / (mu * mu * sigma * sigma);
    const double dl_dshape = std::log(y) - std::log(scale) - boost::math::digamma(shape);
    const double dl_dscale = y / (scale * scale) - shape / scale;
    grad[1] = dl_dshape * (-2.0 / (sigma * sigma * sigma)) + dl_dscale * (2.0 * mu * sigma);
    return gamma_logpdf(y, mu, sigma);
  }

  double cdf(double y, std::span<const double> theta) const override {
    check(theta);
    return gamma_cdf(y, theta[0], theta[1]);
  }

  double quantile(double p, std::span<const double> theta) const override {
    check(theta);
    return gamma_quantile(p, theta[0], theta[1]);
  }

  std::vector<double> initial_values(std::span<const double> y) const override {
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : mean;
    return {mean, std::max(sd / mean, 1e-3)};
  }

 private:
  void check(std::span<const double> theta) const {
    if (!admissible(theta)) throw ParameterError("gamma: mu and sigma must be positive");
  }
};

}  // namespace

std::size_t Family::parameter_index(const std::string& name) const {
  const auto names = parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  for (std::size_t i = 0; i < names.size() && i < kAliases.size(); ++i) {
    if (name == kAliases[i]) return i;
  }
  throw ConfigError("family " + this->name() + " has no parameter '" + name + "'");
}

CarrierFamily egpd_carrier_of(const std::string& family_name) {
  if (family_name == "egpd1") return CarrierFamily::Model1;
  if (family_name == "egpd2") return CarrierFamily::Model2;
  if (family_name == "egpd3") return CarrierFamily::Model3;
  if (family_name == "egpd4") return CarrierFamily::Model4;
  throw ConfigError("'" + family_name + "' is not an EGPD family");
}

FamilyPtr make_family(const std::string& name) {
  if (name == "gamma") return std::make_shared<GammaFamily>();
  const CarrierFamily carrier = egpd_carrier_of(name);
  if (carrier == CarrierFamily::Model2) {
    throw ConfigError("egpd2 is available for iid use only; regression supports egpd1, egpd3, egpd4");
  }
  return std::make_shared<EgpdFamily>(carrier);
}

EgpdParams egpd_params_from(CarrierFamily family, std::span<const double> theta) {
  if (theta.size() != 2 + carrier_arity(family)) {
    throw ParameterError("parameter vector has the wrong length for " + to_string(family));
  }
  return EgpdParams(theta[0], theta[1], Carrier(family, theta.subspan(2)));
}

double gamma_logpdf(double y, double mu, double sigma) {
  if (!(y > 0.0)) throw DomainError("gamma_logpdf: y must be > 0");
  const double shape = 1.0 / (sigma * sigma);
  const double scale = mu * sigma * sigma;
  return (shape - 1.0) * std::log(y) - y / scale - shape * std::log(scale) - std::lgamma(shape);
}

double gamma_cdf(double y, double mu, double sigma) {
  if (!(y > 0.0)) throw DomainError("gamma_cdf: y must be > 0");
  const double shape = 1.0 / (sigma * sigma);
  return boost::math::gamma_p(shape, y / (mu * sigma * sigma));
}

double gamma_quantile(double p, double mu, double sigma) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("gamma_quantile: p must lie in (0, 1)");
  const double shape = 1.0 / (sigma * sigma);
  return boost::math::gamma_p_inv(shape, p) * mu * sigma * sigma;
}

}  // namespace egpd
