#pragma once

// Response distributions the regression fitter can work with: the EGPD with
// carriers Model1, Model3 and Model4, and a two-parameter Gamma baseline.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "egpd/distribution.hpp"
#include "egpd/links.hpp"

namespace egpd {

class Family {
 public:
  virtual ~Family() = default;

  // "egpd1", "egpd3", "egpd4" or "gamma".
  virtual std::string name() const = 0;
  // Native parameter names, e.g. {"xi", "psi", "kappa1"}.
  virtual std::vector<std::string> parameter_names() const = 0;
  std::size_t size() const { return parameter_names().size(); }
  // Index of a parameter by native name or by its mu/sigma/nu/tau alias;
  // throws ConfigError when unknown.
  std::size_t parameter_index(const std::string& name) const;

  virtual LinkFunction default_link(std::size_t i) const = 0;
  virtual bool admissible(std::span<const double> theta) const = 0;

  virtual double logpdf(double y, std::span<const double> theta) const = 0;
  // Writes d logpdf / d theta into grad and returns logpdf.
  virtual double logpdf_grad(double y, std::span<const double> theta,
                             std::span<double> grad) const = 0;
  virtual double cdf(double y, std::span<const double> theta) const = 0;
  virtual double quantile(double p, std::span<const double> theta) const = 0;

  // Starting values for the intercepts, on the parameter scale.
  virtual std::vector<double> initial_values(std::span<const double> y) const = 0;
};

using FamilyPtr = std::shared_ptr<const Family>;

// Families usable in regression. "egpd2" is rejected: its three carrier
// parameters exceed the four-parameter limit of the predictor layout.
FamilyPtr make_family(const std::string& name);

// Carrier family behind an EGPD family name; ConfigError for "gamma".
CarrierFamily egpd_carrier_of(const std::string& family_name);

// EgpdParams from a (xi, psi, kappa...) vector.
EgpdParams egpd_params_from(CarrierFamily family, std::span<const double> theta);

// Gamma parameterized by mean mu and dispersion sigma: shape 1/sigma^2,
// scale mu sigma^2.
double gamma_logpdf(double y, double mu, double sigma);
double gamma_cdf(double y, double mu, double sigma);
double gamma_quantile(double p, double mu, double sigma);

}  // namespace egpd
