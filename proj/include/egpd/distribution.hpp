#pragma once

// Extended generalized Pareto distribution: F(y) = G(H_xi(y / psi)) where H_xi
// is the generalized Pareto CDF and G a carrier CDF on the unit interval.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace egpd {

// Below this |xi| the exponential limit of the GPD is used.
inline constexpr double kXiZeroTolerance = 1e-8;

// Generalized Pareto CDF H_xi(z), z >= 0.
double gpd_cdf(double z, double xi);
// 1 - H_xi(z) without cancellation.
double gpd_survival(double z, double xi);
// dH_xi/dz; zero beyond the upper endpoint when xi < 0.
double gpd_pdf(double z, double xi);
// H_xi^{-1}(p) for p in [0, 1).
double gpd_inverse(double p, double xi);

enum class CarrierFamily { Model1, Model2, Model3, Model4 };

std::string to_string(CarrierFamily family);
CarrierFamily carrier_family_from_string(const std::string& name);
// Number of kappa parameters the family takes (1, 3, 1, 2).
std::size_t carrier_arity(CarrierFamily family);

// Partial derivatives of log g(u) used by the EGPD score.
struct CarrierLogDensity {
  double log_g = 0.0;
  double dlog_g_du = 0.0;
  std::array<double, 3> dlog_g_dkappa{};
};

// One of the four parametric carrier CDFs G(u; kappa) on [0, 1]:
//   Model1  u^k1
//   Model2  k3 u^k1 + (1 - k3) u^k2          k2 >= k1 > 0, k3 in [0, 1]
//   Model3  1 - Q_k1((1 - u)^k1)             Q_k Beta(1/k, 2) CDF
//   Model4  [1 - Q_k1((1 - u)^k1)]^(k2 / 2)
// Parameters are validated on construction.
class Carrier {
 public:
  Carrier(CarrierFamily family, std::span<const double> kappa);

  static Carrier model1(double k1);
  static Carrier model2(double k1, double k2, double k3);
  static Carrier model3(double k1);
  static Carrier model4(double k1, double k2);

  CarrierFamily family() const noexcept { return family_; }
  std::size_t size() const noexcept { return carrier_arity(family_); }
  std::span<const double> kappa() const noexcept { return {kappa_.data(), size()}; }
  double kappa(std::size_t i) const { return kappa_.at(i); }

  double cdf(double u) const;
  double pdf(double u) const;
  double inverse(double p) const;

  // Variants taking the complement ubar = 1 - u, which callers often know to
  // full relative precision when u is close to one.
  double cdf(double u, double ubar) const;
  double pdf(double u, double ubar) const;
  CarrierLogDensity log_density(double u, double ubar) const;

 private:
  double model3_cdf(double k, double u, double ubar) const;
  double model3_dcdf_dk(double k, double u, double ubar) const;

  CarrierFamily family_;
  std::array<double, 3> kappa_{};
};

// Lower tail F(y) ~ c (y / psi)^s as y -> 0 and upper shape xi.
struct TailProfile {
  double lower_exponent = 0.0;
  double lower_constant = 0.0;
  double upper_shape = 0.0;
};

class EgpdParams {
 public:
  EgpdParams(double xi, double psi, Carrier carrier);

  double xi() const noexcept { return xi_; }
  double psi() const noexcept { return psi_; }
  const Carrier& carrier() const noexcept { return carrier_; }
  // 2 + number of kappa parameters.
  std::size_t size() const noexcept { return 2 + carrier_.size(); }
  // Upper support endpoint; +inf unless xi < 0.
  double upper_endpoint() const noexcept;

 private:
  double xi_;
  double psi_;
  Carrier carrier_;
};

// Gradient of log f over (xi, psi, kappa...).
struct LogDensityGradient {
  double value = 0.0;
  std::array<double, 5> grad{};
  std::size_t size = 0;
};

double egpd_cdf(double y, const EgpdParams& params);
double egpd_pdf(double y, const EgpdParams& params);
double egpd_logpdf(double y, const EgpdParams& params);
double egpd_quantile(double p, const EgpdParams& params);
std::vector<double> egpd_sample(std::size_t n, const EgpdParams& params, std::uint64_t seed);
LogDensityGradient egpd_logpdf_grad(double y, const EgpdParams& params);
TailProfile tail_profile(const EgpdParams& params);

}  // namespace egpd
