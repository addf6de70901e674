#include "egpd/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "egpd/error.hpp"
#include "egpd/random.hpp"

namespace egpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

bool xi_is_zero(double xi) { return std::fabs(xi) < kXiZeroTolerance; }

void require_nonnegative(double z, const char* fn) {
  if (!(z >= 0.0)) {
    std::ostringstream os;
    os << fn << ": argument must be >= 0, got " << z;
    throw DomainError(os.str());
  }
}

// log(1 - u) given both u and its complement.
double log_complement(double u, double ubar) {
  return u < 0.5 ? std::log1p(-u) : std::log(ubar);
}

double log_value(double u, double ubar) {
  return u < 0.5 ? std::log(u) : std::log1p(-ubar);
}

// d/dxi of -log(1 + xi z) / xi, i.e. log(t)/xi^2 - z/(xi t). Around w = xi z = 0
// the series z^2 sum_{k>=2} (-1)^k (k-1)/k w^(k-2) avoids the cancellation.
double survival_exponent_dxi(double xi, double z) {
  const double w = xi * z;
  if (std::fabs(w) < 0.05) {
    double sum = 0.0;
    double wp = 1.0;
    for (int k = 2; k < 30; ++k) {
      const double term = ((k % 2 == 0) ? 1.0 : -1.0) * (k - 1.0) / k * wp;
      sum += term;
      if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
      wp *= w;
    }
    return z * z * sum;
  }
  const double t = 1.0 + w;
  return std::log1p(w) / (xi * xi) - z / (xi * t);
}

std::string kappa_message(CarrierFamily family, std::span<const double> kappa) {
  std::ostringstream os;
  os << "inadmissible kappa for " << to_string(family) << ": (";
  for (std::size_t i = 0; i < kappa.size(); ++i) os << (i ? ", " : "") << kappa[i];
  os << ")";
  return os.str();
}

}  // namespace

double gpd_survival(double z, double xi) {
  require_nonnegative(z, "gpd_survival");
  if (xi_is_zero(xi)) return std::exp(-z);
  if (xi < 0.0 && z >= -1.0 / xi) return 0.0;
  return std::exp(-std::log1p(xi * z) / xi);
}

double gpd_cdf(double z, double xi) {
  require_nonnegative(z, "gpd_cdf");
  if (xi_is_zero(xi)) return -std::expm1(-z);
  if (xi < 0.0 && z >= -1.0 / xi) return 1.0;
  return -std::expm1(-std::log1p(xi * z) / xi);
}

double gpd_pdf(double z, double xi) {
  require_nonnegative(z, "gpd_pdf");
  if (xi_is_zero(xi)) return std::exp(-z);
  if (xi < 0.0 && z >= -1.0 / xi) return 0.0;
  return std::exp(-(1.0 / xi + 1.0) * std::log1p(xi * z));
}

double gpd_inverse(double p, double xi) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "gpd_inverse: probability outside [0, 1]: " << p;
    throw DomainError(os.str());
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) {
    if (xi < 0.0 && !xi_is_zero(xi)) return -1.0 / xi;
    throw NumericalError("gpd_inverse: quantile at p = 1 is infinite for xi >= 0", kInf);
  }
  if (xi_is_zero(xi)) return -std::log1p(-p);
  return std::expm1(-xi * std::log1p(-p)) / xi;
}

std::string to_string(CarrierFamily family) {
  switch (family) {
    case CarrierFamily::Model1: return "Model1";
    case CarrierFamily::Model2: return "Model2";
    case CarrierFamily::Model3: return "Model3";
    case CarrierFamily::Model4: return "Model4";
  }
  return "unknown";
}

CarrierFamily carrier_family_from_string(const std::string& name) {
  if (name == "Model1" || name == "model1" || name == "1") return CarrierFamily::Model1;
  if (name == "Model2" || name == "model2" || name == "2") return CarrierFamily::Model2;
  if (name == "Model3" || name == "model3" || name == "3") return CarrierFamily::Model3;
  if (name == "Model4" || name == "model4" || name == "4") return CarrierFamily::Model4;
  throw ConfigError("unknown carrier family '" + name + "'");
}

std::size_t carrier_arity(CarrierFamily family) {
  switch (family) {
    case CarrierFamily::Model1: return 1;
    case CarrierFamily::Model2: return 3;
    case CarrierFamily::Model3: return 1;
    case CarrierFamily::Model4: return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Carrier

Carrier::Carrier(CarrierFamily family, std::span<const double> kappa) : family_(family) {
  if (kappa.size() != carrier_arity(family)) {
    std::ostringstream os;
    os << to_string(family) << " takes " << carrier_arity(family) << " kappa parameter(s), got "
       << kappa.size();
    throw ParameterError(os.str());
  }
  std::copy(kappa.begin(), kappa.end(), kappa_.begin());
  for (double k : kappa) {
    if (!std::isfinite(k)) throw ParameterError(kappa_message(family, kappa));
  }
  bool ok = true;
  switch (family) {
    case CarrierFamily::Model1:
    case CarrierFamily::Model3: ok = kappa_[0] > 0.0; break;
    case CarrierFamily::Model2:
      ok = kappa_[0] > 0.0 && kappa_[1] >= kappa_[0] && kappa_[2] >= 0.0 && kappa_[2] <= 1.0;
      break;
    case CarrierFamily::Model4: ok = kappa_[0] > 0.0 && kappa_[1] > 0.0; break;
  }
  if (!ok) throw ParameterError(kappa_message(family, kappa));
}

Carrier Carrier::model1(double k1) {
  const std::array<double, 1> k{k1};
  return Carrier(CarrierFamily::Model1, k);
}
Carrier Carrier::model2(double k1, double k2, double k3) {
  const std::array<double, 3> k{k1, k2, k3};
  return Carrier(CarrierFamily::Model2, k);
}
Carrier Carrier::model3(double k1) {
  const std::array<double, 1> k{k1};
  return Carrier(CarrierFamily::Model3, k);
}
Carrier Carrier::model4(double k1, double k2) {
  const std::array<double, 2> k{k1, k2};
  return Carrier(CarrierFamily::Model4, k);
}

// G3(u) = 1 - (1 + 1/k)(1 - u) + (1 - u)^(k+1) / k. Near u = 0 the leading
// terms cancel, so there the power series
//   G3(u) = (1 + 1/k) sum_{j>=2} (-1)^j C(k, j-1) u^j / j
// is summed instead.
double Carrier::model3_cdf(double k, double u, double ubar) const {
  if (u <= 0.0) return 0.0;
  if (ubar <= 0.0) return 1.0;
  if (u * std::max(1.0, k) < 0.05) {
    double coef = 1.0;  // C(k, m)
    double upow = u;
    double sum = 0.0;
    for (int j = 2; j < 60; ++j) {
      const int m = j - 1;
      coef *= (k - m + 1.0) / m;
      upow *= u;
      const double term = ((j % 2 == 0) ? 1.0 : -1.0) * coef * upow / j;
      sum += term;
      if (std::fabs(term) <= 1e-17 * std::fabs(sum)) break;
    }
    return (1.0 + 1.0 / k) * sum;
  }
  const double lu = log_complement(u, ubar);
  const double g = 1.0 - (1.0 + 1.0 / k) * ubar + std::exp((k + 1.0) * lu) / k;
  return std::clamp(g, 0.0, 1.0);
}

double Carrier::model3_dcdf_dk(double k, double u, double ubar) const {
  if (u <= 0.0 || ubar <= 0.0) return 0.0;
  if (u * std::max(1.0, k) < 0.05) {
    double coef = 1.0;
    double dcoef = 0.0;
    double upow = u;
    double sum = 0.0;
    double dsum = 0.0;
    for (int j = 2; j < 60; ++j) {
      const int m = j - 1;
      dcoef = (dcoef * (k - m + 1.0) + coef) / m;
      coef *= (k - m + 1.0) / m;
      upow *= u;
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      sum += sign * coef * upow / j;
      const double dterm = sign * dcoef * upow / j;
      dsum += dterm;
      if (std::fabs(dterm) <= 1e-17 * std::fabs(dsum) && j > 3) break;
    }
    return -sum / (k * k) + (1.0 + 1.0 / k) * dsum;
  }
  const double lu = log_complement(u, ubar);
  const double p = std::exp((k + 1.0) * lu);
  return ubar / (k * k) + p * lu / k - p / (k * k);
}

double Carrier::cdf(double u) const { return cdf(u, 1.0 - u); }
double Carrier::pdf(double u) const { return pdf(u, 1.0 - u); }

double Carrier::cdf(double u, double ubar) const {
  if (!(u >= 0.0 && u <= 1.0)) {
    std::ostringstream os;
    os << "carrier_cdf: u outside [0, 1]: " << u;
    throw DomainError(os.str());
  }
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  const double lu = log_value(u, ubar);
  switch (family_) {
    case CarrierFamily::Model1: return std::exp(kappa_[0] * lu);
    case CarrierFamily::Model2:
      return kappa_[2] * std::exp(kappa_[0] * lu) + (1.0 - kappa_[2]) * std::exp(kappa_[1] * lu);
    case CarrierFamily::Model3: return model3_cdf(kappa_[0], u, ubar);
    case CarrierFamily::Model4: return std::pow(model3_cdf(kappa_[0], u, ubar), 0.5 * kappa_[1]);
  }
  return 0.0;
}

double Carrier::pdf(double u, double ubar) const {
  if (!(u >= 0.0 && u <= 1.0)) {
    std::ostringstream os;
    os << "carrier_pdf: u outside [0, 1]: " << u;
    throw DomainError(os.str());
  }
  return std::exp(log_density(u, ubar).log_g);
}

CarrierLogDensity Carrier::log_density(double u, double ubar) const {
  CarrierLogDensity out;
  const double lu = log_value(u, ubar);
  switch (family_) {
    case CarrierFamily::Model1: {
      const double k = kappa_[0];
      out.log_g = std::log(k) + (k - 1.0) * lu;
      out.dlog_g_du = (k - 1.0) / u;
      out.dlog_g_dkappa[0] = 1.0 / k + lu;
      break;
    }
    case CarrierFamily::Model2: {
      const double k1 = kappa_[0], k2 = kappa_[1], k3 = kappa_[2];
      // g = a + b with a = k3 k1 u^(k1-1), b = (1-k3) k2 u^(k2-1), combined in log space.
      const double la = k3 > 0.0 ? std::log(k3 * k1) + (k1 - 1.0) * lu : -kInf;
      const double lb = k3 < 1.0 ? std::log((1.0 - k3) * k2) + (k2 - 1.0) * lu : -kInf;
      const double hi = std::max(la, lb);
      out.log_g = hi + std::log(std::exp(la - hi) + std::exp(lb - hi));
      const double wa = std::exp(la - out.log_g);
      const double wb = std::exp(lb - out.log_g);
      out.dlog_g_du = (wa * (k1 - 1.0) + wb * (k2 - 1.0)) / u;
      out.dlog_g_dkappa[0] = wa * (1.0 / k1 + lu);
      out.dlog_g_dkappa[1] = wb * (1.0 / k2 + lu);
      out.dlog_g_dkappa[2] = std::exp(std::log(k1) + (k1 - 1.0) * lu - out.log_g) -
                             std::exp(std::log(k2) + (k2 - 1.0) * lu - out.log_g);
      break;
    }
    case CarrierFamily::Model3:
    case CarrierFamily::Model4: {
      // g3 = (1 + 1/k) B, B = 1 - (1-u)^k.
      const double k = kappa_[0];
      const double lc = log_complement(u, ubar);
      const double b = -std::expm1(k * lc);
      const double log_g3 = std::log1p(1.0 / k) + std::log(b);
      const double dlog_g3_du = k * std::exp((k - 1.0) * lc) / b;
      const double db_dk = ubar > 0.0 ? -std::exp(k * lc) * lc : 0.0;
      const double dlog_g3_dk = -1.0 / (k * (k + 1.0)) + db_dk / b;
      if (family_ == CarrierFamily::Model3) {
        out.log_g = log_g3;
        out.dlog_g_du = dlog_g3_du;
        out.dlog_g_dkappa[0] = dlog_g3_dk;
        break;
      }
      // g4 = (k2/2) G3^(k2/2 - 1) g3
      const double half = 0.5 * kappa_[1];
      const double g3_cdf = model3_cdf(k, u, ubar);
      const double log_G3 = std::log(g3_cdf);
      out.log_g = std::log(half) + (half - 1.0) * log_G3 + log_g3;
      out.dlog_g_du = (half - 1.0) * std::exp(log_g3 - log_G3) + dlog_g3_du;
      out.dlog_g_dkappa[0] = (half - 1.0) * model3_dcdf_dk(k, u, ubar) / g3_cdf + dlog_g3_dk;
      out.dlog_g_dkappa[1] = 1.0 / kappa_[1] + 0.5 * log_G3;
      break;
    }
  }
  return out;
}

// Bracketed Newton iteration on [0, 1]; a Newton step that leaves the bracket
// is replaced by bisection.
double Carrier::inverse(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "carrier_inverse: probability outside [0, 1]: " << p;
    throw DomainError(os.str());
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  if (family_ == CarrierFamily::Model1) return std::pow(p, 1.0 / kappa_[0]);

  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-12;
  // Iterate well past kTol while Newton still makes progress.
  const double target = 1e-14 * std::min(p, 1.0 - p);
  double lo = 0.0, hi = 1.0;
  double u = p;
  double resid = kInf;
  for (int it = 0; it < kMaxIter; ++it) {
    resid = cdf(u, 1.0 - u) - p;
    if (std::fabs(resid) <= target) return u;
    if (resid < 0.0) {
      lo = u;
    } else {
      hi = u;
    }
    if (hi - lo <= 4.0 * kEps * hi) return u;
    const double g = std::exp(log_density(u, 1.0 - u).log_g);
    double next = u - resid / g;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
  }
  if (std::fabs(resid) <= kTol) return u;
  throw NumericalError("carrier_inverse: root finding did not converge", resid);
}

// ---------------------------------------------------------------------------
// EGPD

EgpdParams::EgpdParams(double xi, double psi, Carrier carrier)
    : xi_(xi), psi_(psi), carrier_(carrier) {
  if (!std::isfinite(xi)) throw ParameterError("xi must be finite");
  if (!(psi > 0.0) || !std::isfinite(psi)) {
    std::ostringstream os;
    os << "psi must be positive and finite, got " << psi;
    throw ParameterError(os.str());
  }
}

double EgpdParams::upper_endpoint() const noexcept {
  if (xi_ < 0.0 && !xi_is_zero(xi_)) return -psi_ / xi_;
  return kInf;
}

namespace {

void require_positive(double y, const char* fn) {
  if (!(y > 0.0)) {
    std::ostringstream os;
    os << fn << ": y must be > 0, got " << y;
    throw DomainError(os.str());
  }
}

}  // namespace

double egpd_cdf(double y, const EgpdParams& params) {
  require_positive(y, "egpd_cdf");
  const double z = y / params.psi();
  return params.carrier().cdf(gpd_cdf(z, params.xi()), gpd_survival(z, params.xi()));
}

double egpd_logpdf(double y, const EgpdParams& params) {
  require_positive(y, "egpd_logpdf");
  const double xi = params.xi();
  const double z = y / params.psi();
  if (y >= params.upper_endpoint()) return -kInf;
  double log_h;
  if (xi_is_zero(xi)) {
    log_h = -z;
  } else {
    log_h = -(1.0 / xi + 1.0) * std::log1p(xi * z);
  }
  const double u = gpd_cdf(z, xi);
  const double ubar = gpd_survival(z, xi);
  return params.carrier().log_density(u, ubar).log_g + log_h - std::log(params.psi());
}

double egpd_pdf(double y, const EgpdParams& params) {
  require_positive(y, "egpd_pdf");
  if (y >= params.upper_endpoint()) return 0.0;
  return std::exp(egpd_logpdf(y, params));
}

double egpd_quantile(double p, const EgpdParams& params) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream os;
    os << "egpd_quantile: probability must lie in (0, 1), got " << p;
    throw DomainError(os.str());
  }
  const double u = params.carrier().inverse(p);
  return params.psi() * gpd_inverse(u, params.xi());
}

std::vector<double> egpd_sample(std::size_t n, const EgpdParams& params, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& y : out) y = egpd_quantile(uniform_open01(rng), params);
  return out;
}

LogDensityGradient egpd_logpdf_grad(double y, const EgpdParams& params) {
  require_positive(y, "egpd_logpdf_grad");
  const double xi = params.xi();
  const double psi = params.psi();
  const double z = y / psi;

  double log_h, survival, u, a, dlogh_dxi, dlogh_dz;
  if (xi_is_zero(xi)) {
    log_h = -z;
    survival = std::exp(-z);
    u = -std::expm1(-z);
    a = 0.5 * z * z;
    dlogh_dxi = a - z;
    dlogh_dz = -1.0;
  } else {
    const double t = 1.0 + xi * z;
    if (t <= 1e-10) {
      std::ostringstream os;
      os << "egpd_logpdf_grad: y = " << y << " at or beyond the support endpoint "
         << params.upper_endpoint();
      throw NumericalError(os.str(), t);
    }
    const double log_t = std::log1p(xi * z);
    log_h = -(1.0 / xi + 1.0) * log_t;
    survival = std::exp(-log_t / xi);
    u = -std::expm1(-log_t / xi);
    a = survival_exponent_dxi(xi, z);
    dlogh_dxi = a - z / t;
    dlogh_dz = -(1.0 + xi) / t;
  }
  const double h = std::exp(log_h);
  const CarrierLogDensity cl = params.carrier().log_density(u, survival);

  LogDensityGradient out;
  out.size = params.size();
  out.value = cl.log_g + log_h - std::log(psi);
  out.grad[0] = cl.dlog_g_du * (-survival * a) + dlogh_dxi;
  out.grad[1] = (cl.dlog_g_du * h + dlogh_dz) * (-z / psi) - 1.0 / psi;
  for (std::size_t j = 0; j < params.carrier().size(); ++j) out.grad[2 + j] = cl.dlog_g_dkappa[j];
  return out;
}

TailProfile tail_profile(const EgpdParams& params) {
  const Carrier& c = params.carrier();
  TailProfile tp;
  tp.upper_shape = params.xi();
  switch (c.family()) {
    case CarrierFamily::Model1:
      tp.lower_exponent = c.kappa(0);
      tp.lower_constant = 1.0;
      break;
    case CarrierFamily::Model2:
      if (c.kappa(2) > 0.0 && c.kappa(0) < c.kappa(1)) {
        tp.lower_exponent = c.kappa(0);
        tp.lower_constant = c.kappa(2);
      } else {
        tp.lower_exponent = c.kappa(c.kappa(2) > 0.0 ? 0 : 1);
        tp.lower_constant = 1.0;
      }
      break;
    case CarrierFamily::Model3:
      // G3(u) = (1 + k) u^2 / 2 + O(u^3)
      tp.lower_exponent = 2.0;
      tp.lower_constant = 0.5 * (1.0 + c.kappa(0));
      break;
    case CarrierFamily::Model4:
      tp.lower_exponent = c.kappa(1);
      tp.lower_constant = std::pow(0.5 * (1.0 + c.kappa(0)), 0.5 * c.kappa(1));
      break;
  }
  return tp;
}

}  // namespace egpd
