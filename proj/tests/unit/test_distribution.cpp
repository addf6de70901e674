#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "egpd/distribution.hpp"
#include "egpd/error.hpp"
#include "oracles.hpp"

using namespace egpd;

namespace {

std::vector<Carrier> carrier_grid() {
  std::vector<Carrier> out;
  for (double k : {0.3, 0.8, 1.0, 2.0, 5.0}) {
    out.push_back(Carrier::model1(k));
    out.push_back(Carrier::model3(k));
    out.push_back(Carrier::model4(k, 0.5 + k));
  }
  out.push_back(Carrier::model2(0.5, 2.0, 0.3));
  out.push_back(Carrier::model2(1.0, 1.0, 1.0));
  out.push_back(Carrier::model2(0.8, 4.0, 0.0));
  out.push_back(Carrier::model2(2.0, 3.0, 0.7));
  return out;
}

double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

}  // namespace

TEST_CASE("gpd_cdf closed forms") {
  CHECK(gpd_cdf(1.0, 0.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  CHECK(gpd_cdf(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gpd_cdf(4.0, -0.5) == 1.0);
  CHECK(gpd_cdf(2.0, -0.5) == 1.0);
  CHECK_THROWS_AS(gpd_cdf(-0.1, 0.2), DomainError);
}

TEST_CASE("gpd_inverse") {
  CHECK(gpd_inverse(0.5, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(gpd_inverse(0.0, 0.3) == 0.0);
  CHECK(gpd_inverse(0.0, -0.3) == 0.0);
  CHECK(gpd_inverse(0.75, 1.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(gpd_inverse(1.0, 0.0), NumericalError);
  CHECK_THROWS_AS(gpd_inverse(1.0, 0.5), NumericalError);
  for (double xi : {-0.4, -0.1, 0.0, 1e-9, 0.2, 1.5})
    for (double p = 0.01; p < 1.0; p += 0.049)
      CHECK(std::abs(gpd_cdf(gpd_inverse(p, xi), xi) - p) < 1e-12);
}

TEST_CASE("carrier_cdf examples and errors") {
  CHECK(Carrier::model1(2.0).cdf(0.25) == doctest::Approx(0.0625).epsilon(1e-14));
  const Carrier m3 = Carrier::model3(1.0);
  for (double u : {0.0, 0.1, 0.37, 0.8, 1.0}) CHECK(m3.cdf(u) == doctest::Approx(u * u).epsilon(1e-13));
  CHECK(Carrier::model4(1.0, 2.0).cdf(0.5) == doctest::Approx(0.25).epsilon(1e-13));

  CHECK_THROWS_AS(Carrier::model1(0.0), ParameterError);
  CHECK_THROWS_AS(Carrier::model1(-1.0), ParameterError);
  CHECK_THROWS_AS(Carrier::model3(0.0), ParameterError);
  CHECK_THROWS_AS(Carrier::model4(1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(Carrier::model2(2.0, 1.0, 0.5), ParameterError);
  CHECK_THROWS_AS(Carrier::model2(1.0, 2.0, 1.5), ParameterError);
  CHECK_THROWS_AS(EgpdParams(0.1, 0.0, Carrier::model1(1.0)), ParameterError);
}

TEST_CASE("carrier_pdf examples") {
  CHECK(Carrier::model1(2.0).pdf(0.5) == doctest::Approx(1.0).epsilon(1e-14));
  for (double u : {0.1, 0.5, 0.9}) CHECK(Carrier::model1(1.0).pdf(u) == doctest::Approx(1.0));
  CHECK(Carrier::model3(1.0).pdf(0.3) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("carrier_pdf matches finite differences of carrier_cdf") {
  for (const Carrier& c : carrier_grid()) {
    for (double u = 0.01; u <= 0.99; u += 0.0245) {
      const double h = 1e-5 * std::min(u, 1.0 - u);
      const double fd = (c.cdf(u + h) - c.cdf(u - h)) / (2 * h);
      INFO(to_string(c.family()) << " k1=" << c.kappa(0) << " u=" << u);
      CHECK(rel_err(c.pdf(u), fd, 1e-12) < 1e-6);
    }
  }
}

TEST_CASE("carrier_inverse") {
  CHECK(Carrier::model1(2.0).inverse(0.0625) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(Carrier::model3(1.0).inverse(0.49) == doctest::Approx(0.7).epsilon(1e-10));
  const Carrier m4 = Carrier::model4(0.8, 3.0);
  const double ref = oracle::bisect([&](double u) { return m4.cdf(u); }, 0.0, 1.0, 0.5);
  CHECK(std::abs(m4.inverse(0.5) - ref) < 1e-10);
  CHECK(std::abs(m4.cdf(m4.inverse(0.5)) - 0.5) < 1e-10);
}

TEST_CASE("carrier monotone with exact endpoints and inverse to 1e-10") {
  for (const Carrier& c : carrier_grid()) {
    INFO(to_string(c.family()) << " k1=" << c.kappa(0));
    CHECK(c.cdf(0.0) == 0.0);
    CHECK(c.cdf(1.0) == 1.0);
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double u = i / 1000.0;
      const double g = c.cdf(u);
      CHECK(g >= prev);
      prev = g;
    }
    CHECK(c.inverse(0.0) == 0.0);
    CHECK(c.inverse(1.0) == 1.0);
    for (double p = 0.001; p < 1.0; p += 0.0137) CHECK(std::abs(c.cdf(c.inverse(p)) - p) < 1e-10);
  }
}

TEST_CASE("egpd_cdf examples") {
  const double e = std::exp(-1.0);
  CHECK(egpd_cdf(1.0, EgpdParams(0.0, 1.0, Carrier::model1(1.0))) == doctest::Approx(1.0 - e).epsilon(1e-14));
  CHECK(egpd_cdf(1.0, EgpdParams(0.0, 1.0, Carrier::model1(2.0))) ==
        doctest::Approx(0.39957640089).epsilon(1e-10));
  const double h = oracle::gpd_cdf(2.0, 0.2);
  CHECK(egpd_cdf(3.0, EgpdParams(0.2, 1.5, Carrier::model4(1.0, 2.0))) == doctest::Approx(h * h).epsilon(1e-12));
  CHECK_THROWS_AS(egpd_cdf(0.0, EgpdParams(0.1, 1.0, Carrier::model1(1.0))), DomainError);
  CHECK_THROWS_AS(egpd_cdf(-1.0, EgpdParams(0.1, 1.0, Carrier::model1(1.0))), DomainError);
}

TEST_CASE("egpd_cdf limits and monotonicity") {
  for (const Carrier& c : carrier_grid()) {
    for (double xi : {-0.2, 0.0, 0.3}) {
      const EgpdParams p(xi, 2.0, c);
      CHECK(egpd_cdf(1e-200, p) < 1e-50);
      double prev = 0.0;
      for (double y = 0.05; y < 200.0; y *= 1.3) {
        const double f = egpd_cdf(y, p);
        CHECK(f >= prev);
        prev = f;
      }
      CHECK(prev > 0.99);
    }
  }
  CHECK(egpd_cdf(10.0, EgpdParams(-0.5, 1.0, Carrier::model3(0.5))) == 1.0);
}

TEST_CASE("egpd_pdf examples") {
  CHECK(egpd_pdf(1.0, EgpdParams(0.0, 1.0, Carrier::model1(1.0))) ==
        doctest::Approx(0.36787944117).epsilon(1e-10));
  CHECK(egpd_pdf(1.0, EgpdParams(0.0, 2.0, Carrier::model1(2.0))) ==
        doctest::Approx(0.23865121854).epsilon(1e-10));
  const EgpdParams p(0.15, 1.0, Carrier::model3(0.7));
  const double h = 1e-5;
  const double fd = (egpd_cdf(2.0 + h, p) - egpd_cdf(2.0 - h, p)) / (2 * h);
  CHECK(rel_err(egpd_pdf(2.0, p), fd) < 1e-6);
  CHECK(egpd_pdf(5.0, EgpdParams(-0.5, 1.0, Carrier::model1(2.0))) == 0.0);
  CHECK_THROWS_AS(egpd_pdf(0.0, p), DomainError);
}

TEST_CASE("egpd_pdf is the derivative of egpd_cdf and integrates to one") {
  for (const Carrier& c : carrier_grid()) {
    for (double xi : {-0.2, 0.0, 0.1, 0.5}) {
      const EgpdParams p(xi, 1.5, c);
      INFO(to_string(c.family()) << " k1=" << c.kappa(0) << " xi=" << xi);
      const double end = p.upper_endpoint();
      for (double q = 0.02; q < 0.98; q += 0.06) {
        const double y = egpd_quantile(q, p);
        const double h = 1e-5 * y;
        const double fd = (egpd_cdf(y + h, p) - egpd_cdf(y - h, p)) / (2 * h);
        CHECK(rel_err(egpd_pdf(y, p), fd, 1e-8) < 1e-6);
      }
      // The density is singular at 0 when the lower-tail exponent is below
      // one, so the lower half goes to tanh-sinh.
      const double m = egpd_quantile(0.5, p);
      auto f = [&](double y) {
        const double v = y > 0.0 && y < end ? egpd_pdf(y, p) : 0.0;
        return std::isfinite(v) ? v : 0.0;  // overflow at y ~ 1e-300 has no mass
      };
      const double total = oracle::integrate_singular(f, 0.0, m) + oracle::integrate(f, m, end);
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("egpd_quantile") {
  CHECK(egpd_quantile(0.5, EgpdParams(0.0, 1.0, Carrier::model1(1.0))) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(egpd_quantile(0.81, EgpdParams(0.5, 1.0, Carrier::model1(2.0))) ==
        doctest::Approx(4.32455532034).epsilon(1e-10));
  const EgpdParams m4(0.1, 1.0, Carrier::model4(2.0, 1.0));
  CHECK(std::abs(egpd_cdf(egpd_quantile(0.99, m4), m4) - 0.99) < 1e-8);
  CHECK_THROWS_AS(egpd_quantile(0.0, m4), DomainError);
  CHECK_THROWS_AS(egpd_quantile(1.0, m4), DomainError);
  CHECK_THROWS_AS(egpd_quantile(-0.2, m4), DomainError);
}

TEST_CASE("cdf of quantile is the identity for every family") {
  std::vector<double> ps{0.001};
  for (int i = 1; i <= 99; ++i) ps.push_back(i / 100.0);
  ps.push_back(0.999);
  for (const Carrier& c : carrier_grid())
    for (double xi : {-0.2, 0.0, 0.1, 0.5}) {
      const EgpdParams p(xi, 0.7, c);
      for (double q : ps) CHECK(std::abs(egpd_cdf(egpd_quantile(q, p), p) - q) < 1e-8);
    }
}

TEST_CASE("egpd_sample determinism and law") {
  const EgpdParams p(0.2, 1.0, Carrier::model1(1.5));
  CHECK(egpd_sample(5, p, 42) == egpd_sample(5, p, 42));
  CHECK(egpd_sample(5, p, 42) != egpd_sample(5, p, 43));

  const auto xs = egpd_sample(100000, EgpdParams(0.0, 1.0, Carrier::model1(1.0)), 7);
  const double d = oracle::ks_distance(xs, [](double y) { return 1.0 - std::exp(-y); });
  CHECK(oracle::ks_pvalue(d, xs.size()) > 0.01);
}

TEST_CASE("egpd_sample mean agrees with the quadrature mean") {
  const EgpdParams p(0.2, 1.0, Carrier::model4(1.5, 2.0));
  const auto xs = egpd_sample(100000, p, 11);
  double s = 0.0;
  for (double x : xs) s += x;
  const double mean = s / static_cast<double>(xs.size());
  auto surv = [&](double y) { return y > 0.0 ? 1.0 - egpd_cdf(y, p) : 1.0; };
  const double mu = oracle::integrate(surv, 0.0, INFINITY);
  const double m2 = oracle::integrate([&](double y) { return 2.0 * y * surv(y); }, 0.0, INFINITY);
  const double se = std::sqrt((m2 - mu * mu) / static_cast<double>(xs.size()));
  CHECK(std::abs(mean - mu) < 3.0 * se);
}

TEST_CASE("egpd_logpdf_grad matches central differences") {
  // Exponential score for psi vanishes at y = psi.
  const auto g0 = egpd_logpdf_grad(1.0, EgpdParams(0.0, 1.0, Carrier::model1(1.0)));
  CHECK(std::abs(g0.grad[1]) < 1e-14);
  CHECK(g0.size == 3);

  std::vector<EgpdParams> grid{
      EgpdParams(0.1, 1.0, Carrier::model1(2.0)),   EgpdParams(0.3, 2.0, Carrier::model3(1.2)),
      EgpdParams(-0.2, 1.5, Carrier::model1(0.7)),  EgpdParams(0.25, 0.8, Carrier::model4(0.6, 1.7)),
      EgpdParams(0.4, 3.0, Carrier::model4(3.0, 0.5)), EgpdParams(0.2, 1.0, Carrier::model2(0.5, 2.0, 0.3)),
      EgpdParams(0.05, 2.0, Carrier::model3(4.0)),  EgpdParams(0.7, 1.0, Carrier::model1(1.0)),
  };
  std::vector<double> ys{0.5, 4.0, 0.05, 1.0, 2.5};
  for (const EgpdParams& p : grid) {
    for (double y : ys) {
      if (!(y < 0.9 * p.upper_endpoint())) continue;
      const auto g = egpd_logpdf_grad(y, p);
      CHECK(g.value == doctest::Approx(egpd_logpdf(y, p)).epsilon(1e-12));
      std::vector<double> theta{p.xi(), p.psi()};
      for (double k : p.carrier().kappa()) theta.push_back(k);
      auto logf = [&](const std::vector<double>& t) {
        return egpd_logpdf(y, EgpdParams(t[0], t[1], Carrier(p.carrier().family(), std::span(t).subspan(2))));
      };
      for (std::size_t j = 0; j < theta.size(); ++j) {
        const double h = 1e-6 * std::max(std::abs(theta[j]), 0.1);
        auto up = theta, dn = theta;
        up[j] += h;
        dn[j] -= h;
        const double fd = (logf(up) - logf(dn)) / (2 * h);
        INFO(to_string(p.carrier().family()) << " y=" << y << " j=" << j);
        CHECK(rel_err(g.grad[j], fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("egpd_logpdf_grad at the support endpoint") {
  const EgpdParams p(-0.5, 1.0, Carrier::model1(2.0));
  CHECK_THROWS_AS(egpd_logpdf_grad(2.0, p), NumericalError);
}

TEST_CASE("GPD recovery and family reductions") {
  for (double xi : {-0.3, 0.0, 0.2, 1.0}) {
    const EgpdParams m1(xi, 1.3, Carrier::model1(1.0));
    for (double y = 0.01; y < 3.0; y += 0.07) {
      CHECK(std::abs(egpd_cdf(y, m1) - oracle::gpd_cdf(y / 1.3, xi)) < 1e-12);
      for (double k : {0.4, 1.0, 2.5}) {
        const EgpdParams a(xi, 1.3, Carrier::model3(k));
        const EgpdParams b(xi, 1.3, Carrier::model4(k, 2.0));
        CHECK(std::abs(egpd_cdf(y, a) - egpd_cdf(y, b)) < 1e-12);
      }
    }
  }
}

TEST_CASE("xi continuity across the exponential branch") {
  for (const Carrier& c : carrier_grid())
    for (double y = 0.01; y < 20.0; y *= 1.5) {
      const double f0 = egpd_cdf(y, EgpdParams(0.0, 1.0, c));
      CHECK(std::abs(egpd_cdf(y, EgpdParams(1e-9, 1.0, c)) - f0) < 1e-7);
      CHECK(std::abs(egpd_cdf(y, EgpdParams(2e-8, 1.0, c)) - f0) < 1e-7);
      CHECK(std::abs(egpd_cdf(y, EgpdParams(-2e-8, 1.0, c)) - f0) < 1e-7);
    }
}

TEST_CASE("tail_profile") {
  auto tp = tail_profile(EgpdParams(0.1, 1.0, Carrier::model1(2.0)));
  CHECK(tp.lower_exponent == 2.0);
  CHECK(tp.lower_constant == 1.0);
  CHECK(tp.upper_shape == 0.1);
  tp = tail_profile(EgpdParams(0.1, 1.0, Carrier::model1(1.0)));
  CHECK(tp.lower_exponent == 1.0);
  CHECK(tp.lower_constant == 1.0);

  // Log-log slope and level of F on [1e-6 psi, 1e-3 psi].
  auto fit_tail = [](const EgpdParams& p) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (double t = -6.0; t <= -3.0; t += 0.25, ++n) {
      const double x = t * std::log(10.0);
      const double v = std::log(egpd_cdf(std::exp(x) * p.psi(), p));
      sx += x; sy += v; sxx += x * x; sxy += x * v;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double level = (sy - slope * sx) / n;
    return std::pair{slope, std::exp(level)};
  };
  const EgpdParams m4(0.2, 2.0, Carrier::model4(1.0, 3.0));
  tp = tail_profile(m4);
  CHECK(tp.lower_exponent == 3.0);
  const auto [s4, c4] = fit_tail(m4);
  CHECK(std::abs(s4 - 3.0) < 0.01);
  CHECK(std::isfinite(c4));
  CHECK(c4 > 0.0);
  CHECK(c4 == doctest::Approx(tp.lower_constant).epsilon(0.01));

  for (double k : {0.5, 1.0, 2.0, 4.0}) {
    const EgpdParams m1(0.1, 1.0, Carrier::model1(k));
    CHECK(std::abs(fit_tail(m1).first - k) < 0.01);
    const EgpdParams m3(0.1, 1.0, Carrier::model3(k));
    const auto [s3, c3] = fit_tail(m3);
    CHECK(std::abs(s3 - tail_profile(m3).lower_exponent) < 0.01);
    CHECK(c3 == doctest::Approx(tail_profile(m3).lower_constant).epsilon(0.01));
  }
}

TEST_CASE("upper tail follows the GPD") {
  // For Model3/4 the approach is at rate (1 - u)^k1, too slow at k1 = 0.3
  // to settle within [20 psi, 100 psi].
  for (const Carrier& c : carrier_grid()) {
    if (c.kappa(0) < 0.5) continue;
    const EgpdParams p(0.2, 1.0, c);
    const double r20 = (1.0 - egpd_cdf(20.0, p)) / (1.0 - gpd_cdf(20.0, 0.2));
    const double r100 = (1.0 - egpd_cdf(100.0, p)) / (1.0 - gpd_cdf(100.0, 0.2));
    INFO(to_string(c.family()) << " k1=" << c.kappa(0));
    CHECK(std::abs(r100 / r20 - 1.0) < 0.01);
  }
}

TEST_CASE("family names round-trip") {
  for (auto f : {CarrierFamily::Model1, CarrierFamily::Model2, CarrierFamily::Model3, CarrierFamily::Model4})
    CHECK(carrier_family_from_string(to_string(f)) == f);
  CHECK(carrier_arity(CarrierFamily::Model2) == 3);
  CHECK(carrier_arity(CarrierFamily::Model4) == 2);
}
