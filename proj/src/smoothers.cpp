#include "egpd/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "egpd/error.hpp"

namespace egpd {

namespace {

// r^2 log r written in terms of r^2.
double tps_kernel(double r2) { return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0; }

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Orthonormal basis (K x K-1) of the complement of c.
Eigen::MatrixXd null_space_of(const Eigen::VectorXd& c) {
  const Eigen::Index k = c.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  return q.rightCols(k - 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// TermSpec

TermSpec TermSpec::intercept() { return TermSpec{}; }

TermSpec TermSpec::cyclic(std::string covariate, int K, double period,
                          std::optional<double> lambda) {
  TermSpec t;
  t.kind = Kind::Cyclic;
  t.covariates = {std::move(covariate)};
  t.dim = K;
  t.period = period;
  t.select = !lambda.has_value();
  t.lambda = lambda.value_or(1.0);
  return t;
}

TermSpec TermSpec::thin_plate(std::string x, std::string y, int k, std::optional<double> lambda) {
  TermSpec t;
  t.kind = Kind::ThinPlate;
  t.covariates = {std::move(x), std::move(y)};
  t.dim = k;
  t.select = !lambda.has_value();
  t.lambda = lambda.value_or(1.0);
  return t;
}

void TermSpec::validate() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Intercept: return;
    case Kind::Cyclic:
      if (covariates.size() != 1) os << "cyclic term needs exactly one covariate";
      else if (dim < 4) os << "cyclic term needs K >= 4, got " << dim;
      else if (!(period > 0.0)) os << "cyclic term needs a positive period, got " << period;
      break;
    case Kind::ThinPlate:
      if (covariates.size() != 2) os << "thin-plate term needs exactly two covariates";
      else if (dim < 3) os << "thin-plate term needs k >= 3, got " << dim;
      break;
  }
  if (!(lambda >= 0.0)) os << (os.tellp() > 0 ? "; " : "") << "lambda must be >= 0";
  if (os.tellp() > 0) throw ConfigError(label() + ": " + os.str());
}

std::string TermSpec::label() const {
  switch (kind) {
    case Kind::Intercept: return "intercept";
    case Kind::Cyclic:
      return "cyclic(" + (covariates.empty() ? std::string("?") : covariates[0]) + ")";
    case Kind::ThinPlate: {
      std::string s = "thinplate(";
      for (std::size_t i = 0; i < covariates.size(); ++i) s += (i ? "," : "") + covariates[i];
      return s + ")";
    }
  }
  return "term";
}

std::string to_string(TermSpec::Kind kind) {
  switch (kind) {
    case TermSpec::Kind::Intercept: return "intercept";
    case TermSpec::Kind::Cyclic: return "cyclic";
    case TermSpec::Kind::ThinPlate: return "thinplate";
  }
  return "unknown";
}

TermSpec::Kind term_kind_from_string(const std::string& name) {
  if (name == "intercept") return TermSpec::Kind::Intercept;
  if (name == "cyclic" || name == "cc" || name == "pbc") return TermSpec::Kind::Cyclic;
  if (name == "thinplate" || name == "tp") return TermSpec::Kind::ThinPlate;
  throw ConfigError("unknown term kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Cyclic cubic B-splines

CyclicBasis::CyclicBasis(int K, double period) : K_(K), period_(period) {
  if (K < 4) throw ConfigError("cyclic basis needs K >= 4");
  if (!(period > 0.0)) throw ConfigError("cyclic basis needs a positive period");
}

Eigen::MatrixXd CyclicBasis::design(std::span<const double> values, bool wrap) const {
  const double h = period_ / K_;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(values.size()), K_);
  for (std::size_t r = 0; r < values.size(); ++r) {
    double x = values[r];
    if (!std::isfinite(x)) throw DomainError("cyclic covariate is not finite");
    if (wrap) {
      x = std::fmod(x, period_);
      if (x < 0.0) x += period_;
      if (x >= period_) x = 0.0;
    } else if (x < 0.0 || x >= period_) {
      std::ostringstream os;
      os << "cyclic covariate " << x << " outside [0, " << period_ << ")";
      throw DomainError(os.str());
    }
    const double s = x / h;
    const int i = std::min(static_cast<int>(std::floor(s)), K_ - 1);
    const double t = s - i;
    const double t2 = t * t, t3 = t2 * t;
    const double w[4] = {(1.0 - t) * (1.0 - t) * (1.0 - t) / 6.0,
                         (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
                         (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
    for (int j = 0; j < 4; ++j) {
      const int col = ((i - 3 + j) % K_ + K_) % K_;
      X(static_cast<Eigen::Index>(r), col) += w[j];
    }
  }
  return X;
}

Eigen::MatrixXd CyclicBasis::penalty() const {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K_, K_);
  for (int j = 0; j < K_; ++j) {
    D(j, (j + K_ - 1) % K_) += 1.0;
    D(j, j) += -2.0;
    D(j, (j + 1) % K_) += 1.0;
  }
  return D.transpose() * D;
}

BasisRealization build_cyclic_basis(std::span<const double> values, const TermSpec& spec) {
  if (spec.kind != TermSpec::Kind::Cyclic) throw ConfigError("build_cyclic_basis: not a cyclic term");
  spec.validate();
  const CyclicBasis basis(spec.dim, spec.period);
  return {basis.design(values, false), basis.penalty(), 1};
}

// ---------------------------------------------------------------------------
// Thin-plate regression splines

ThinPlateBasis ThinPlateBasis::fit(std::span<const double> x, std::span<const double> y, int k) {
  if (x.size() != y.size()) throw DataError("thin-plate coordinates differ in length");
  if (k < 3) throw ConfigError("thin-plate basis needs k >= 3");
  if (x.empty()) throw ConfigError("thin-plate basis needs data");

  ThinPlateBasis b;
  b.k_ = k;
  b.mean_x = mean_of(x);
  b.mean_y = mean_of(y);
  b.sd_x = sd_of(x, b.mean_x);
  b.sd_y = sd_of(y, b.mean_y);
  if (!(b.sd_x > 0.0) || !(b.sd_y > 0.0)) {
    throw ConfigError("thin-plate covariates have zero spread");
  }

  std::vector<std::pair<double, double>> pts(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    pts[i] = {(x[i] - b.mean_x) / b.sd_x, (y[i] - b.mean_y) / b.sd_y};
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (static_cast<int>(pts.size()) < k) {
    std::ostringstream os;
    os << "thin-plate basis of rank " << k << " needs at least " << k
       << " distinct locations, got " << pts.size();
    throw ConfigError(os.str());
  }
  if (pts.size() > static_cast<std::size_t>(kMaxKnots)) {
    const std::size_t stride = (pts.size() + kMaxKnots - 1) / kMaxKnots;
    std::vector<std::pair<double, double>> kept;
    for (std::size_t i = 0; i < pts.size(); i += stride) kept.push_back(pts[i]);
    pts.swap(kept);
  }

  const auto m = static_cast<Eigen::Index>(pts.size());
  b.knots.resize(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    b.knots(i, 0) = pts[i].first;
    b.knots(i, 1) = pts[i].second;
  }
  Eigen::MatrixXd E(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const double dx = b.knots(i, 0) - b.knots(j, 0);
      const double dy = b.knots(i, 1) - b.knots(j, 1);
      E(i, j) = E(j, i) = tps_kernel(dx * dx + dy * dy);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(E);
  if (es.info() != Eigen::Success) throw NumericalError("thin-plate kernel eigendecomposition failed");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
    return std::fabs(es.eigenvalues()(a)) > std::fabs(es.eigenvalues()(c));
  });
  Eigen::MatrixXd Uk(m, k);
  Eigen::VectorXd Dk(k);
  for (int j = 0; j < k; ++j) {
    Uk.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    Dk(j) = es.eigenvalues()(order[static_cast<std::size_t>(j)]);
  }

  // Side condition T' delta = 0 with T = [1, x, y] at the knots.
  Eigen::MatrixXd T(m, 3);
  T.col(0).setOnes();
  T.col(1) = b.knots.col(0);
  T.col(2) = b.knots.col(1);
  const Eigen::MatrixXd A = Uk.transpose() * T;  // k x 3
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd Z = Q.rightCols(k - 3);

  const Eigen::MatrixXd P = Z.transpose() * Dk.asDiagonal() * Z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ps(P);
  b.eigenvalues = ps.eigenvalues().cwiseMax(0.0);
  b.projection = Uk * Z * ps.eigenvectors();
  return b;
}

Eigen::MatrixXd ThinPlateBasis::design(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != y.size()) throw DataError("thin-plate coordinates differ in length");
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index m = knots.rows();
  Eigen::MatrixXd X(n, k_);
  Eigen::RowVectorXd e(m);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!std::isfinite(x[r]) || !std::isfinite(y[r])) {
      throw DomainError("thin-plate covariate is not finite");
    }
    const double sx = (x[r] - mean_x) / sd_x;
    const double sy = (y[r] - mean_y) / sd_y;
    X(r, 0) = 1.0;
    X(r, 1) = sx;
    X(r, 2) = sy;
    if (k_ > 3) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const double dx = sx - knots(i, 0), dy = sy - knots(i, 1);
        e(i) = tps_kernel(dx * dx + dy * dy);
      }
      X.block(r, 3, 1, k_ - 3) = e * projection;
    }
  }
  return X;
}

Eigen::MatrixXd ThinPlateBasis::penalty() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k_, k_);
  for (int j = 3; j < k_; ++j) S(j, j) = eigenvalues(j - 3);
  return S;
}

BasisRealization build_thinplate_basis(std::span<const double> x, std::span<const double> y,
                                       const TermSpec& spec) {
  if (spec.kind != TermSpec::Kind::ThinPlate) {
    throw ConfigError("build_thinplate_basis: not a thin-plate term");
  }
  spec.validate();
  const ThinPlateBasis basis = ThinPlateBasis::fit(x, y, spec.dim);
  return {basis.design(x, y), basis.penalty(), 3};
}

// ---------------------------------------------------------------------------
// Term

Term Term::realize(const TermSpec& spec, const ModelFrame& training) {
  spec.validate();
  Term t;
  t.spec_ = spec;
  switch (spec.kind) {
    case TermSpec::Kind::Intercept: t.basis_ = std::monostate{}; break;
    case TermSpec::Kind::Cyclic: {
      const auto values = training.covariate(spec.covariates[0]);
      CyclicBasis basis(spec.dim, spec.period);
      basis.design(values, false);  // range check on the training data
      t.basis_ = basis;
      break;
    }
    case TermSpec::Kind::ThinPlate:
      t.basis_ = ThinPlateBasis::fit(training.covariate(spec.covariates[0]),
                                     training.covariate(spec.covariates[1]), spec.dim);
      break;
  }
  if (spec.kind != TermSpec::Kind::Intercept) {
    const Eigen::MatrixXd X = t.raw_design(training);
    t.constraint_ = X.colwise().mean().transpose();
    t.penalty_scale_ = 1.0;
    t.finish();
    const Eigen::MatrixXd Xc = X * t.z_;
    const double pn = t.penalty_.norm();
    if (pn > 0.0) {
      const double xn = (Xc.transpose() * Xc).norm() / static_cast<double>(X.rows());
      t.penalty_scale_ = xn / pn;
      t.penalty_ *= t.penalty_scale_;
    }
  } else {
    t.finish();
  }
  return t;
}

Term Term::restore(TermSpec spec, Basis basis, Eigen::VectorXd constraint, double penalty_scale) {
  Term t;
  t.spec_ = std::move(spec);
  t.basis_ = std::move(basis);
  t.constraint_ = std::move(constraint);
  t.penalty_scale_ = penalty_scale;
  t.finish();
  t.penalty_ *= penalty_scale;
  return t;
}

void Term::finish() {
  const int k = basis_dim();
  if (constraint_.size() > 0) {
    if (constraint_.size() != k) throw ConfigError(spec_.label() + ": constraint length mismatch");
    z_ = null_space_of(constraint_);
  } else {
    z_ = Eigen::MatrixXd::Identity(k, k);
  }
  Eigen::MatrixXd S;
  if (const auto* c = std::get_if<CyclicBasis>(&basis_)) {
    S = c->penalty();
  } else if (const auto* tp = std::get_if<ThinPlateBasis>(&basis_)) {
    S = tp->penalty();
  } else {
    S = Eigen::MatrixXd::Zero(1, 1);
  }
  penalty_ = z_.transpose() * S * z_;
  penalty_ = 0.5 * (penalty_ + penalty_.transpose());
}

int Term::basis_dim() const {
  if (const auto* c = std::get_if<CyclicBasis>(&basis_)) return c->size();
  if (const auto* tp = std::get_if<ThinPlateBasis>(&basis_)) return tp->size();
  return 1;
}

int Term::columns() const { return static_cast<int>(z_.cols()); }

int Term::nullspace_dim() const {
  switch (spec_.kind) {
    case TermSpec::Kind::Intercept: return 1;
    case TermSpec::Kind::Cyclic: return constraint_.size() > 0 ? 0 : 1;
    case TermSpec::Kind::ThinPlate: return constraint_.size() > 0 ? 2 : 3;
  }
  return 0;
}

Eigen::MatrixXd Term::raw_design(const ModelFrame& frame) const {
  if (const auto* c = std::get_if<CyclicBasis>(&basis_)) {
    return c->design(frame.covariate(spec_.covariates[0]), true);
  }
  if (const auto* tp = std::get_if<ThinPlateBasis>(&basis_)) {
    return tp->design(frame.covariate(spec_.covariates[0]), frame.covariate(spec_.covariates[1]));
  }
  return Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(frame.rows()), 1);
}

Eigen::MatrixXd Term::design(const ModelFrame& frame) const { return raw_design(frame) * z_; }

Eigen::VectorXd evaluate_term(const Term& term, const Eigen::VectorXd& coeffs,
                              const ModelFrame& newdata) {
  if (coeffs.size() != term.columns()) {
    std::ostringstream os;
    os << term.spec().label() << ": expected " << term.columns() << " coefficients, got "
       << coeffs.size();
    throw ConfigError(os.str());
  }
  return term.design(newdata) * coeffs;
}

}  // namespace egpd
