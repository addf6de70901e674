#pragma once

// Basis expansions and quadratic penalties for the additive terms of a
// predictor: intercepts, cyclic cubic B-splines in one covariate and low-rank
// thin-plate regression splines in two.

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "egpd/frame.hpp"

namespace egpd {

struct TermSpec {
  enum class Kind { Intercept, Cyclic, ThinPlate };

  Kind kind = Kind::Intercept;
  std::vector<std::string> covariates;
  int dim = 1;          // basis size K (cyclic) or k (thin plate)
  double period = 0.0;  // cyclic only
  double lambda = 0.0;  // fixed value, or the starting value when select is set
  bool select = false;  // lambda chosen by the BIC search

  static TermSpec intercept();
  // An empty lambda marks the term for selection.
  static TermSpec cyclic(std::string covariate, int K, double period,
                         std::optional<double> lambda = std::nullopt);
  static TermSpec thin_plate(std::string x, std::string y, int k,
                             std::optional<double> lambda = std::nullopt);

  // ConfigError when K < 4, k < 3, period <= 0 or covariates are missing.
  void validate() const;
  std::string label() const;
};

std::string to_string(TermSpec::Kind kind);
TermSpec::Kind term_kind_from_string(const std::string& name);

struct BasisRealization {
  Eigen::MatrixXd design;   // n x K
  Eigen::MatrixXd penalty;  // K x K, positive semi-definite
  int nullspace_dim = 0;
};

// Periodic cubic B-splines on K equally spaced knots over [0, period).
// Penalty: squared second differences of the coefficients, wrapped around.
class CyclicBasis {
 public:
  CyclicBasis(int K, double period);

  int size() const noexcept { return K_; }
  double period() const noexcept { return period_; }
  // Values must lie in [0, period) unless wrap is set, in which case any
  // finite value is reduced modulo the period.
  Eigen::MatrixXd design(std::span<const double> values, bool wrap) const;
  Eigen::MatrixXd penalty() const;

 private:
  int K_;
  double period_;
};

// Thin-plate regression spline of rank k: the kernel r^2 log r evaluated
// between standardized coordinates and the knots, truncated to its k
// largest-magnitude eigenvectors, plus the affine null space {1, x, y}.
// Columns: [1, x, y, wiggly_1 .. wiggly_{k-3}] with a diagonal penalty.
class ThinPlateBasis {
 public:
  static constexpr int kMaxKnots = 2000;

  static ThinPlateBasis fit(std::span<const double> x, std::span<const double> y, int k);

  int size() const noexcept { return k_; }
  Eigen::MatrixXd design(std::span<const double> x, std::span<const double> y) const;
  Eigen::MatrixXd penalty() const;

  // Persisted state.
  int k_ = 3;
  double mean_x = 0.0, sd_x = 1.0, mean_y = 0.0, sd_y = 1.0;
  Eigen::MatrixXd knots;        // m x 2, standardized
  Eigen::MatrixXd projection;   // m x (k - 3)
  Eigen::VectorXd eigenvalues;  // k - 3 penalty entries
};

BasisRealization build_cyclic_basis(std::span<const double> values, const TermSpec& spec);
BasisRealization build_thinplate_basis(std::span<const double> x, std::span<const double> y,
                                       const TermSpec& spec);

// A term realized on training data. Smooth terms carry a sum-to-zero
// constraint over the training rows so they stay identifiable next to the
// intercept; design() and penalty() are in the constrained coordinates.
class Term {
 public:
  using Basis = std::variant<std::monostate, CyclicBasis, ThinPlateBasis>;

  static Term realize(const TermSpec& spec, const ModelFrame& training);
  // Rebuild from persisted parts.
  static Term restore(TermSpec spec, Basis basis, Eigen::VectorXd constraint, double penalty_scale);

  const TermSpec& spec() const noexcept { return spec_; }
  TermSpec& spec() noexcept { return spec_; }
  const Basis& basis() const noexcept { return basis_; }
  const Eigen::VectorXd& constraint() const noexcept { return constraint_; }
  double penalty_scale() const noexcept { return penalty_scale_; }

  int columns() const;
  // Raw basis dimension before the constraint.
  int basis_dim() const;
  Eigen::MatrixXd design(const ModelFrame& frame) const;
  const Eigen::MatrixXd& penalty() const noexcept { return penalty_; }
  // Null-space dimension of penalty() after the constraint.
  int nullspace_dim() const;

 private:
  Eigen::MatrixXd raw_design(const ModelFrame& frame) const;
  void finish();

  TermSpec spec_;
  Basis basis_;
  Eigen::VectorXd constraint_;
  Eigen::MatrixXd z_;
  Eigen::MatrixXd penalty_;
  double penalty_scale_ = 1.0;
};

// f(x) at the rows of newdata for constrained coefficients of the term.
Eigen::VectorXd evaluate_term(const Term& term, const Eigen::VectorXd& coeffs,
                              const ModelFrame& newdata);

}  // namespace egpd
