#include "egpd/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "egpd/error.hpp"

namespace egpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxJointIterations = 100;
constexpr Eigen::Index kChunkRows = 4096;
constexpr double kGoldenTolerance = 0.01;  // in log10 lambda
constexpr double kLambdaGain = 0.01;       // deviance units

using Stacked = std::vector<Eigen::VectorXd>;

struct Evaluation {
  bool ok = false;
  double gd = kInf;
  std::size_t bad_row = 0;
  std::string reason;
  Eigen::MatrixXd scores;  // d logpdf / d eta, rows x parameters
};

// Designs and likelihood evaluation for one model on one data set.
class Problem {
 public:
  Problem(const RealizedModel& model, const ModelFrame& data)
      : model_(model), y_(data.response()) {
    for (const auto& p : model.parameters) X_.push_back(p.design(data));
  }

  std::size_t parameters() const { return X_.size(); }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(y_.size()); }
  const Eigen::MatrixXd& design(std::size_t p) const { return X_[p]; }

  Eigen::MatrixXd predictors(const Stacked& beta) const {
    Eigen::MatrixXd eta(rows(), static_cast<Eigen::Index>(parameters()));
    for (std::size_t p = 0; p < parameters(); ++p) {
      eta.col(static_cast<Eigen::Index>(p)) = X_[p] * beta[p];
    }
    return eta;
  }

  Evaluation evaluate(const Stacked& beta, bool with_scores) const {
    return evaluate_predictors(predictors(beta), with_scores);
  }

  Evaluation evaluate_predictors(const Eigen::MatrixXd& eta, bool with_scores) const {
    const std::size_t P = parameters();
    const Family& family = *model_.family;
    Evaluation ev;
    if (with_scores) ev.scores.resize(rows(), static_cast<Eigen::Index>(P));
    std::vector<double> theta(P), grad(P);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < rows(); ++i) {
      for (std::size_t p = 0; p < P; ++p) {
        theta[p] = model_.parameters[p].link.linkinv(eta(i, static_cast<Eigen::Index>(p)));
      }
      const double y = y_[static_cast<std::size_t>(i)];
      try {
        const double l = with_scores ? family.logpdf_grad(y, theta, grad) : family.logpdf(y, theta);
        if (!std::isfinite(l)) return fail(ev, i, "log-density is not finite");
        ll += l;
        if (with_scores) {
          for (std::size_t p = 0; p < P; ++p) {
            const auto c = static_cast<Eigen::Index>(p);
            const double s = grad[p] * model_.parameters[p].link.dinvlink_deta(eta(i, c));
            if (!std::isfinite(s)) return fail(ev, i, "score is not finite");
            ev.scores(i, c) = s;
          }
        }
      } catch (const Error& e) {
        return fail(ev, i, e.what());
      }
    }
    ev.ok = true;
    ev.gd = -2.0 * ll;
    return ev;
  }

  double penalty(const Stacked& beta, const std::vector<Eigen::MatrixXd>& S) const {
    double total = 0.0;
    for (std::size_t p = 0; p < parameters(); ++p) total += beta[p].dot(S[p] * beta[p]);
    return total;
  }

 private:
  static Evaluation& fail(Evaluation& ev, Eigen::Index row, std::string reason) {
    ev.ok = false;
    ev.gd = kInf;
    ev.bad_row = static_cast<std::size_t>(row);
    ev.reason = std::move(reason);
    return ev;
  }

  const RealizedModel& model_;
  std::span<const double> y_;
  std::vector<Eigen::MatrixXd> X_;
};

Stacked stack(const RealizedModel& model, const Coefficients& coeffs) {
  if (coeffs.size() != model.parameters.size()) {
    throw ConfigError("coefficients do not match the number of parameters");
  }
  Stacked out;
  for (std::size_t p = 0; p < coeffs.size(); ++p) {
    const auto& terms = model.parameters[p].terms;
    if (coeffs[p].size() != terms.size()) {
      throw ConfigError("coefficients do not match the terms of " + model.parameters[p].name);
    }
    Eigen::VectorXd b(model.parameters[p].columns());
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      if (coeffs[p][j].size() != terms[j].columns()) {
        throw ConfigError("coefficient length mismatch for term " + terms[j].spec().label() +
                          " of " + model.parameters[p].name);
      }
      b.segment(col, terms[j].columns()) = coeffs[p][j];
      col += terms[j].columns();
    }
    out.push_back(std::move(b));
  }
  return out;
}

Coefficients unstack(const RealizedModel& model, const Stacked& beta) {
  Coefficients out(model.parameters.size());
  for (std::size_t p = 0; p < beta.size(); ++p) {
    Eigen::Index col = 0;
    for (const auto& t : model.parameters[p].terms) {
      out[p].push_back(beta[p].segment(col, t.columns()));
      col += t.columns();
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> penalties(const RealizedModel& model, const Lambdas& lambdas) {
  std::vector<Eigen::MatrixXd> S;
  for (std::size_t p = 0; p < model.parameters.size(); ++p) {
    S.push_back(model.parameters[p].penalty(lambdas[p]));
  }
  return S;
}

Eigen::MatrixXd weighted_cross(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  A.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose() * w.cwiseSqrt().asDiagonal());
  return A.selfadjointView<Eigen::Lower>();
}

Eigen::VectorXd curvature_weights(const Evaluation& ev, std::size_t p, double floor) {
  return ev.scores.col(static_cast<Eigen::Index>(p)).array().square().max(floor).matrix();
}

// Names the first term whose diagonal block of H is not positive definite.
[[noreturn]] void throw_singular(const ParameterPredictor& param, const Eigen::MatrixXd& H) {
  Eigen::Index col = 0;
  for (const auto& t : param.terms) {
    const Eigen::MatrixXd block = H.block(col, col, t.columns(), t.columns());
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success) {
      throw FitError("rank-deficient penalized system for term " + t.spec().label() + " of " +
                         param.name,
                     0.0);
    }
    col += t.columns();
  }
  throw FitError("rank-deficient penalized system for parameter " + param.name, 0.0);
}

// LDLT of a symmetric system after scaling it to unit diagonal, so that the
// conditioning check does not depend on the size of lambda.
class ScaledSolver {
 public:
  explicit ScaledSolver(const Eigen::MatrixXd& H) {
    if (H.size() == 0) {
      ok_ = true;
      return;
    }
    if (!(H.diagonal().minCoeff() > 0.0) || !H.allFinite()) return;
    scale_ = H.diagonal().cwiseSqrt().cwiseInverse();
    ldlt_.compute(scale_.asDiagonal() * H * scale_.asDiagonal());
    if (ldlt_.info() != Eigen::Success || !ldlt_.isPositive()) return;
    const Eigen::VectorXd d = ldlt_.vectorD();
    ok_ = d.minCoeff() > 1e-13 * std::max(1.0, d.maxCoeff());
  }

  bool ok() const { return ok_; }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    return scale_.asDiagonal() * ldlt_.solve(scale_.asDiagonal() * b);
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    return scale_.asDiagonal() * ldlt_.solve(scale_.asDiagonal() * b);
  }

 private:
  Eigen::VectorXd scale_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool ok_ = false;
};

ScaledSolver factor(const ParameterPredictor& param, const Eigen::MatrixXd& H) {
  ScaledSolver solver(H);
  if (!solver.ok()) throw_singular(param, H);
  return solver;
}

// edf = columns - tr(H^-1 S), split over the terms of the parameter.
std::vector<double> term_edf(const ParameterPredictor& param, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& S) {
  const Eigen::MatrixXd H = A + S;
  const auto solver = factor(param, H);
  const Eigen::MatrixXd HinvS = solver.solve(S);
  std::vector<double> out;
  Eigen::Index col = 0;
  for (const auto& t : param.terms) {
    const int c = t.columns();
    out.push_back(c - HinvS.diagonal().segment(col, c).sum());
    col += c;
  }
  return out;
}

class Fitter {
 public:
  Fitter(const ModelFrame& data, const ModelSpec& spec, const FitControl& control)
      : control_(control), model_(realize_model(spec, data)), problem_(model_, data) {
    n_ = problem_.rows();
    P_ = problem_.parameters();
    for (const auto& p : model_.parameters) {
      std::vector<double> lam;
      for (const auto& t : p.terms) {
        lam.push_back(t.spec().kind == TermSpec::Kind::Intercept ? 0.0 : t.spec().lambda);
      }
      lambdas_.push_back(std::move(lam));
    }
    S_ = penalties(model_, lambdas_);
    initialize(data);
  }

  FittedModel run(const ModelFrame& data) {
    const bool cycles_converged = cycle();
    bool converged = cycles_converged;
    if (control_.joint_phase) converged = joint(cycles_converged);
    return finish(data, converged);
  }

 private:
  void initialize(const ModelFrame& data) {
    const Family& family = *model_.family;
    std::vector<double> init = family.initial_values(data.response());
    for (const auto& [name, value] : control_.init) init[family.parameter_index(name)] = value;
    for (std::size_t p = 0; p < P_; ++p) {
      const auto& param = model_.parameters[p];
      Eigen::VectorXd b = Eigen::VectorXd::Zero(param.columns());
      Eigen::Index col = 0;
      for (const auto& t : param.terms) {
        if (t.spec().kind == TermSpec::Kind::Intercept) {
          try {
            b(col) = param.link.linkfun(init[p]);
          } catch (const DomainError& e) {
            throw ConfigError("starting value for " + param.name + ": " + e.what());
          }
        }
        col += t.columns();
      }
      beta_.push_back(std::move(b));
    }
    ev_ = problem_.evaluate(beta_, true);
    if (!ev_.ok) {
      std::ostringstream os;
      os << "starting values are inadmissible at row " << ev_.bad_row << ": " << ev_.reason;
      throw FitError(os.str(), kInf);
    }
    pd_ = ev_.gd + problem_.penalty(beta_, S_);
  }

  bool has_selected(std::size_t p) const {
    const auto& terms = model_.parameters[p].terms;
    return std::any_of(terms.begin(), terms.end(), [](const Term& t) { return t.spec().select; });
  }

  // Golden-section search over log10 lambda for each selected term of p,
  // minimizing a local BIC built from the current scores.
  // Returns true when any smoothing parameter moved.
  bool select_lambdas(std::size_t p) {
    bool changed = false;
    const auto& param = model_.parameters[p];
    const Eigen::MatrixXd& X = problem_.design(p);
    const Eigen::MatrixXd A = weighted_cross(X, curvature_weights(ev_, p, control_.curvature_floor));
    const Eigen::VectorXd g = X.transpose() * ev_.scores.col(static_cast<Eigen::Index>(p));
    const double log_n = std::log(static_cast<double>(n_));

    for (std::size_t j = 0; j < param.terms.size(); ++j) {
      if (!param.terms[j].spec().select) continue;
      std::vector<double> lam = lambdas_[p];
      auto criterion = [&](double log10_lambda) {
        lam[j] = std::pow(10.0, log10_lambda);
        const Eigen::MatrixXd S = param.penalty(lam);
        const ScaledSolver solver(A + S);
        if (!solver.ok()) return kInf;
        const Eigen::VectorXd delta = solver.solve(Eigen::VectorXd(g - S * beta_[p]));
        const double edf = param.columns() - solver.solve(S).trace();
        return -2.0 * g.dot(delta) + delta.dot(A * delta) + log_n * edf;
      };

      const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
      double a = control_.log10_lambda_min, b = control_.log10_lambda_max;
      double c = b - invphi * (b - a), d = a + invphi * (b - a);
      double fc = criterion(c), fd = criterion(d);
      while (b - a > kGoldenTolerance) {
        if (fc <= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - invphi * (b - a);
          fc = criterion(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + invphi * (b - a);
          fd = criterion(d);
        }
      }
      double best = 0.5 * (a + b);
      double fbest = criterion(best);
      for (double edge : {control_.log10_lambda_min, control_.log10_lambda_max}) {
        const double fe = criterion(edge);
        if (fe < fbest) {
          fbest = fe;
          best = edge;
        }
      }
      // Keep the current value unless the new one is clearly better, so the
      // sweep does not jitter within the search tolerance.
      const double current = lambdas_[p][j] > 0.0 ? criterion(std::log10(lambdas_[p][j])) : kInf;
      if (std::isfinite(fbest) && fbest < current - kLambdaGain) {
        lambdas_[p][j] = std::pow(10.0, best);
        changed = true;
      }
    }
    S_[p] = param.penalty(lambdas_[p]);
    pd_ = ev_.gd + problem_.penalty(beta_, S_);
    return changed;
  }

  // Parameter-wise cycles. Returns true when the penalized deviance settles.
  bool cycle() {
    std::vector<double> step(P_);
    for (std::size_t p = 0; p < P_; ++p) step[p] = control_.step_for(p);

    for (int cyc = 1; cyc <= control_.n_cyc; ++cyc) {
      cycles_ = cyc;
      double improvement = 0.0;
      double max_decrement = 0.0;
      bool lambda_moved = false;
      for (std::size_t p = 0; p < P_; ++p) {
        if (control_.select_lambda && has_selected(p)) lambda_moved |= select_lambdas(p);
        const double pd_before = pd_;
        const auto& param = model_.parameters[p];
        const Eigen::MatrixXd& X = problem_.design(p);
        const Eigen::MatrixXd A =
            weighted_cross(X, curvature_weights(ev_, p, control_.curvature_floor));
        const Eigen::VectorXd g =
            X.transpose() * ev_.scores.col(static_cast<Eigen::Index>(p)) - S_[p] * beta_[p];
        const auto solver = factor(param, A + S_[p]);
        const Eigen::VectorXd delta = solver.solve(g);
        const double decrement = g.dot(delta);
        max_decrement = std::max(max_decrement, decrement);
        if (!(decrement > 0.0)) continue;

        int rejections = 0;
        while (true) {
          Stacked trial = beta_;
          trial[p] += step[p] * delta;
          Evaluation te = problem_.evaluate(trial, true);
          const double tpd = te.ok ? te.gd + problem_.penalty(trial, S_) : kInf;
          if (!control_.autostep) {
            if (!std::isfinite(tpd)) diverged(te);
            accept(std::move(trial), std::move(te), tpd);
            break;
          }
          if (tpd <= pd_) {
            accept(std::move(trial), std::move(te), tpd);
            step[p] = std::min(1.0, 2.0 * step[p]);
            break;
          }
          step[p] *= 0.5;
          if (++rejections >= control_.max_rejections) {
            std::ostringstream os;
            os << "cycle " << cyc << ": update of " << param.name << " rejected "
               << rejections << " times; parameter frozen for this cycle";
            warnings_.push_back(os.str());
            step[p] = control_.step_for(p);
            break;
          }
        }
        improvement += pd_before - pd_;
      }
      log("cycle", cyc);
      if (!std::isfinite(pd_)) diverged(ev_);
      // Without the joint phase, small steps must not pass for convergence.
      if (!lambda_moved && std::fabs(improvement) < control_.tolerance &&
          (control_.joint_phase || max_decrement < control_.tolerance)) {
        return true;
      }
    }
    return false;
  }

  // Joint quasi-Newton over all coefficients with fixed smoothing parameters.
  bool joint(bool cycles_converged) {
    const double target = 1e-3 * control_.tolerance;
    for (int it = 1; it <= kMaxJointIterations; ++it) {
      const Eigen::MatrixXd H = joint_curvature();
      const Eigen::VectorXd g = penalized_score();
      const ScaledSolver solver(H);
      if (!solver.ok()) {
        warnings_.push_back("joint phase skipped: penalized system is ill-conditioned");
        return cycles_converged;
      }
      const Eigen::VectorXd delta = solver.solve(g);
      const double decrement = g.dot(delta);
      if (decrement < target) return true;

      double step = 1.0;
      bool accepted = false;
      for (int r = 0; r < control_.max_rejections; ++r, step *= 0.5) {
        Stacked trial = beta_;
        Eigen::Index off = 0;
        for (std::size_t p = 0; p < P_; ++p) {
          trial[p] += step * delta.segment(off, beta_[p].size());
          off += beta_[p].size();
        }
        Evaluation te = problem_.evaluate(trial, true);
        const double tpd = te.ok ? te.gd + problem_.penalty(trial, S_) : kInf;
        if (tpd <= pd_) {
          accept(std::move(trial), std::move(te), tpd);
          accepted = true;
          break;
        }
      }
      log("joint", it);
      if (!accepted) return decrement < control_.tolerance;
    }
    return false;
  }

  std::vector<Eigen::Index> offsets() const {
    std::vector<Eigen::Index> offset(P_ + 1, 0);
    for (std::size_t p = 0; p < P_; ++p) offset[p + 1] = offset[p] + beta_[p].size();
    return offset;
  }

  // Stacked BHHH curvature: sum of outer products of the per-row scores, with
  // the curvature floor applied per parameter block.
  Eigen::MatrixXd outer_product_curvature() const {
    const auto offset = offsets();
    const Eigen::Index N = offset[P_];
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index start = 0; start < n_; start += kChunkRows) {
      const Eigen::Index m = std::min(kChunkRows, n_ - start);
      Eigen::MatrixXd V(m, N);
      for (std::size_t p = 0; p < P_; ++p) {
        const auto c = static_cast<Eigen::Index>(p);
        V.middleCols(offset[p], offset[p + 1] - offset[p]) =
            ev_.scores.col(c).segment(start, m).asDiagonal() *
            problem_.design(p).middleRows(start, m);
      }
      H.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
    }
    H = H.selfadjointView<Eigen::Lower>();
    for (std::size_t p = 0; p < P_; ++p) {
      const Eigen::Index c = offset[p + 1] - offset[p];
      const Eigen::MatrixXd& X = problem_.design(p);
      H.block(offset[p], offset[p], c, c) += control_.curvature_floor * (X.transpose() * X);
    }
    return H;
  }

  // Observed information: central differences of the analytic scores with
  // respect to the linear predictors, chained through the designs. Empty when
  // a perturbed point is inadmissible.
  std::optional<Eigen::MatrixXd> observed_curvature() const {
    const Eigen::MatrixXd eta = problem_.predictors(beta_);
    std::vector<Eigen::MatrixXd> dscore(P_);
    for (std::size_t q = 0; q < P_; ++q) {
      const auto cq = static_cast<Eigen::Index>(q);
      const Eigen::VectorXd h = (eta.col(cq).array().abs().max(1.0) * 1e-5).matrix();
      Eigen::MatrixXd up = eta, down = eta;
      up.col(cq) += h;
      down.col(cq) -= h;
      const Evaluation a = problem_.evaluate_predictors(up, true);
      const Evaluation b = problem_.evaluate_predictors(down, true);
      if (!a.ok || !b.ok) return std::nullopt;
      dscore[q] = (a.scores - b.scores).array().colwise() / (2.0 * h.array());
    }
    const auto offset = offsets();
    Eigen::MatrixXd H(offset[P_], offset[P_]);
    for (std::size_t p = 0; p < P_; ++p) {
      for (std::size_t q = 0; q <= p; ++q) {
        const Eigen::VectorXd d = -0.5 * (dscore[q].col(static_cast<Eigen::Index>(p)) +
                                          dscore[p].col(static_cast<Eigen::Index>(q)));
        const Eigen::MatrixXd block =
            problem_.design(p).transpose() * d.asDiagonal() * problem_.design(q);
        H.block(offset[p], offset[q], block.rows(), block.cols()) = block;
        H.block(offset[q], offset[p], block.cols(), block.rows()) = block.transpose();
      }
      const Eigen::MatrixXd& X = problem_.design(p);
      const Eigen::Index c = offset[p + 1] - offset[p];
      H.block(offset[p], offset[p], c, c) += control_.curvature_floor * (X.transpose() * X);
    }
    return H;
  }

  void add_penalties(Eigen::MatrixXd& H) const {
    const auto offset = offsets();
    for (std::size_t p = 0; p < P_; ++p) {
      const Eigen::Index c = offset[p + 1] - offset[p];
      H.block(offset[p], offset[p], c, c) += S_[p];
    }
  }

  Eigen::VectorXd penalized_score() const {
    const auto offset = offsets();
    Eigen::VectorXd g(offset[P_]);
    for (std::size_t p = 0; p < P_; ++p) {
      g.segment(offset[p], offset[p + 1] - offset[p]) =
          problem_.design(p).transpose() * ev_.scores.col(static_cast<Eigen::Index>(p)) -
          S_[p] * beta_[p];
    }
    return g;
  }

  // Penalized curvature for the joint step: the observed information when it
  // is positive definite, the outer-product form otherwise.
  Eigen::MatrixXd joint_curvature() const {
    if (auto observed = observed_curvature()) {
      add_penalties(*observed);
      if (ScaledSolver(*observed).ok()) return *observed;
    }
    Eigen::MatrixXd H = outer_product_curvature();
    add_penalties(H);
    return H;
  }

  void accept(Stacked trial, Evaluation te, double tpd) {
    beta_ = std::move(trial);
    ev_ = std::move(te);
    pd_ = tpd;
  }

  [[noreturn]] void diverged(const Evaluation& te) const {
    std::ostringstream os;
    os << "fit diverged";
    if (!te.ok) os << " at row " << te.bad_row << ": " << te.reason;
    os << "; last stable penalized deviance " << pd_;
    throw FitError(os.str(), pd_);
  }

  void log(const char* phase, int iteration) {
    iterations_.push_back({phase, iteration, ev_.gd, pd_});
  }

  FittedModel finish(const ModelFrame& data, bool converged) {
    FittedModel out;
    out.name = model_.spec.name;
    out.model = model_;
    out.coefficients = unstack(model_, beta_);
    out.lambdas = lambdas_;
    for (std::size_t p = 0; p < P_; ++p) {
      const Eigen::MatrixXd A = weighted_cross(
          problem_.design(p), curvature_weights(ev_, p, control_.curvature_floor));
      auto edf = term_edf(model_.parameters[p], A, S_[p]);
      double total = 0.0;
      for (double e : edf) total += e;
      out.term_edf.push_back(std::move(edf));
      out.parameter_edf.push_back(total);
      out.edf_total += total;
    }
    out.global_deviance = ev_.gd;
    out.penalized_deviance = pd_;
    out.n_train = static_cast<std::size_t>(n_);
    out.converged = converged;
    out.cycles = cycles_;
    out.iterations = std::move(iterations_);
    out.warnings = std::move(warnings_);
    const Eigen::MatrixXd H = joint_curvature();
    const ScaledSolver solver(H);
    if (solver.ok()) {
      out.covariance = solver.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(H.rows(), H.cols())));
    } else {
      out.warnings.push_back("penalized curvature is singular; no coefficient covariance");
    }
    const auto covs = model_.spec.covariates();
    out.training_fingerprint = data.fingerprint(covs);
    return out;
  }

  const FitControl& control_;
  RealizedModel model_;
  Problem problem_;
  Eigen::Index n_ = 0;
  std::size_t P_ = 0;
  Lambdas lambdas_;
  std::vector<Eigen::MatrixXd> S_;
  Stacked beta_;
  Evaluation ev_;
  double pd_ = kInf;
  int cycles_ = 0;
  std::vector<IterationRecord> iterations_;
  std::vector<std::string> warnings_;
};

void check_response(const ModelFrame& data) {
  if (data.rows() == 0 || !data.has_response()) throw DataError("fit: no observations");
  const auto y = data.response();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(std::isfinite(y[i]) && y[i] > 0.0)) {
      std::ostringstream os;
      os << "fit: response at row " << i << " must be positive and finite, got " << y[i];
      throw DataError(os.str());
    }
  }
}

}  // namespace

double loglik(const ModelFrame& data, const RealizedModel& model, const Coefficients& coeffs) {
  const Problem problem(model, data);
  const Evaluation ev = problem.evaluate(stack(model, coeffs), false);
  if (!ev.ok) {
    std::ostringstream os;
    os << "inadmissible parameters at row " << ev.bad_row << ": " << ev.reason;
    throw NumericalError(os.str(), kInf);
  }
  return -0.5 * ev.gd;
}

double penalized_loglik(const ModelFrame& data, const RealizedModel& model,
                        const Coefficients& coeffs, const Lambdas& lambdas) {
  const double l = loglik(data, model, coeffs);
  if (lambdas.size() != model.parameters.size()) {
    throw ConfigError("lambdas do not match the number of parameters");
  }
  const Problem problem(model, data);
  return l - 0.5 * problem.penalty(stack(model, coeffs), penalties(model, lambdas));
}

FittedModel fit(const ModelFrame& data, const ModelSpec& spec, const FitControl& control) {
  check_response(data);
  Fitter fitter(data, spec, control);
  return fitter.run(data);
}

Lambdas select_lambda(const ModelFrame& data, const ModelSpec& spec, const FitControl& control) {
  bool any = false;
  for (const auto& p : spec.parameters) {
    for (const auto& t : p.terms) any = any || t.select;
  }
  if (!any) throw ConfigError("select_lambda: no term is marked for selection");
  FitControl c = control;
  c.select_lambda = true;
  return fit(data, spec, c).lambdas;
}

EdfSummary effective_df(const FittedModel& fitted) {
  return {fitted.parameter_edf, fitted.term_edf, fitted.edf_total};
}

std::vector<double> ParameterTable::row(Eigen::Index i) const {
  std::vector<double> out(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index c = 0; c < values.cols(); ++c) out[static_cast<std::size_t>(c)] = values(i, c);
  return out;
}

Eigen::VectorXd ParameterTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c] == name) return values.col(static_cast<Eigen::Index>(c));
  }
  throw ConfigError("no parameter column '" + name + "'");
}

Eigen::MatrixXd predict_predictors(const FittedModel& fitted, const ModelFrame& newdata) {
  const auto& model = fitted.model;
  const Stacked beta = stack(model, fitted.coefficients);
  Eigen::MatrixXd eta(static_cast<Eigen::Index>(newdata.rows()),
                      static_cast<Eigen::Index>(model.parameters.size()));
  for (std::size_t p = 0; p < model.parameters.size(); ++p) {
    eta.col(static_cast<Eigen::Index>(p)) = model.parameters[p].design(newdata) * beta[p];
  }
  return eta;
}

ParameterTable predict_params(const FittedModel& fitted, const ModelFrame& newdata) {
  const Eigen::MatrixXd eta = predict_predictors(fitted, newdata);
  const auto& params = fitted.model.parameters;
  ParameterTable out{fitted.parameter_names(), Eigen::MatrixXd(eta.rows(), eta.cols())};
  std::vector<double> theta(params.size());
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto c = static_cast<Eigen::Index>(p);
      theta[p] = params[p].link.linkinv(eta(i, c));
      out.values(i, c) = theta[p];
    }
    if (!fitted.family().admissible(theta)) {
      std::ostringstream os;
      os << "predicted parameters are inadmissible at row " << i;
      throw ParameterError(os.str());
    }
  }
  return out;
}

ParameterTable standard_errors(const FittedModel& fitted, const ModelFrame& at) {
  const auto covs = fitted.model.spec.covariates();
  if (at.rows() != fitted.n_train || at.fingerprint(covs) != fitted.training_fingerprint) {
    throw UnsupportedError(
        "standard errors are available for the training rows only, not for new covariate values");
  }
  const auto& params = fitted.model.parameters;
  const Eigen::Index total = static_cast<Eigen::Index>(fitted.model.total_columns());
  if (fitted.covariance.rows() != total || fitted.covariance.cols() != total) {
    throw UnsupportedError("model carries no coefficient covariance");
  }
  const Eigen::MatrixXd eta = predict_predictors(fitted, at);
  ParameterTable out{fitted.parameter_names(), Eigen::MatrixXd(eta.rows(), eta.cols())};
  Eigen::Index off = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto c = static_cast<Eigen::Index>(p);
    const Eigen::MatrixXd X = params[p].design(at);
    const Eigen::MatrixXd V = fitted.covariance.block(off, off, X.cols(), X.cols());
    const Eigen::VectorXd var = ((X * V).array() * X.array()).rowwise().sum();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out.values(i, c) = params[p].link.dinvlink_deta(eta(i, c)) * std::sqrt(std::max(0.0, var(i)));
    }
    off += X.cols();
  }
  return out;
}

}  // namespace egpd
