#pragma once

#include <string>

namespace egpd {

// Monotone link between a distribution parameter theta and its additive
// predictor eta = link(theta).
class LinkFunction {
 public:
  enum class Kind { Identity, Log, ShiftedLog, Logit };

  // |eta| is clamped to this bound (-log of double epsilon) before inversion.
  static constexpr double kEtaBound = 36.04365338911715;
  static constexpr double kDefaultShift = 0.0001;

  LinkFunction() = default;
  static LinkFunction identity() { return LinkFunction(Kind::Identity, 0.0); }
  static LinkFunction log() { return LinkFunction(Kind::Log, 0.0); }
  static LinkFunction shifted_log(double shift = kDefaultShift) {
    return LinkFunction(Kind::ShiftedLog, shift);
  }
  static LinkFunction logit() { return LinkFunction(Kind::Logit, 0.0); }

  // Parses "identity", "log", "logit", "shifted-log" or "shifted-log:<shift>".
  static LinkFunction parse(const std::string& name);

  Kind kind() const noexcept { return kind_; }
  double shift() const noexcept { return shift_; }
  std::string name() const;

  double linkfun(double theta) const;
  double linkinv(double eta) const;
  double dinvlink_deta(double eta) const;
  // True when theta lies inside the range the link maps onto.
  bool valid_theta(double theta) const;

  friend bool operator==(const LinkFunction&, const LinkFunction&) = default;

 private:
  LinkFunction(Kind kind, double shift) : kind_(kind), shift_(shift) {}

  Kind kind_ = Kind::Identity;
  double shift_ = 0.0;
};

inline double linkfun(double theta, const LinkFunction& link) { return link.linkfun(theta); }
inline double linkinv(double eta, const LinkFunction& link) { return link.linkinv(eta); }
inline double dinvlink_deta(double eta, const LinkFunction& link) {
  return link.dinvlink_deta(eta);
}

}  // namespace egpd
