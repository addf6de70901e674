#include "egpd/links.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "egpd/error.hpp"

namespace egpd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double clamp_eta(double eta) {
  return std::clamp(eta, -LinkFunction::kEtaBound, LinkFunction::kEtaBound);
}

[[noreturn]] void out_of_range(const LinkFunction& link, double theta) {
  std::ostringstream os;
  os << "linkfun(" << link.name() << "): parameter value " << theta << " outside the link range";
  throw DomainError(os.str());
}

}  // namespace

LinkFunction LinkFunction::parse(const std::string& name) {
  if (name == "identity") return identity();
  if (name == "log") return log();
  if (name == "logit") return logit();
  if (name == "shifted-log" || name == "own") return shifted_log();
  const std::string prefix = "shifted-log:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string arg = name.substr(prefix.size());
    char* end = nullptr;
    const double shift = std::strtod(arg.c_str(), &end);
    if (arg.empty() || *end != '\0' || !std::isfinite(shift)) {
      throw ConfigError("invalid shift in link '" + name + "'");
    }
    return shifted_log(shift);
  }
  throw ConfigError("unknown link function '" + name + "'");
}

std::string LinkFunction::name() const {
  switch (kind_) {
    case Kind::Identity: return "identity";
    case Kind::Log: return "log";
    case Kind::Logit: return "logit";
    case Kind::ShiftedLog: {
      std::ostringstream os;
      os.precision(17);
      os << "shifted-log:" << shift_;
      return os.str();
    }
  }
  return "unknown";
}

bool LinkFunction::valid_theta(double theta) const {
  if (!std::isfinite(theta)) return false;
  switch (kind_) {
    case Kind::Identity: return true;
    case Kind::Log: return theta > 0.0;
    case Kind::ShiftedLog: return theta > shift_;
    case Kind::Logit: return theta > 0.0 && theta < 1.0;
  }
  return false;
}

double LinkFunction::linkfun(double theta) const {
  if (!valid_theta(theta)) out_of_range(*this, theta);
  switch (kind_) {
    case Kind::Identity: return theta;
    case Kind::Log: return std::log(theta);
    case Kind::ShiftedLog: return std::log(theta - shift_);
    case Kind::Logit: return std::log(theta / (1.0 - theta));
  }
  return theta;
}

double LinkFunction::linkinv(double eta) const {
  switch (kind_) {
    case Kind::Identity: return eta;
    case Kind::Log: return std::exp(clamp_eta(eta));
    case Kind::ShiftedLog: return std::exp(clamp_eta(eta)) + shift_;
    case Kind::Logit: return 1.0 / (1.0 + std::exp(-clamp_eta(eta)));
  }
  return eta;
}

double LinkFunction::dinvlink_deta(double eta) const {
  switch (kind_) {
    case Kind::Identity: return 1.0;
    case Kind::Log:
    case Kind::ShiftedLog: return std::max(std::exp(clamp_eta(eta)), kEps);
    case Kind::Logit: {
      const double p = 1.0 / (1.0 + std::exp(-clamp_eta(eta)));
      return std::max(p * (1.0 - p), kEps);
    }
  }
  return 1.0;
}

}  // namespace egpd
