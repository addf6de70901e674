#include "egpd/frame.hpp"

#include <bit>
#include <sstream>

#include "egpd/error.hpp"

namespace egpd {

namespace {

// FNV-1a over raw bytes.
void mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::size_t ModelFrame::rows() const {
  if (!response_.empty()) return response_.size();
  if (!covariates_.empty()) return covariates_.begin()->second.size();
  return 0;
}

void ModelFrame::check_length(std::size_t n) const {
  const bool empty = response_.empty() && covariates_.empty();
  if (!empty && n != rows()) {
    std::ostringstream os;
    os << "column length " << n << " does not match frame length " << rows();
    throw DataError(os.str());
  }
}

void ModelFrame::set_response(std::vector<double> response) {
  if (!covariates_.empty()) {
    if (response.size() != covariates_.begin()->second.size()) {
      throw DataError("response length does not match covariates");
    }
  }
  response_ = std::move(response);
}

void ModelFrame::add_covariate(const std::string& name, std::vector<double> values) {
  check_length(values.size());
  covariates_[name] = std::move(values);
}

std::span<const double> ModelFrame::covariate(const std::string& name) const {
  auto it = covariates_.find(name);
  if (it == covariates_.end()) throw ConfigError("missing covariate '" + name + "'");
  return it->second;
}

ModelFrame ModelFrame::subset(std::span<const std::size_t> rows) const {
  ModelFrame out;
  if (!response_.empty()) {
    std::vector<double> r;
    r.reserve(rows.size());
    for (auto i : rows) r.push_back(response_.at(i));
    out.response_ = std::move(r);
  }
  for (const auto& [name, col] : covariates_) {
    std::vector<double> c;
    c.reserve(rows.size());
    for (auto i : rows) c.push_back(col.at(i));
    out.covariates_[name] = std::move(c);
  }
  return out;
}

std::uint64_t ModelFrame::fingerprint(std::span<const std::string> names) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  mix(h, rows());
  for (const auto& name : names) {
    for (char c : name) mix(h, static_cast<unsigned char>(c));
    for (double v : covariate(name)) mix(h, std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

}  // namespace egpd
