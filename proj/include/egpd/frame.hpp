#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace egpd {

// Response vector plus named numeric covariate columns of equal length.
// The response may be empty when the frame is only used for prediction.
class ModelFrame {
 public:
  ModelFrame() = default;
  explicit ModelFrame(std::vector<double> response) : response_(std::move(response)) {}

  void set_response(std::vector<double> response);
  void add_covariate(const std::string& name, std::vector<double> values);

  bool has_covariate(const std::string& name) const { return covariates_.contains(name); }
  // ConfigError naming the covariate when absent.
  std::span<const double> covariate(const std::string& name) const;
  std::span<const double> response() const { return response_; }
  bool has_response() const { return !response_.empty(); }
  std::size_t rows() const;

  ModelFrame subset(std::span<const std::size_t> rows) const;
  // Hash over the named covariate columns; identifies the training rows.
  std::uint64_t fingerprint(std::span<const std::string> names) const;

 private:
  void check_length(std::size_t n) const;

  std::vector<double> response_;
  std::map<std::string, std::vector<double>> covariates_;
};

}  // namespace egpd
