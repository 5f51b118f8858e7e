#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffcap/core/common.hpp"

namespace diffcap {

// Per-step noise variances β_t with derived α_t = 1−β_t and the cumulative
// signal-retention product ᾱ_t = ∏_{i≤t} α_i. Timestep arguments are 1-based;
// ᾱ_0 is defined as 1 (the noiseless limit).
class VarianceSchedule {
 public:
  // Empty placeholder (T() == 0); every accessor on it range-fails. Real
  // schedules come from make() / unchecked() / from_json().
  VarianceSchedule() : T_(0), kind_("unset") {}

  static VarianceSchedule make(int T, const std::string& kind, double beta_start, double beta_end) {
    check(T >= 1, ErrorKind::config, "schedule: T must be >= 1");
    check(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0, ErrorKind::config,
          "schedule: need 0 < beta_start <= beta_end < 1");
    std::vector<double> beta(static_cast<std::size_t>(T));
    if (kind == "linear") {
      for (int t = 1; t <= T; ++t)
        beta[t - 1] = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * (t - 1) / (T - 1);
    } else if (kind == "constant") {
      for (auto& b : beta) b = beta_start;
    } else if (kind == "cosine") {
      // Squared-cosine signal curve; beta_start/beta_end only clamp the tails.
      auto f = [T](double t) {
        double v = std::cos((t / T + 0.008) / 1.008 * 1.5707963267948966);
        return v * v;
      };
      double prev = 1.0;
      for (int t = 1; t <= T; ++t) {
        double cur = f(static_cast<double>(t)) / f(0.0);
        double b = 1.0 - cur / prev;
        beta[t - 1] = std::min(std::max(b, beta_start), 0.999);
        prev *= 1.0 - beta[t - 1];
      }
    } else {
      fail(ErrorKind::config, "schedule: unknown kind '" + kind + "'");
    }
    return VarianceSchedule(T, kind, std::move(beta), /*validate=*/true);
  }

  // Skips the β ∈ (0,1) guard; exists so tests can probe the β=0 noiseless
  // edge cases of the forward process.
  static VarianceSchedule unchecked(std::vector<double> beta, std::string kind = "custom") {
    const int T = static_cast<int>(beta.size());
    return VarianceSchedule(T, std::move(kind), std::move(beta), /*validate=*/false);
  }

  int T() const { return T_; }
  const std::string& kind() const { return kind_; }

  double beta(int t) const {
    check(1 <= t && t <= T_, ErrorKind::range, "schedule: t=" + std::to_string(t) + " outside [1, T]");
    return beta_[static_cast<std::size_t>(t - 1)];
  }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const {
    if (t == 0) return 1.0;
    check(1 <= t && t <= T_, ErrorKind::range, "schedule: t=" + std::to_string(t) + " outside [0, T]");
    return alpha_bar_[static_cast<std::size_t>(t - 1)];
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["T"] = T_;
    j["kind"] = kind_;
    j["beta"] = beta_;
    return j;
  }

  static VarianceSchedule from_json(const nlohmann::json& j) {
    int T = j.at("T").get<int>();
    auto beta = j.at("beta").get<std::vector<double>>();
    check(static_cast<int>(beta.size()) == T, ErrorKind::config, "schedule json: beta length != T");
    return VarianceSchedule(T, j.at("kind").get<std::string>(), std::move(beta), /*validate=*/true);
  }

 private:
  VarianceSchedule(int T, std::string kind, std::vector<double> beta, bool validate)
      : T_(T), kind_(std::move(kind)), beta_(std::move(beta)) {
    if (validate)
      for (double b : beta_) check(0.0 < b && b < 1.0, ErrorKind::config, "schedule: beta outside (0, 1)");
    alpha_bar_.resize(beta_.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < beta_.size(); ++i) {
      prod *= 1.0 - beta_[i];
      alpha_bar_[i] = prod;
    }
  }

  int T_;
  std::string kind_;
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

}  // namespace diffcap
