#include "sparseq/privacy.hpp"

#include <cmath>

namespace sparseq {

void validate_privacy(const PrivacyParams& p) {
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) {
    fail(Errc::validation_error, "epsilon must be positive and finite");
  }
  if (!(p.delta >= 0.0) || !(p.delta < 1.0)) {
    fail(Errc::validation_error, "delta must lie in [0, 1)");
  }
}

double laplace_sample(const NoiseSpec& spec, Rng& rng) {
  if (spec.scale < 0.0 || !std::isfinite(spec.scale)) {
    fail(Errc::validation_error, "Laplace scale must be nonnegative and finite");
  }
  if (spec.scale == 0.0) return 0.0;
  const double u = 0.5 - rng.next_unit_open();  // uniform on (-1/2, 1/2)
  const double sign = (u >= 0.0) ? 1.0 : -1.0;
  return -spec.scale * sign * std::log(1.0 - 2.0 * std::fabs(u));
}

double laplace_mechanism(double value, double sensitivity, double epsilon, Rng& rng) {
  if (sensitivity < 0.0) {
    fail(Errc::validation_error, "sensitivity must be nonnegative");
  }
  if (!(epsilon > 0.0)) {
    fail(Errc::validation_error, "epsilon must be positive");
  }
  if (sensitivity == 0.0) return value;
  return value + laplace_sample(NoiseSpec{sensitivity / epsilon}, rng);
}

double compose_budget(std::uint64_t steps, const PrivacyParams& total) {
  validate_privacy(total);
  if (steps == 0) {
    fail(Errc::validation_error, "composition needs at least one step");
  }
  if (total.delta == 0.0) {
    fail(Errc::composition_undefined, "composition requires delta > 0");
  }
  return total.epsilon / std::sqrt(8.0 * static_cast<double>(steps) * std::log(1.0 / total.delta));
}

double laplace_sum_tail(std::uint64_t count, double scale, double coeff_bound, double alpha) {
  if (count == 0) fail(Errc::validation_error, "count must be at least 1");
  if (!(scale > 0.0)) fail(Errc::validation_error, "scale must be positive");
  if (!(coeff_bound > 0.0)) fail(Errc::validation_error, "coefficient bound must be positive");
  if (!(alpha > 0.0)) fail(Errc::validation_error, "alpha must be positive");
  const double t = static_cast<double>(count);
  if (alpha <= t * scale) {
    return std::exp(-(alpha * alpha) / (6.0 * t * scale * scale));
  }
  return std::exp(-alpha / (6.0 * scale));
}

BudgetAccount::BudgetAccount(PrivacyParams total) : total_(total) {
  validate_privacy(total_);
  if (total_.delta == 0.0) {
    fail(Errc::composition_undefined, "budget accounting requires delta > 0");
  }
}

double BudgetAccount::allocation() const {
  if (total_steps_ == 0) return total_.epsilon;
  return compose_budget(total_steps_, total_);
}

void BudgetAccount::charge(const std::string& label, double epsilon_step, std::uint64_t count) {
  if (!(epsilon_step > 0.0) || count == 0) {
    fail(Errc::validation_error, "charges need positive epsilon and count");
  }
  const std::uint64_t prospective_steps = total_steps_ + count;
  const double cap = compose_budget(prospective_steps, total_);
  const double prospective_max = std::max(max_step_epsilon_, epsilon_step);
  if (prospective_max > cap * (1.0 + 1e-12)) {
    fail(Errc::budget_exceeded,
         "per-step epsilon " + std::to_string(prospective_max) + " exceeds the composition cap " +
             std::to_string(cap) + " at " + std::to_string(prospective_steps) + " steps");
  }
  charges_.push_back({label, epsilon_step, count});
  total_steps_ = prospective_steps;
  max_step_epsilon_ = prospective_max;
}

}  // namespace sparseq
