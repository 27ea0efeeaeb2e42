#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparseq/errors.hpp"
#include "sparseq/rng.hpp"

namespace sparseq {

struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-6;
};

// epsilon must be positive; delta in [0,1). Composition additionally
// requires delta > 0.
void validate_privacy(const PrivacyParams& p);

struct NoiseSpec {
  // Laplace scale b; b = 0 is the degenerate point mass at 0 and draws
  // nothing from the generator.
  double scale = 0.0;
};

// One draw from the zero-centered Laplace distribution with the given
// scale, via inverse CDF: u uniform on (-1/2, 1/2], return
// -b * sgn(u) * ln(1 - 2|u|).
double laplace_sample(const NoiseSpec& spec, Rng& rng);
inline double laplace_sample(double scale, Rng& rng) { return laplace_sample(NoiseSpec{scale}, rng); }

// value + Lap(sensitivity / epsilon). Zero sensitivity returns the value
// exactly without consuming randomness.
double laplace_mechanism(double value, double sensitivity, double epsilon, Rng& rng);

// Maximal per-step budget under k-fold composition:
// epsilon / sqrt(8 * steps * ln(1/delta)). Requires delta in (0,1);
// delta = 0 has no such guarantee and raises CompositionUndefined.
double compose_budget(std::uint64_t steps, const PrivacyParams& total);

// Tail bound for Y = sum_{i=1}^count q_i * Y_i with Y_i iid Lap(scale) and
// |q_i| <= coeff_bound: a bound on Pr[|Y| >= coeff_bound * alpha].
double laplace_sum_tail(std::uint64_t count, double scale, double coeff_bound, double alpha);

struct BudgetCharge {
  std::string label;
  double epsilon_step = 0.0;
  std::uint64_t count = 0;
};

// Running (epsilon, delta) expenditure ledger. A charge sequence is
// accepted only while every recorded per-step epsilon fits within the
// composition allocation at the current total step count; offending
// charges are rejected without being recorded.
class BudgetAccount {
 public:
  explicit BudgetAccount(PrivacyParams total);

  void charge(const std::string& label, double epsilon_step, std::uint64_t count = 1);

  const PrivacyParams& total() const { return total_; }
  const std::vector<BudgetCharge>& charges() const { return charges_; }
  std::uint64_t total_steps() const { return total_steps_; }
  double max_step_epsilon() const { return max_step_epsilon_; }
  // Per-step cap at the current total step count.
  double allocation() const;

 private:
  PrivacyParams total_;
  std::vector<BudgetCharge> charges_;
  std::uint64_t total_steps_ = 0;
  double max_step_epsilon_ = 0.0;
};

}  // namespace sparseq
