#include "sparseq/interactive.hpp"

#include <cmath>
#include <limits>

namespace sparseq {

namespace {

void validate_config(const SessionConfig& config, bool need_n) {
  validate_privacy(config.privacy);
  if (!(config.beta > 0.0) || !(config.beta < 1.0)) {
    fail(Errc::validation_error, "beta must lie in (0, 1)");
  }
  if (config.max_queries == 0) {
    fail(Errc::validation_error, "query limit k must be at least 1");
  }
  if (config.max_sparsity == 0) {
    fail(Errc::validation_error, "sparsity cap m must be at least 1");
  }
  if (need_n && config.database_size == 0) {
    fail(Errc::validation_error, "database size n must be at least 1");
  }
  if (config.privacy.delta == 0.0) {
    fail(Errc::composition_undefined, "the interactive mechanism requires delta > 0");
  }
  if (config.forced_alpha &&
      (!(*config.forced_alpha > 0.0) || *config.forced_alpha > 1.0)) {
    fail(Errc::validation_error, "forced alpha must lie in (0, 1]");
  }
}

}  // namespace

double solve_alpha(const SessionConfig& config,
                   const std::function<double(double)>& bound_of_alpha) {
  validate_config(config, /*need_n=*/true);
  const double log_terms =
      std::log(4.0 / config.privacy.delta) *
      std::log(static_cast<double>(config.max_queries) / config.beta);
  const double denom = config.privacy.epsilon * static_cast<double>(config.database_size);

  auto rhs = [&](double alpha) -> double {
    const double bound = bound_of_alpha(alpha);
    if (!std::isfinite(bound)) return std::numeric_limits<double>::infinity();
    return 3000.0 * std::sqrt(bound) * log_terms / denom;
  };

  if (rhs(1.0) > 1.0) {
    fail(Errc::infeasible, "no alpha <= 1 satisfies the accuracy equation (n too small)");
  }
  double lo = 0.0;   // rhs above the diagonal
  double hi = 1.0;   // rhs at or below the diagonal
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mid - rhs(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double solve_alpha(const SessionConfig& config) {
  const std::uint64_t m = config.max_sparsity;
  return solve_alpha(config, [m](double alpha) -> double {
    // Below this alpha the structure size leaves the representable range;
    // treat the bound as infinite so bisection moves up.
    if (4.0 * static_cast<double>(m) / (alpha * alpha) > 1e15) {
      return std::numeric_limits<double>::infinity();
    }
    return smw_bound(m, alpha);
  });
}

Session::Session(const Database& db, SessionConfig config)
    : db_(&db),
      config_(std::move(config)),
      rng_(config_.seed ? Rng::seeded(*config_.seed) : Rng::system()) {
  if (db.empty()) {
    fail(Errc::empty_database, "cannot open a session on an empty database");
  }
  config_.database_size = db.total;
  validate_config(config_, /*need_n=*/true);

  alpha_ = config_.forced_alpha ? *config_.forced_alpha : solve_alpha(config_);
  threshold_ = 0.75 * alpha_;
  // Scale so that all k answer draws stay within alpha/4 with probability
  // at least 1 - beta/2.
  const double ln2k = std::log(2.0 * static_cast<double>(config_.max_queries) / config_.beta);
  noise_scale_ = config_.mode == SessionMode::private_mode ? alpha_ / (4.0 * ln2k) : 0.0;

  state_ = smw_init(config_.max_sparsity, alpha_ / 2.0);
  update_limit_ = config_.forced_update_limit.value_or(
      static_cast<std::uint64_t>(std::ceil(smw_bound(config_.max_sparsity, alpha_ / 2.0))));

  if (config_.mode == SessionMode::private_mode) {
    budget_.emplace(config_.privacy);
    const std::uint64_t charge_steps =
        config_.charge_policy == ChargePolicy::all_queries ? config_.max_queries : update_limit_;
    charge_epsilon_ = compose_budget(charge_steps, config_.privacy);
  }
}

double Session::answer(const SparseQuery& q) {
  if (transcript_.size() >= config_.max_queries) {
    fail(Errc::query_limit_reached,
         "session already answered k = " + std::to_string(config_.max_queries) + " queries");
  }
  if (sparsity(q) > config_.max_sparsity) {
    fail(Errc::sparsity_exceeded, "query sparsity " + std::to_string(sparsity(q)) +
                                      " exceeds cap " + std::to_string(config_.max_sparsity));
  }
  const std::uint64_t ops_before = state_.ops;
  const double exact = evaluate_exact(q, *db_);
  const double estimate = smw_evaluate(state_, q);

  double noisy = exact;
  if (config_.mode == SessionMode::private_mode) {
    noisy += laplace_sample(noise_scale_, rng_);
    if (config_.charge_policy == ChargePolicy::all_queries) {
      budget_->charge("answer", charge_epsilon_);
    }
  }

  double result;
  bool was_update = false;
  if (std::fabs(noisy - estimate) >= threshold_) {
    if (updates_ >= update_limit_) {
      // In noise-disabled mode the update-count bound makes this
      // unreachable; in private mode it is the beta-failure event.
      fail(Errc::update_budget_exhausted,
           "update budget " + std::to_string(update_limit_) + " exhausted");
    }
    if (config_.mode == SessionMode::private_mode &&
        config_.charge_policy == ChargePolicy::updates_only) {
      budget_->charge("update", charge_epsilon_);
    }
    smw_update(state_, q, noisy);
    ++updates_;
    was_update = true;
    result = noisy;
  } else {
    result = estimate;
  }

  transcript_.push_back({q, result, was_update});
  last_answer_ops_ = state_.ops - ops_before;
  return result;
}

}  // namespace sparseq
