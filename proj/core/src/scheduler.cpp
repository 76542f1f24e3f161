#include "crawlsched/scheduler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crawl {

namespace {
// Wake times are pulled slightly earlier than the computed crossing so that
// bisection resolution can never leave a page asleep past its crossing.
constexpr double kWakeSafety = 1e-9;
// Fresh estimates sit this far below the recent winning values; the gap
// absorbs downward drift without exact-mode fallbacks.
constexpr double kThresholdMargin = 0.9;
// Winning values are watched over this many ticks before the bound may be
// raised, and a raise must clear this factor. Both dampen churn: every
// threshold change invalidates the memoized wake-time inversions.
constexpr int kThresholdWindow = 64;
constexpr double kThresholdRaise = 1.25;
// Wake-time inversions stop bracketing here; a crossing farther out is
// reported as a (safe, early) wake at this horizon instead.
constexpr double kWakeBracketCap = 1e7;
}  // namespace

GreedyScheduler::GreedyScheduler(std::span<const PageParams> pages,
                                 SchedulerConfig config, double start_time)
    : params_(pages.begin(), pages.end()), config_(config) {
  if (params_.empty())
    throw std::invalid_argument("GreedyScheduler: empty page set");
  states_.assign(params_.size(), PageState{start_time, 0});
  awake_.assign(params_.size(), 1);
  version_.assign(params_.size(), 0);
  per_page_evals_.assign(params_.size(), 0);
  wake_tau_cache_.assign(params_.size(), 0.0);
  wake_tau_thresh_.assign(params_.size(), -1.0);
  active_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i)
    active_[i] = static_cast<int>(i);
  threshold_est_ = 0.0;
}

double GreedyScheduler::value_of(int page, double t) const {
  ++evals_;
  ++per_page_evals_[page];
  const PageParams& p = params_[page];
  const PageState& s = states_[page];
  const double elapsed = std::max(0.0, t - s.last_crawl);
  switch (config_.variant) {
    case ValueVariant::Greedy:
      return crawl_value(elapsed, p, ValueVariant::Greedy);
    case ValueVariant::GreedyCis:
      // Two-state rule: any CIS since the last crawl pins the effective
      // time at infinity.
      if (s.cis_count > 0) return p.mu_tilde / p.delta;
      return crawl_value(elapsed, p, ValueVariant::GreedyCis);
    case ValueVariant::GreedyNcis: {
      if (std::isinf(p.beta) && s.cis_count > 0) return p.mu_tilde / p.delta;
      const double eff = elapsed + p.beta * s.cis_count;
      return crawl_value(eff, p, ValueVariant::GreedyNcis,
                         config_.approx_level);
    }
  }
  throw std::logic_error("GreedyScheduler: unknown variant");
}

void GreedyScheduler::on_cis(int page, double t) {
  PageState& s = states_[page];
  if (t - s.last_crawl <= config_.t_delay) return;  // delay filter: discard
  ++s.cis_count;
  if (config_.index_mode == IndexMode::Lazy && !awake_[page]) {
    // The value jumped; re-examine the page at the next tick.
    awake_[page] = 1;
    ++version_[page];
    active_.push_back(page);
  }
}

int GreedyScheduler::add_page(const PageParams& params, double t) {
  params_.push_back(params);
  states_.push_back(PageState{t, 0});
  awake_.push_back(1);
  version_.push_back(0);
  per_page_evals_.push_back(0);
  wake_tau_cache_.push_back(0.0);
  wake_tau_thresh_.push_back(-1.0);
  const int idx = static_cast<int>(params_.size()) - 1;
  active_.push_back(idx);
  return idx;
}

int GreedyScheduler::select(double t) {
  return config_.index_mode == IndexMode::Exact ? select_exact(t)
                                                : select_lazy(t);
}

int GreedyScheduler::select_exact(double t) {
  int best = 0;
  double best_val = value_of(0, t);
  for (int i = 1; i < page_count(); ++i) {
    const double v = value_of(i, t);
    if (v > best_val) {
      best = i;
      best_val = v;
    }
  }
  states_[best].last_crawl = t;
  states_[best].cis_count = 0;
  return best;
}

double GreedyScheduler::wake_time_for(int page) const {
  const PageParams& p = params_[page];
  const PageState& s = states_[page];
  const double sup = p.mu_tilde / p.delta;

  const bool pinned =
      (config_.variant == ValueVariant::GreedyCis && s.cis_count > 0) ||
      (config_.variant == ValueVariant::GreedyNcis && std::isinf(p.beta) &&
       s.cis_count > 0);
  if (pinned) {
    // Constant value sup: either a permanent contender or never one.
    return sup >= threshold_est_ ? -std::numeric_limits<double>::infinity()
                                 : std::numeric_limits<double>::infinity();
  }

  if (threshold_est_ >= sup) return std::numeric_limits<double>::infinity();

  Threshold tau;
  if (wake_tau_thresh_[page] == threshold_est_) {
    tau = wake_tau_cache_[page];
  } else {
    tau = invert_value(threshold_est_, p, config_.variant,
                       config_.approx_level, kWakeBracketCap);
    // The crossing exists (threshold < sup) but lies past the bracket cap;
    // an early wake at the cap is safe.
    if (std::isinf(tau)) tau = kWakeBracketCap;
    wake_tau_cache_[page] = tau;
    wake_tau_thresh_[page] = threshold_est_;
  }
  double offset = tau;
  if (config_.variant == ValueVariant::GreedyNcis)
    offset = tau - p.beta * s.cis_count;
  return s.last_crawl + offset - kWakeSafety;
}

void GreedyScheduler::wake_all() {
  active_.clear();
  for (int i = 0; i < page_count(); ++i) {
    if (!awake_[i]) {
      awake_[i] = 1;
      ++version_[i];
    }
    active_.push_back(i);
  }
  heap_ = {};
}

void GreedyScheduler::sleep_or_keep_awake(int page, double t) {
  const double wake = wake_time_for(page);
  if (wake <= t) return;  // still a contender; stays awake
  awake_[page] = 0;
  ++version_[page];
  if (!std::isinf(wake))
    heap_.push(HeapEntry{wake, version_[page], page});
}

int GreedyScheduler::select_lazy(double t) {
  while (!heap_.empty() && heap_.top().wake <= t) {
    const HeapEntry e = heap_.top();
    heap_.pop();
    if (e.version == version_[e.page] && !awake_[e.page]) {
      awake_[e.page] = 1;
      ++version_[e.page];
      active_.push_back(e.page);
    }
  }

  std::vector<double> vals(active_.size());
  int best = -1;
  double best_val = -1.0;
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const double v = value_of(active_[k], t);
    vals[k] = v;
    if (v > best_val || (v == best_val && active_[k] < best)) {
      best = active_[k];
      best_val = v;
    }
  }

  if (best < 0 || best_val < threshold_est_) {
    // Bound invalidated (winning values dropped below the estimate):
    // fall back to an exact sweep and rebuild the index.
    wake_all();
    vals.resize(active_.size());
    best = -1;
    best_val = -1.0;
    for (std::size_t k = 0; k < active_.size(); ++k) {
      const double v = value_of(active_[k], t);
      vals[k] = v;
      if (v > best_val || (v == best_val && active_[k] < best)) {
        best = active_[k];
        best_val = v;
      }
    }
    // Winning values fell below the bound: restart well underneath them.
    threshold_est_ = 0.5 * best_val;
    recent_min_win_ = std::numeric_limits<double>::infinity();
    window_count_ = 0;
  } else {
    recent_min_win_ = std::min(recent_min_win_, best_val);
    if (++window_count_ >= kThresholdWindow) {
      const double cand = kThresholdMargin * recent_min_win_;
      if (cand > kThresholdRaise * threshold_est_) threshold_est_ = cand;
      recent_min_win_ = std::numeric_limits<double>::infinity();
      window_count_ = 0;
    }
  }

  states_[best].last_crawl = t;
  states_[best].cis_count = 0;

  std::vector<int> survivors;
  survivors.reserve(active_.size());
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const int page = active_[k];
    if (page == best || vals[k] < threshold_est_) {
      sleep_or_keep_awake(page, t);
      if (awake_[page]) survivors.push_back(page);
    } else {
      survivors.push_back(page);
    }
  }
  active_ = std::move(survivors);
  return best;
}

LdsScheduler::LdsScheduler(std::vector<double> rates, double R)
    : rates_(std::move(rates)), counts_(rates_.size(), 0) {
  if (rates_.empty()) throw std::invalid_argument("LdsScheduler: no rates");
  double sum = 0.0;
  for (double r : rates_) sum += r;
  if (std::abs(sum - R) > 1e-6 * R)
    throw std::invalid_argument("LdsScheduler: rates do not sum to R");
}

int LdsScheduler::select(double t) {
  int best = 0;
  double best_deficit = rates_[0] * t - counts_[0];
  for (std::size_t i = 1; i < rates_.size(); ++i) {
    const double d = rates_[i] * t - counts_[i];
    if (d > best_deficit) {
      best = static_cast<int>(i);
      best_deficit = d;
    }
  }
  ++counts_[best];
  return best;
}

}  // namespace crawl
