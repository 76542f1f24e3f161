#include "crawlsched/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace crawl {

double Dist::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Const:
      return a;
    case Kind::Uniform:
      return rng.uniform(a, b);
    case Kind::Beta:
      return rng.beta(a, b);
  }
  throw std::logic_error("Dist: unknown kind");
}

void EventTrace::sort_events() {
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) {
              if (a.t != b.t) return a.t < b.t;
              if (a.kind != b.kind) return a.kind < b.kind;
              return a.page < b.page;
            });
}

std::vector<PageParams> draw_page_params(const InstanceSpec& spec, Rng& rng) {
  std::vector<PageParams> pages;
  pages.reserve(spec.m);
  for (int i = 0; i < spec.m; ++i) {
    double delta;
    do {
      delta = spec.delta.sample(rng);
    } while (delta <= 0.0);
    const double mu = spec.mu.sample(rng);
    const double lam = std::clamp(spec.lambda.sample(rng), 0.0, 1.0);
    const double nu = std::max(0.0, spec.nu.sample(rng));
    pages.push_back(PageParams::from_raw(delta, mu, lam, nu));
  }
  normalize_importance(pages);
  return pages;
}

namespace {

double sample_delay(const DelaySpec& d, Rng& rng) {
  switch (d.law) {
    case DelaySpec::Law::None:
      return 0.0;
    case DelaySpec::Law::Poisson:
      return static_cast<double>(rng.poisson(d.mean));
    case DelaySpec::Law::Exponential:
      return d.mean > 0.0 ? rng.exponential(1.0 / d.mean) : 0.0;
  }
  return 0.0;
}

}  // namespace

EventTrace generate_trace(const InstanceSpec& spec,
                          std::span<const PageParams> pages,
                          std::uint64_t seed) {
  EventTrace trace;
  trace.horizon = spec.horizon;
  trace.m = static_cast<int>(pages.size());
  Rng rng(seed);
  const double T = spec.horizon;

  for (int i = 0; i < trace.m; ++i) {
    const PageParams& p = pages[i];
    // Change process; each change emits a true CIS with probability lam.
    for (double t = rng.exponential(p.delta); t <= T;
         t += rng.exponential(p.delta)) {
      trace.events.push_back({t, i, EventTrace::Change});
      if (rng.uniform() < p.lam) {
        const double tc = t + sample_delay(spec.cis_delay, rng);
        if (tc <= T) trace.events.push_back({tc, i, EventTrace::Cis});
      }
    }
    // False-positive CIS process.
    for (double t = rng.exponential(p.nu); t <= T;
         t += rng.exponential(p.nu)) {
      const double tc = t + sample_delay(spec.cis_delay, rng);
      if (tc <= T) trace.events.push_back({tc, i, EventTrace::Cis});
    }
    // Request process.
    for (double t = rng.exponential(p.mu); t <= T;
         t += rng.exponential(p.mu)) {
      trace.events.push_back({t, i, EventTrace::Request});
    }
  }
  trace.sort_events();
  return trace;
}

void export_trace(const EventTrace& trace, std::ostream& out) {
  static const char* kNames[] = {"change", "cis", "request"};
  out << "# crawlsched-trace v1 m=" << trace.m << " horizon=" << trace.horizon
      << "\n";
  char buf[64];
  for (const auto& e : trace.events) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.t);
    out << buf << ' ' << e.page << ' ' << kNames[e.kind] << '\n';
  }
}

EventTrace import_trace(std::istream& in) {
  EventTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hdr(line);
      std::string tok;
      while (hdr >> tok) {
        if (tok.rfind("m=", 0) == 0) trace.m = std::stoi(tok.substr(2));
        if (tok.rfind("horizon=", 0) == 0)
          trace.horizon = std::stod(tok.substr(8));
      }
      continue;
    }
    std::istringstream ls(line);
    double t;
    int page;
    std::string kind;
    if (!(ls >> t >> page >> kind))
      throw std::runtime_error("import_trace: malformed line: " + line);
    EventTrace::Kind k;
    if (kind == "change")
      k = EventTrace::Change;
    else if (kind == "cis")
      k = EventTrace::Cis;
    else if (kind == "request")
      k = EventTrace::Request;
    else
      throw std::runtime_error("import_trace: unknown event kind: " + kind);
    trace.events.push_back({t, page, k});
    trace.m = std::max(trace.m, page + 1);
    trace.horizon = std::max(trace.horizon, t);
  }
  trace.sort_events();
  return trace;
}

namespace {

/// Generates tick times across a piecewise-constant bandwidth schedule.
/// Ticks restart at each schedule change, anchored at the change time.
class TickStream {
 public:
  TickStream(const std::vector<RStep>& steps, double T) : steps_(steps), T_(T) {
    if (steps_.empty() || steps_.front().t != 0.0)
      throw std::invalid_argument("bandwidth schedule must start at t = 0");
    advance_segment(0);
  }

  double peek() const { return next_; }
  void pop() {
    ++j_;
    compute_next();
  }

 private:
  void advance_segment(std::size_t k) {
    seg_ = k;
    j_ = 1;
    anchor_ = steps_[k].t;
    rate_ = steps_[k].rate;
    end_ = (k + 1 < steps_.size()) ? steps_[k + 1].t : T_;
    compute_next();
  }
  void compute_next() {
    for (;;) {
      next_ = anchor_ + j_ / rate_;
      if (next_ > T_) {
        next_ = std::numeric_limits<double>::infinity();
        return;
      }
      if (next_ >= end_ && seg_ + 1 < steps_.size()) {
        advance_segment(seg_ + 1);
        continue;
      }
      return;
    }
  }

  const std::vector<RStep>& steps_;
  double T_;
  std::size_t seg_ = 0;
  long j_ = 1;
  double anchor_ = 0.0, rate_ = 1.0, end_ = 0.0, next_ = 0.0;
};

}  // namespace

SimulationReport run_policy(const EventTrace& trace, Policy& policy,
                            std::span<const PageParams> pages,
                            const std::vector<RStep>& bandwidth, double T,
                            const RunOptions& opts) {
  const int m = static_cast<int>(pages.size());
  SimulationReport rep;
  rep.per_page_crawls.assign(m, 0);
  rep.per_page_rates.assign(m, 0.0);

  std::vector<double> last_crawl(m, 0.0);
  std::vector<double> last_change(m, -std::numeric_limits<double>::infinity());
  std::vector<int> cis_since_crawl(m, 0);

  // Rolling window bookkeeping: one slot of (requests, fresh) per crawl.
  std::deque<std::pair<long, long>> slots;
  long cur_req = 0, cur_fresh = 0;
  long win_req = 0, win_fresh = 0;

  TickStream ticks(bandwidth, T);
  std::size_t ev = 0;
  const auto& events = trace.events;

  auto do_crawl = [&](int page, double t, bool tick_crawl) {
    if (opts.collect_observations && tick_crawl) {
      rep.observations.push_back(
          {t - last_crawl[page], cis_since_crawl[page],
           last_change[page] > last_crawl[page] ? 1 : 0});
    }
    last_crawl[page] = t;
    cis_since_crawl[page] = 0;
    ++rep.per_page_crawls[page];
  };

  auto on_tick = [&](double t) {
    const int page = policy.select(t);
    if (page >= 0) do_crawl(page, t, true);
    if (opts.rolling_window > 0 && page >= 0) {
      slots.emplace_back(cur_req, cur_fresh);
      win_req += cur_req;
      win_fresh += cur_fresh;
      cur_req = cur_fresh = 0;
      if (static_cast<int>(slots.size()) > opts.rolling_window) {
        win_req -= slots.front().first;
        win_fresh -= slots.front().second;
        slots.pop_front();
      }
      if (static_cast<int>(slots.size()) == opts.rolling_window && win_req > 0)
        rep.rolling.emplace_back(
            t, static_cast<double>(win_fresh) / static_cast<double>(win_req));
    }
  };

  for (;;) {
    const bool have_event = ev < events.size() && events[ev].t <= T;
    const double tick_t = ticks.peek();
    if (!have_event && std::isinf(tick_t)) break;
    // Same-timestamp order: change < cis < request < tick.
    if (have_event && events[ev].t <= tick_t) {
      const auto& e = events[ev++];
      switch (e.kind) {
        case EventTrace::Change:
          last_change[e.page] = e.t;
          if (opts.oracle_crawl_on_change) do_crawl(e.page, e.t, false);
          break;
        case EventTrace::Cis:
          ++cis_since_crawl[e.page];
          policy.on_cis(e.page, e.t);
          break;
        case EventTrace::Request:
          ++rep.requests;
          ++cur_req;
          if (last_change[e.page] <= last_crawl[e.page]) {
            ++rep.fresh_requests;
            ++cur_fresh;
          }
          break;
      }
    } else {
      on_tick(tick_t);
      ticks.pop();
    }
  }

  rep.accuracy = rep.requests > 0 ? static_cast<double>(rep.fresh_requests) /
                                        static_cast<double>(rep.requests)
                                  : 0.0;
  for (int i = 0; i < m; ++i)
    rep.per_page_rates[i] = rep.per_page_crawls[i] / T;
  return rep;
}

double ReplicationStats::mean() const {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : samples) s += v;
  return s / static_cast<double>(samples.size());
}

double ReplicationStats::stderr_mean() const {
  const std::size_t n = samples.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean();
  double ss = 0.0;
  for (double v : samples) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

ThresholdIntervalStats simulate_threshold_policy(const PageParams& p,
                                                 Threshold iota,
                                                 long intervals,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  double sum_l = 0.0, ss_l = 0.0, sum_w = 0.0, ss_w = 0.0;

  // Freshness accrued over an elapsed segment [s1, s2] with k CIS on record.
  auto segment = [&](double s1, double s2, long k) {
    if (p.alpha <= 0.0) return s2 - s1;
    const double discount =
        std::isinf(p.beta) ? (k > 0 ? 0.0 : 1.0) : std::exp(-p.alpha * p.beta * k);
    return discount * (std::exp(-p.alpha * s1) - std::exp(-p.alpha * s2)) /
           p.alpha;
  };

  for (long n = 0; n < intervals; ++n) {
    double s = 0.0, fresh = 0.0;
    long k = 0;
    double length = 0.0;
    for (;;) {
      const double cross = iota - k * p.beta;  // elapsed time of crossing
      const double next_cis = s + rng.exponential(p.gamma);
      if (next_cis >= cross) {
        fresh += segment(s, cross, k);
        length = cross;
        break;
      }
      fresh += segment(s, next_cis, k);
      s = next_cis;
      ++k;
      if (std::isinf(p.beta) || s + k * p.beta >= iota) {
        length = s;
        break;
      }
    }
    sum_l += length;
    ss_l += length * length;
    sum_w += fresh;
    ss_w += fresh * fresh;
  }

  ThresholdIntervalStats st;
  st.intervals = intervals;
  const double n = static_cast<double>(intervals);
  st.mean_length = sum_l / n;
  st.mean_freshness = sum_w / n;
  st.se_length = std::sqrt(std::max(0.0, ss_l / n - st.mean_length * st.mean_length) / (n - 1));
  st.se_freshness = std::sqrt(
      std::max(0.0, ss_w / n - st.mean_freshness * st.mean_freshness) / (n - 1));
  return st;
}

}  // namespace crawl
