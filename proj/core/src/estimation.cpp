#include "crawlsched/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace crawl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kGradTol = 1e-10;
constexpr double kLogParamLo = -40.0;  // a, b confined to [e^-40, e^40]
constexpr double kLogParamHi = 40.0;
constexpr int kMaxIter = 500;

struct Objective {
  std::span<const IntervalObservation> obs;
  bool fit_b;

  // Log-likelihood with gradient and Hessian in (a, b) = (α, αβ).
  double eval(double a, double b, std::array<double, 2>* grad,
              std::array<double, 3>* hess) const {
    double ll = 0.0, ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
    for (const auto& o : obs) {
      const double tau = o.tau_elap;
      const double n = static_cast<double>(o.n_cis);
      const double s = a * tau + b * n;
      if (o.z) {
        const double em1 = std::expm1(s);  // e^s − 1
        if (em1 <= 0.0) return -std::numeric_limits<double>::infinity();
        ll += std::log(-std::expm1(-s));
        const double g = 1.0 / em1;
        const double h = -(em1 + 1.0) / (em1 * em1);
        ga += g * tau;
        gb += g * n;
        haa += h * tau * tau;
        hab += h * tau * n;
        hbb += h * n * n;
      } else {
        ll -= s;
        ga -= tau;
        gb -= n;
      }
    }
    if (grad) *grad = {ga, gb};
    if (hess) *hess = {haa, hab, hbb};
    return ll;
  }
};

}  // namespace

CisQuality estimate_naive(std::span<const IntervalObservation> obs) {
  if (obs.empty()) throw std::invalid_argument("estimate_naive: no observations");
  long with_cis = 0, with_change = 0, both = 0;
  for (const auto& o : obs) {
    if (o.n_cis > 0) ++with_cis;
    if (o.z) ++with_change;
    if (o.n_cis > 0 && o.z) ++both;
  }
  CisQuality q;
  q.precision = with_cis > 0 ? static_cast<double>(both) / with_cis : kNaN;
  q.recall = with_change > 0 ? static_cast<double>(both) / with_change : 0.0;
  return q;
}

MleResult fit_mle(std::span<const IntervalObservation> obs) {
  if (obs.size() < 2)
    throw std::invalid_argument("fit_mle: need at least 2 observations");
  for (const auto& o : obs)
    if (!(o.tau_elap > 0.0) || o.n_cis < 0 || (o.z != 0 && o.z != 1))
      throw std::invalid_argument("fit_mle: invalid observation");

  long changes = 0, total_cis = 0;
  double mean_tau = 0.0, mean_n = 0.0;
  for (const auto& o : obs) {
    changes += o.z;
    total_cis += o.n_cis;
    mean_tau += o.tau_elap;
    mean_n += o.n_cis;
  }
  mean_tau /= static_cast<double>(obs.size());
  mean_n /= static_cast<double>(obs.size());

  MleResult res;
  const bool fit_b = total_cis > 0;
  const Objective obj{obs, fit_b};

  // Complete separation: the likelihood has no interior maximum.
  if (changes == 0 || changes == static_cast<long>(obs.size())) {
    res.boundary = true;
    res.warning = changes == 0 ? "all intervals unchanged; alpha at lower bound"
                               : "all intervals changed; alpha at upper bound";
    const double u = changes == 0 ? kLogParamLo : kLogParamHi;
    res.alpha = std::exp(u);
    res.ab = 0.0;
    res.beta = 0.0;
    res.loglik = obj.eval(res.alpha, res.ab, nullptr, nullptr);
    return res;
  }

  // Initial guess: attribute the mean log-survival to the two covariates.
  const double frac = static_cast<double>(changes) / obs.size();
  const double s0 = -std::log1p(-frac);
  double u = std::log(std::max(1e-8, fit_b ? 0.7 * s0 / mean_tau : s0 / mean_tau));
  double v = fit_b ? std::log(std::max(1e-8, 0.3 * s0 / mean_n)) : kLogParamLo;

  std::array<double, 2> grad{};
  std::array<double, 3> hess{};
  double ll = obj.eval(std::exp(u), std::exp(v), &grad, &hess);

  for (int it = 0; it < kMaxIter; ++it) {
    const double a = std::exp(u), b = std::exp(v);
    res.grad_norm = std::max(std::abs(grad[0]), fit_b ? std::abs(grad[1]) : 0.0);
    if (res.grad_norm <= kGradTol) {
      res.converged = true;
      res.iterations = it;
      break;
    }

    // Newton step in log-space: chain rule gives
    //   ℓ_u = a ℓ_a,  ℓ_uu = a² ℓ_aa + a ℓ_a,  ℓ_uv = ab ℓ_ab.
    const double gu = a * grad[0];
    const double gv = b * grad[1];
    double huu = a * a * hess[0] + gu;
    double hvv = b * b * hess[2] + gv;
    double huv = a * b * hess[1];

    double du, dv = 0.0;
    const double det = huu * hvv - huv * huv;
    const bool usable = fit_b ? (det > 0.0 && huu < 0.0) : (huu < 0.0);
    if (usable) {
      if (fit_b) {
        du = -(hvv * gu - huv * gv) / det;
        dv = -(huu * gv - huv * gu) / det;
      } else {
        du = -gu / huu;
      }
    } else {
      const double scale = 1.0 / std::max(1.0, std::max(std::abs(gu), std::abs(gv)));
      du = gu * scale;
      dv = fit_b ? gv * scale : 0.0;
    }

    // Near the optimum the Newton increment shrinks below the resolution
    // of the likelihood comparison; a vanishing step is convergence.
    if (usable && res.grad_norm <= 1e-8 &&
        std::max(std::abs(du), fit_b ? std::abs(dv) : 0.0) <= 1e-14) {
      res.converged = true;
      res.iterations = it;
      break;
    }

    // Damping: halve the step until the likelihood stops decreasing.
    double step = 1.0;
    double nu_ = u, nv = v, nll = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 60; ++half) {
      nu_ = std::clamp(u + step * du, kLogParamLo, kLogParamHi);
      nv = fit_b ? std::clamp(v + step * dv, kLogParamLo, kLogParamHi) : v;
      nll = obj.eval(std::exp(nu_), std::exp(nv), nullptr, nullptr);
      if (nll >= ll || (nu_ == u && nv == v)) break;
      step *= 0.5;
    }
    if (nu_ == u && nv == v) {
      // Likelihood differences are below double resolution here. If the
      // Newton system is trustworthy, polish by accepting the full step
      // whenever it shrinks the gradient norm instead.
      bool moved = false;
      if (usable) {
        const double tu = std::clamp(u + du, kLogParamLo, kLogParamHi);
        const double tv =
            fit_b ? std::clamp(v + dv, kLogParamLo, kLogParamHi) : v;
        std::array<double, 2> tg{};
        std::array<double, 3> th{};
        const double tll = obj.eval(std::exp(tu), std::exp(tv), &tg, &th);
        const double tgn =
            std::max(std::abs(tg[0]), fit_b ? std::abs(tg[1]) : 0.0);
        if ((tu != u || tv != v) && tgn < res.grad_norm) {
          u = tu;
          v = tv;
          grad = tg;
          hess = th;
          ll = tll;
          res.iterations = it + 1;
          moved = true;
        }
      }
      if (!moved) {
        const bool at_bound =
            u <= kLogParamLo || u >= kLogParamHi ||
            (fit_b && (v <= kLogParamLo || v >= kLogParamHi));
        res.converged = res.grad_norm <= 1e-6;
        res.boundary = at_bound;
        if (at_bound) res.warning = "optimizer pinned at parameter bound";
        res.iterations = it;
        break;
      }
      continue;
    }
    u = nu_;
    v = nv;
    ll = obj.eval(std::exp(u), std::exp(v), &grad, &hess);
    res.iterations = it + 1;
  }

  res.alpha = std::exp(u);
  res.ab = fit_b ? std::exp(v) : 0.0;
  res.beta = fit_b ? res.ab / res.alpha : 0.0;
  res.loglik = ll;
  if (!fit_b && res.warning.empty())
    res.warning = "no CIS observed; alpha*beta unidentifiable, fixed at 0";
  if (!res.converged && !res.boundary) {
    std::ostringstream msg;
    msg << "fit_mle: no convergence after " << kMaxIter
        << " iterations, gradient sup-norm " << res.grad_norm;
    throw std::runtime_error(msg.str());
  }
  return res;
}

QualityConversion params_to_quality(double alpha, double beta, double gamma) {
  if (!(alpha > 0.0) || !(beta >= 0.0) || !(gamma > 0.0))
    throw std::domain_error("params_to_quality: need alpha>0, beta>=0, gamma>0");
  QualityConversion out;
  out.nu = gamma * std::exp(-alpha * beta);
  out.delta = alpha + gamma - out.nu;
  out.lam = (gamma - out.nu) / out.delta;
  out.quality.precision = (gamma - out.nu) / gamma;
  out.quality.recall = out.lam;
  if (out.lam < -1e-12 || out.lam > 1.0 + 1e-12 ||
      out.quality.precision < -1e-12 || out.quality.precision > 1.0 + 1e-12)
    throw std::domain_error("params_to_quality: inconsistent parameters");
  out.lam = std::clamp(out.lam, 0.0, 1.0);
  out.quality.precision = std::clamp(out.quality.precision, 0.0, 1.0);
  out.quality.recall = out.lam;
  return out;
}

CisQuality estimate_mle(std::span<const IntervalObservation> obs) {
  const MleResult fit = fit_mle(obs);
  double total_time = 0.0;
  long total_cis = 0;
  for (const auto& o : obs) {
    total_time += o.tau_elap;
    total_cis += o.n_cis;
  }
  if (total_cis == 0) return {0.0, 0.0};
  const double gamma_hat = static_cast<double>(total_cis) / total_time;
  return params_to_quality(fit.alpha, fit.beta, gamma_hat).quality;
}

std::vector<IntervalObservation> read_observation_log(std::istream& in) {
  std::vector<IntervalObservation> obs;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    IntervalObservation o;
    if (ls >> o.tau_elap >> o.n_cis >> o.z) obs.push_back(o);
  }
  return obs;
}

}  // namespace crawl
