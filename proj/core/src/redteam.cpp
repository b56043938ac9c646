#include "triwad/redteam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triwad/error.hpp"
#include "triwad/ot.hpp"
#include "triwad/rng.hpp"

namespace triwad {

namespace {

// W_p and its gradient w.r.t. the source supports via the optimal plan
// (envelope theorem on the transport LP).
double w_with_gradient(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                       double p, DataMatrix* grad, bool* zero_flag) {
  const OTResult r = solve_ot(src, dst, p);
  const double w = std::pow(std::max(r.cost, 0.0), 1.0 / p);
  if (!grad) return w;

  *grad = DataMatrix(src.size(), src.dim());
  if (w <= 1e-15) {
    // Kink of the p-th root at zero; use the zero subgradient.
    if (zero_flag) *zero_flag = true;
    return w;
  }
  const double outer = std::pow(r.cost, 1.0 / p - 1.0) / p;  // d w / d cost
  const std::size_t d = src.dim();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto x = src.point(i);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      const double pij = r.plan_at(i, j);
      if (pij == 0.0) continue;
      const auto y = dst.point(j);
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - y[k];
        sq += diff * diff;
      }
      // d cost / d x_i for the ||.||^p ground metric.
      double coeff;
      if (p == 2.0) {
        coeff = 2.0 * pij;
      } else {
        const double dist = std::sqrt(sq);
        if (dist <= 1e-15) continue;  // coincident pair, zero subgradient
        coeff = pij * p * std::pow(dist, p - 2.0);
      }
      for (std::size_t k = 0; k < d; ++k)
        (*grad)(i, k) += outer * coeff * (x[k] - y[k]);
    }
  }
  return w;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct LossEval {
  double loss = 0.0;
  DataMatrix grad;
  bool zero_flag = false;
};

LossEval eval_attack_loss(const DataMatrix& d_attack, const DiscreteMeasure& nu,
                          const DiscreteMeasure& gamma, double target_w_nu,
                          double target_w_gamma, double p, bool want_grad) {
  const DiscreteMeasure d = uniform_measure(d_attack);
  LossEval out;
  DataMatrix g1, g2;
  const double w1 = w_with_gradient(d, nu, p, want_grad ? &g1 : nullptr,
                                    &out.zero_flag);
  const double w2 = w_with_gradient(d, gamma, p, want_grad ? &g2 : nullptr,
                                    &out.zero_flag);
  out.loss = std::abs(w1 - target_w_nu) + std::abs(w2 - target_w_gamma);
  if (want_grad) {
    const double s1 = sign_of(w1 - target_w_nu);
    const double s2 = sign_of(w2 - target_w_gamma);
    // Preconditioned by the inverse row mass (m for uniform weights):
    // the raw plan gradient carries a 1/m factor, so unpreconditioned
    // steps would shrink with the support size.
    const double mass = static_cast<double>(d_attack.rows());
    out.grad = DataMatrix(d_attack.rows(), d_attack.dim());
    for (std::size_t k = 0; k < out.grad.values().size(); ++k)
      out.grad.mutable_values()[k] =
          mass * (s1 * g1.values()[k] + s2 * g2.values()[k]);
  }
  return out;
}

}  // namespace

AttackConfig attack_config_from_fedwad(const SessionReport& report,
                                       const DiscreteMeasure& nu) {
  auto it = report.artifacts.find("gamma");
  if (it == report.artifacts.end())
    throw ConfigError("federated report carries no shared gamma");
  AttackConfig cfg;
  cfg.gamma = it->second;
  cfg.nu = nu;
  cfg.target_w_nu = report.estimate;
  const double w_gamma_nu = wasserstein(cfg.gamma, nu, report.p);
  cfg.target_w_gamma = report.estimate - w_gamma_nu;
  if (cfg.target_w_gamma < 0.0)
    throw ConfigError("inconsistent targets: W(gamma,nu) exceeds the bound");
  cfg.opts.p = report.p;
  return cfg;
}

AttackConfig attack_config_from_triangle(const TriangleReport&,
                                         const DiscreteMeasure&) {
  throw ConfigError(
      "identically-distributional attack is not configurable against the "
      "one-round protocol: neither W_p(mu, defense) nor W_p(mu, eta_mu) is "
      "ever disclosed, so no distance target exists for the reference side");
}

AttackState attack_init(std::size_t rows, std::size_t dim, std::uint64_t seed,
                        const AttackConfig& cfg) {
  Rng rng(seed);
  AttackState st;
  st.d_attack = DataMatrix(rows, dim);
  for (auto& v : st.d_attack.mutable_values()) v = rng.gaussian();
  st.lr = cfg.opts.lr;
  const LossEval eval =
      eval_attack_loss(st.d_attack, cfg.nu, cfg.gamma, cfg.target_w_nu,
                       cfg.target_w_gamma, cfg.opts.p, /*want_grad=*/false);
  st.loss = eval.loss;
  st.trace.push_back(st.loss);
  return st;
}

AttackState attack_step(AttackState st, const DiscreteMeasure& nu,
                        const DiscreteMeasure& gamma, double target_w_nu,
                        double target_w_gamma, double p, bool line_search) {
  LossEval at = eval_attack_loss(st.d_attack, nu, gamma, target_w_nu,
                                 target_w_gamma, p, /*want_grad=*/true);
  st.zero_distance_flagged |= at.zero_flag;

  double lr = st.lr;
  DataMatrix candidate = st.d_attack;
  double cand_loss = at.loss;
  for (int tries = 0; tries < 20; ++tries) {
    DataMatrix trial = st.d_attack;
    for (std::size_t k = 0; k < trial.values().size(); ++k)
      trial.mutable_values()[k] -= lr * at.grad.values()[k];
    const LossEval trial_eval = eval_attack_loss(
        trial, nu, gamma, target_w_nu, target_w_gamma, p, /*want_grad=*/false);
    if (!line_search || trial_eval.loss <= at.loss) {
      candidate = std::move(trial);
      cand_loss = trial_eval.loss;
      break;
    }
    lr *= 0.5;
  }
  // When every halving fails the iterate stays put (stationarity).

  st.d_attack = std::move(candidate);
  st.loss = cand_loss;
  ++st.step;
  st.trace.push_back(st.loss);
  return st;
}

AttackReport run_attack(const AttackConfig& cfg, std::size_t rows,
                        std::size_t dim, const DiscreteMeasure* oracle_mu) {
  if (cfg.nu.empty() || cfg.gamma.empty())
    throw ConfigError("attack requires both reference measures");
  if (cfg.target_w_nu < 0.0 || cfg.target_w_gamma < 0.0)
    throw ConfigError("negative distance target");

  AttackReport rep;
  AttackState st = attack_init(rows, dim, cfg.opts.seed, cfg);
  rep.initial_loss = st.loss;
  if (oracle_mu) {
    rep.initial_oracle =
        wasserstein(uniform_measure(st.d_attack), *oracle_mu, cfg.opts.p);
    rep.oracle_trace.push_back(rep.initial_oracle);
  }

  for (std::size_t k = 0; k < cfg.opts.steps; ++k) {
    st.lr = cfg.opts.lr / (1.0 + cfg.opts.lr_decay * static_cast<double>(k));
    st = attack_step(std::move(st), cfg.nu, cfg.gamma, cfg.target_w_nu,
                     cfg.target_w_gamma, cfg.opts.p, cfg.opts.line_search);
    if (oracle_mu && (k + 1) % cfg.opts.checkpoint_every == 0) {
      rep.oracle_trace.push_back(
          wasserstein(uniform_measure(st.d_attack), *oracle_mu, cfg.opts.p));
    }
  }

  rep.final_loss = st.loss;
  if (oracle_mu) {
    rep.final_oracle =
        wasserstein(uniform_measure(st.d_attack), *oracle_mu, cfg.opts.p);
    rep.oracle_trace.push_back(rep.final_oracle);
  }
  rep.state = std::move(st);
  return rep;
}

DataMatrix residual_attack(const InterpolatingMeasure& eta, double t,
                           const DiscreteMeasure& d_guess) {
  if (t <= 0.0) throw Error("residual attack undefined at t == 0");
  const DataMatrix& e = eta.measure.support();
  const DataMatrix& g = d_guess.support();
  if (e.rows() != g.rows() || e.dim() != g.dim())
    throw Error("guess shape does not match the interpolating measure");
  DataMatrix out(e.rows(), e.dim());
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t k = 0; k < e.dim(); ++k)
      out(i, k) = (e(i, k) - (1.0 - t) * g(i, k)) / t;
  return out;
}

double gaussian_mechanism_sigma(double epsilon, double delta,
                                double sensitivity) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0,1)");
  if (!(sensitivity > 0.0)) throw ConfigError("sensitivity must be positive");
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

DiscreteMeasure dp_perturb(const DiscreteMeasure& mu, double epsilon,
                           double delta, double sensitivity,
                           std::uint64_t seed) {
  const double sigma = gaussian_mechanism_sigma(epsilon, delta, sensitivity);
  Rng rng(seed);
  DataMatrix noisy = mu.support();
  for (auto& v : noisy.mutable_values()) v += sigma * rng.gaussian();
  return DiscreteMeasure(std::move(noisy), std::vector<double>(mu.weights()));
}

namespace {

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 128; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

GaussFitReport gaussianity_check(const DataMatrix& residual,
                                 std::uint64_t seed) {
  std::vector<double> samples = residual.values();
  if (samples.size() < 100)
    throw Error("gaussianity check needs at least 100 scalar entries");
  if (samples.size() > 100000) {
    Rng rng(seed);
    std::vector<double> sub(100000);
    for (auto& v : sub) v = samples[rng.index(samples.size())];
    samples = std::move(sub);
  }
  const double n = static_cast<double>(samples.size());

  const double mean =
      std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double c = v - mean;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  GaussFitReport rep;
  if (m2 <= 1e-24 * std::max(1.0, mean * mean)) {
    rep.verdict = false;
    rep.reason = "zero variance";
    rep.ks_statistic = 1.0;
    rep.ks_pvalue = 0.0;
    return rep;
  }
  rep.skewness = m3 / std::pow(m2, 1.5);
  rep.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  const double sd = std::sqrt(m2 * n / (n - 1.0));
  std::sort(samples.begin(), samples.end());
  double d_stat = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double z = (samples[i] - mean) / sd;
    const double cdf = std_normal_cdf(z);
    const double hi = static_cast<double>(i + 1) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    d_stat = std::max({d_stat, hi, lo});
  }
  rep.ks_statistic = d_stat;
  const double root_n = std::sqrt(n);
  rep.ks_pvalue = kolmogorov_q((root_n + 0.12 + 0.11 / root_n) * d_stat);

  if (rep.ks_pvalue <= 0.01) {
    rep.verdict = false;
    rep.reason = "ks";
  } else if (std::abs(rep.skewness) >= 0.5) {
    rep.verdict = false;
    rep.reason = "skewness";
  } else if (std::abs(rep.excess_kurtosis) >= 1.0) {
    rep.verdict = false;
    rep.reason = "kurtosis";
  } else {
    rep.verdict = true;
    rep.reason = "";
  }
  return rep;
}

}  // namespace triwad
