#include "semicomp/simulation.hpp"

#include <cmath>
#include <limits>

#include "semicomp/errors.hpp"
#include "semicomp/parallel.hpp"

namespace semicomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeTol = 1e-10;

void check_tau(Family f, double tau, const std::string& key) {
  try {
    (void)theta_from_tau(f, tau);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, key + ": " + e.what());
  }
}

// Root of a decreasing g on [lo, hi] with g(lo) >= target >= g(hi).
template <class G>
double bisect_decreasing(G g, double target, double lo, double hi) {
  while (hi - lo > kTimeTol) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void SimConfig::validate() const {
  if (K < 1) throw Error(ErrorCode::Config, "K: must be >= 1");
  if (static_cast<int>(tau_thetas.size()) != K)
    throw Error(ErrorCode::Config, "sim.tau_thetas: expected " + std::to_string(K) + " values");
  check_tau(family, tau_alpha, "sim.tau_alpha");
  for (double t : tau_thetas) check_tau(family, t, "sim.tau_thetas");
  if (tau_lower) check_tau(family, *tau_lower, "sim.tau_lower");
  if (!(rate_k > 0.0)) throw Error(ErrorCode::Config, "sim.rate_k: must be > 0");
  if (!(rate_d > 0.0)) throw Error(ErrorCode::Config, "sim.rate_d: must be > 0");
  if (!(cens_max > 0.0)) throw Error(ErrorCode::Config, "sim.cens_max: must be > 0");
  if (n_train < 0 || n_test < 0 || n_train + n_test < 1)
    throw Error(ErrorCode::Config, "sim.n_train: need at least one subject");
}

SimConfig preset_ex1(int K, double tau_alpha, double cens_max) {
  SimConfig c;
  c.K = K;
  c.tau_alpha = tau_alpha;
  c.cens_max = cens_max;
  for (int k = 0; k < K; ++k) c.tau_thetas.push_back(K == 1 ? 0.8 : 0.8 - 0.6 * k / (K - 1));
  return c;
}

SimConfig preset_ex2(int K, double tau_alpha, double cens_max) {
  SimConfig c;
  c.K = K;
  c.tau_alpha = tau_alpha;
  c.cens_max = cens_max;
  c.tau_thetas.assign(K, 0.5);
  return c;
}

SimConfig preset_ex3(double tau_lower, double tau_alpha) {
  SimConfig c;
  c.K = 7;
  c.tau_alpha = tau_alpha;
  c.tau_thetas.assign(7, 0.5);
  c.tau_lower = tau_lower;
  c.rate_k = 1.0;
  c.rate_d = 1.0;
  c.cens_max = 10.0;
  return c;
}

SimSubject simulate_subject(const SimConfig& cfg, std::uint64_t index) {
  Rng rng = make_rng(cfg.seed, stream::kSubject, index);
  const ArchimedeanCopula alpha(cfg.family, theta_from_tau(cfg.family, cfg.tau_alpha));
  SimSubject s;
  s.d = exponential1(rng) / cfg.rate_d;
  const std::vector<double> U = sample_exchangeable_uniforms(cfg.K, alpha, rng);
  s.c = cfg.cens_max * uniform01(rng);

  const double v = std::exp(-cfg.rate_d * s.d);
  double hi = -std::log(1e-9) / cfg.rate_k;
  if (hi <= s.d) hi = 2.0 * s.d + 1.0;
  s.t_latent.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    const ArchimedeanCopula up(cfg.family, theta_from_tau(cfg.family, cfg.tau_thetas[k]));
    auto G = [&](const ArchimedeanCopula& th, double t) {
      const double u = std::exp(-cfg.rate_k * t);
      return u >= 1.0 ? 1.0 : h2(u, v, th);
    };
    const double g_d = G(up, s.d);
    if (U[k] >= g_d) {
      s.t_latent[k] = bisect_decreasing([&](double t) { return G(up, t); }, U[k], 0.0, s.d);
      continue;
    }
    // Past D. With a distinct lower-wedge law, the conditional tail beyond D is
    // rescaled so that the mass left for the lower wedge stays g_d.
    ArchimedeanCopula low = up;
    double target = U[k];
    if (cfg.tau_lower) {
      low = ArchimedeanCopula(cfg.family, theta_from_tau(cfg.family, *cfg.tau_lower));
      target = G(low, s.d) * U[k] / g_d;
    }
    if (G(low, hi) > target) {
      s.t_latent[k] = kInf;
    } else {
      s.t_latent[k] = bisect_decreasing([&](double t) { return G(low, t); }, target, s.d, hi);
    }
  }

  ObservedRecord& r = s.record;
  r.id = std::to_string(index + 1);
  r.y = std::min(s.d, s.c);
  r.dtilde = s.d <= s.c ? 1 : 0;
  r.t.resize(cfg.K);
  r.delta.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    r.delta[k] = s.t_latent[k] <= r.y ? 1 : 0;
    r.t[k] = std::min(s.t_latent[k], r.y);
  }
  return s;
}

SimResult simulate_dataset(const SimConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.n_train + cfg.n_test);
  std::vector<SimSubject> subj(n);
  parallel_for(n, threads, [&](std::size_t i) { subj[i] = simulate_subject(cfg, i); });
  SimResult out;
  out.train.K = out.test.K = cfg.K;
  for (std::size_t i = 0; i < n; ++i) {
    const bool train = i < static_cast<std::size_t>(cfg.n_train);
    Dataset& ds = train ? out.train : out.test;
    LatentTruth& lt = train ? out.train_latent : out.test_latent;
    ds.records.push_back(std::move(subj[i].record));
    lt.d.push_back(subj[i].d);
    lt.c.push_back(subj[i].c);
    lt.t.push_back(std::move(subj[i].t_latent));
  }
  return out;
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorCode::InsufficientData, "Kendall tau needs two complete columns");
  long long conc = 0, disc = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool ex = x[i] == x[j], ey = y[i] == y[j];
      if (ex) ++tx;
      if (ey) ++ty;
      if (ex || ey) continue;
      if ((x[i] < x[j]) == (y[i] < y[j])) ++conc;
      else ++disc;
    }
  const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
  const double den = std::sqrt((n0 - tx) * (n0 - ty));
  if (den == 0.0) throw Error(ErrorCode::InsufficientData, "Kendall tau undefined for a constant column");
  return static_cast<double>(conc - disc) / den;
}

std::vector<std::vector<double>> pairwise_kendall(const std::vector<std::vector<double>>& columns) {
  const std::size_t p = columns.size();
  std::vector<std::vector<double>> m(p, std::vector<double>(p, 1.0));
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) m[a][b] = m[b][a] = kendall_tau_b(columns[a], columns[b]);
  return m;
}

}  // namespace semicomp
