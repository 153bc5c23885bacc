#include "memshield/theory.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "memshield/error.hpp"
#include "memshield/metrics.hpp"
#include "memshield/stats.hpp"

namespace memshield {

namespace {

void require_same_dim(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector dimensions differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

Vec vnormalized(const Vec& a) {
  const double n = norm(a);
  if (!(n > 0.0)) throw Error(ErrorCode::NumericalError, "cannot normalize a zero vector");
  Vec out(a);
  for (double& x : out) x /= n;
  return out;
}

Vec random_unit_vector(std::size_t d, Rng& rng) {
  if (d < 2) throw Error(ErrorCode::ConfigError, "dimension must be >= 2");
  Vec v(d);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& x : v) x = standard_normal(rng);
    n = norm(v);
  }
  for (double& x : v) x /= n;
  return v;
}

Vec random_tangent(const Vec& e, Rng& rng) {
  for (;;) {
    Vec v = random_unit_vector(e.size(), rng);
    const double c = dot(v, e);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * e[i];
    if (norm(v) > 1e-6) return vnormalized(v);
  }
}

Vec sphere_step(const Vec& e, const Vec& t, double angle) {
  require_same_dim(e, t);
  Vec out(e.size());
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = c * e[i] + s * t[i];
  return out;
}

Vec slerp(const Vec& a, const Vec& b, double t) {
  require_same_dim(a, b);
  const double c = std::clamp(dot(a, b), -1.0, 1.0);
  const double omega = std::acos(c);
  if (omega < 1e-12) return a;
  Vec out(a.size());
  const double sa = std::sin((1.0 - t) * omega) / std::sin(omega);
  const double sb = std::sin(t * omega) / std::sin(omega);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = sa * a[i] + sb * b[i];
  return out;
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec y(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double fp = f(y);
    y[i] = x[i] - h;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vec sphere_gradient(const Vec& e, const Vec& v) {
  require_same_dim(e, v);
  const double c = dot(e, v);
  Vec g(v);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= c * e[i];
  return g;
}

std::string_view to_string(MonotoneMap g) {
  switch (g) {
    case MonotoneMap::Identity: return "identity";
    case MonotoneMap::Affine: return "affine";
    case MonotoneMap::Exp: return "exp";
    case MonotoneMap::Logistic: return "logistic";
  }
  return "?";
}

double apply_map(MonotoneMap g, double x) {
  switch (g) {
    case MonotoneMap::Identity: return x;
    case MonotoneMap::Affine: return 2.0 * x + 1.0;
    case MonotoneMap::Exp: return std::exp(x);
    case MonotoneMap::Logistic: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

double map_derivative(MonotoneMap g, double x) {
  switch (g) {
    case MonotoneMap::Identity: return 1.0;
    case MonotoneMap::Affine: return 2.0;
    case MonotoneMap::Exp: return std::exp(x);
    case MonotoneMap::Logistic: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

CouplingResult coupling_check(const Vec& e, const Vec& q, MonotoneMap g, double h) {
  require_same_dim(e, q);
  // Through x / |x| the ambient gradient at a unit point is already tangent.
  const auto composed = [&](const Vec& x) { return apply_map(g, dot(vnormalized(x), q)); };
  CouplingResult r;
  r.composed_gradient = finite_difference_gradient(composed, e, h);
  r.retrieval_gradient = sphere_gradient(e, q);
  const double na = norm(r.composed_gradient), nb = norm(r.retrieval_gradient);
  if (na == 0.0 || nb == 0.0) {
    r.cosine = 1.0;  // both vanish at e = q
    r.scale = 0.0;
  } else {
    r.cosine = dot(r.composed_gradient, r.retrieval_gradient) / (na * nb);
    r.scale = na / nb;
  }
  return r;
}

PathWitness noncoupled_path_witness(std::size_t d, std::uint64_t seed, std::size_t steps) {
  if (d < 2) throw Error(ErrorCode::ConfigError, "dimension must be >= 2");
  if (steps < 2) throw Error(ErrorCode::ConfigError, "need at least 2 path steps");
  Rng rng = make_rng(seed, 0x9A7);
  PathWitness w;
  w.query = random_unit_vector(d, rng);
  // Start a right angle away from the query and walk 80% of the way in.
  const Vec t = random_tangent(w.query, rng);
  w.start = t;
  w.end = slerp(w.start, w.query, 0.8);
  w.monotone_along_path = true;
  double prev = dot(w.start, w.query);
  w.path.push_back(w.start);
  for (std::size_t i = 1; i <= steps; ++i) {
    Vec p = slerp(w.start, w.end, static_cast<double>(i) / static_cast<double>(steps));
    const double r = dot(p, w.query);
    // D = -R, so a rise in R is a fall in D.
    if (!(r > prev)) w.monotone_along_path = false;
    prev = r;
    w.path.push_back(std::move(p));
  }
  w.retrieval_start = dot(w.start, w.query);
  w.retrieval_end = dot(w.end, w.query);
  w.detector_start = -w.retrieval_start;
  w.detector_end = -w.retrieval_end;
  w.verified = w.retrieval_end > w.retrieval_start && w.detector_end < w.detector_start && w.monotone_along_path;
  return w;
}

double fisher_rao_bound(double retrieval_adv, double mu, double kappa, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::DegenerateCalibration, "sigma must be > 0");
  return std::abs(retrieval_adv - (mu + kappa * sigma)) / sigma;
}

double fisher_rao_path_length(const std::vector<Vec>& path, const Vec& query, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::DegenerateCalibration, "sigma must be > 0");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec& a = path[i];
    const Vec& b = path[i + 1];
    require_same_dim(a, b);
    Vec mid(a.size()), step(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      mid[j] = 0.5 * (a[j] + b[j]);
      step[j] = b[j] - a[j];
    }
    total += std::abs(dot(sphere_gradient(vnormalized(mid), query), step));
  }
  return total / sigma;
}

double calibration_bound(std::size_t n, double kappa, double delta, double sigma) {
  if (n < 2) throw Error(ErrorCode::ConfigError, "calibration size must be >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::ConfigError, "delta must lie in (0, 1)");
  if (!(sigma >= 0.0) || !(kappa >= 0.0)) throw Error(ErrorCode::ConfigError, "sigma and kappa must be >= 0");
  const double nn = static_cast<double>(n);
  return sigma * (1.0 / std::sqrt(nn) + kappa / std::sqrt(2.0 * (nn - 1.0))) * std::sqrt(2.0 * std::log(4.0 / delta));
}

CalibrationCheck calibration_resampling(const std::vector<double>& population, std::size_t n, double kappa,
                                        double delta, std::size_t trials, std::uint64_t seed) {
  if (population.size() < 2) throw Error(ErrorCode::InsufficientCalibration, "population needs >= 2 scores");
  if (trials == 0) throw Error(ErrorCode::ConfigError, "need at least one trial");
  const double sigma = sample_stddev(population);
  const double tau_star = mean(population) + kappa * sigma;
  CalibrationCheck c;
  c.n = n;
  c.bound = calibration_bound(n, kappa, delta, sigma);
  Rng rng = make_rng(seed, 0xCA1 + n);
  std::vector<double> errors;
  errors.reserve(trials);
  std::vector<double> sample(n);
  std::size_t covered = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& x : sample) x = population[uniform_index(rng, population.size())];
    const double err = std::abs(mean(sample) + kappa * sample_stddev(sample) - tau_star);
    if (err <= c.bound) ++covered;
    errors.push_back(err);
  }
  c.coverage = static_cast<double>(covered) / static_cast<double>(trials);
  c.median_observed = median(errors);
  c.p95_observed = quantile(errors, 0.95);
  c.ratio = c.median_observed > 0.0 ? c.bound / c.median_observed : INFINITY;
  return c;
}

double regret_model(double sigma, double drift, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::ConfigError, "window must be >= 1");
  return sigma / std::sqrt(static_cast<double>(m)) + static_cast<double>(m) * drift;
}

RegretWindow regret_window(double sigma, double drift) {
  if (!(sigma > 0.0) || !(drift > 0.0)) throw Error(ErrorCode::ConfigError, "sigma and drift must be > 0");
  const double m = std::round(std::pow(sigma / drift, 2.0 / 3.0));
  const auto ms = static_cast<std::size_t>(std::max(1.0, m));
  return {ms, regret_model(sigma, drift, ms)};
}

double simulate_tracking_error(double sigma, double drift, std::size_t window, std::size_t steps,
                               std::uint64_t seed) {
  if (window == 0 || steps <= window) throw Error(ErrorCode::ConfigError, "need 1 <= window < steps");
  Rng rng = make_rng(seed, 0x7AC);
  std::vector<double> x(steps);
  for (std::size_t t = 0; t < steps; ++t) x[t] = drift * static_cast<double>(t) + sigma * standard_normal(rng);
  double running = 0.0, err = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    running += x[t];
    if (t >= window) running -= x[t - window];
    if (t + 1 < window) continue;
    err += std::abs(running / static_cast<double>(window) - drift * static_cast<double>(t));
    ++counted;
  }
  return err / static_cast<double>(counted);
}

double dkw_fpr_bound(std::size_t n, double delta) {
  if (n == 0) throw Error(ErrorCode::ConfigError, "N must be >= 1");
  if (!(delta > 0.0 && delta < 2.0)) throw Error(ErrorCode::ConfigError, "delta must lie in (0, 2)");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

double wasserstein_tpr_bound(double eps_w, double g_max) {
  if (!(eps_w >= 0.0) || !(g_max > 0.0)) throw Error(ErrorCode::ConfigError, "need eps_w >= 0 and g_max > 0");
  return std::sqrt(2.0 * g_max * eps_w);
}

double gaussian_gmax(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::ConfigError, "sigma must be > 0");
  return 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double dro_tpr_floor(double tpr, double eps, double g_max) {
  if (!(tpr >= 0.0 && tpr <= 1.0)) throw Error(ErrorCode::ConfigError, "tpr must lie in [0, 1]");
  return std::clamp(tpr - wasserstein_tpr_bound(eps, g_max), 0.0, 1.0);
}

FprConcentration fpr_concentration_bound(std::size_t n, std::size_t n_calibration, double eps, double fpr_star) {
  if (n == 0 || n_calibration == 0) throw Error(ErrorCode::ConfigError, "n and N must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::ConfigError, "eps must lie in (0, 1)");
  if (!(fpr_star >= 0.0 && fpr_star <= 1.0)) throw Error(ErrorCode::ConfigError, "fpr* must lie in [0, 1]");
  const double nn = static_cast<double>(n);
  FprConcentration b;
  b.test_term = 2.0 * std::exp(-(nn * eps * eps / 2.0) / (fpr_star * (1.0 - fpr_star) + eps / 3.0));
  b.calibration_term = 2.0 * std::exp(-static_cast<double>(n_calibration) * eps * eps / 8.0);
  b.total = b.test_term + b.calibration_term;
  return b;
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::ConfigError, "probability must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double snr_from_auroc(double auroc) { return std::numbers::sqrt2 * inverse_normal_cdf(auroc); }

std::size_t sample_complexity(double rho, double eps) {
  if (!(rho > 0.0)) throw Error(ErrorCode::ConfigError, "rho must be > 0");
  if (!(eps >= 0.0 && eps < 1.0)) throw Error(ErrorCode::ConfigError, "eps must lie in [0, 1)");
  // Guard the ceiling against representation noise such as 4/0.25 = 16.000000000000004.
  const double v = 4.0 * (1.0 - eps) * (1.0 - eps) / (rho * rho);
  return static_cast<std::size_t>(std::ceil(v - 1e-9));
}

bool certified_radius_check(double delta_s, double kappa, double sigma, double eta) {
  if (!(sigma >= 0.0) || !(eta >= 0.0)) throw Error(ErrorCode::ConfigError, "sigma and eta must be >= 0");
  return delta_s > kappa * sigma + eta;
}

Certificate certify(const MemSad& detector, const std::vector<Embedding>& reference, const Embedding& victim_query,
                    const Embedding& candidate, double eta) {
  if (reference.empty()) throw Error(ErrorCode::EmptyInput, "no reference entries");
  const double kappa = detector.config().kappa;
  const double sigma = detector.sigma();
  Certificate c;
  c.similarity_ceiling = -INFINITY;
  for (const auto& m : reference) c.similarity_ceiling = std::max(c.similarity_ceiling, cosim(m, victim_query));
  c.adversarial_similarity = cosim(candidate, victim_query);
  c.gap = c.adversarial_similarity - c.similarity_ceiling;
  c.radius = kappa * sigma + eta;
  c.gap_holds = certified_radius_check(c.gap, kappa, sigma, eta);

  const auto& history = detector.history();
  bool in_history = false;
  std::vector<double> sims;
  for (const auto& h : history) {
    in_history |= cosim(h, victim_query) >= 1.0 - 1e-12;
    sims.push_back(cosim(candidate, h));
  }
  if (!c.gap_holds) c.downgrade_reasons.push_back("gap below radius");
  if (!in_history) c.downgrade_reasons.push_back("victim query not in history");
  const double mean_h = sims.empty() ? 0.0 : mean(sims);
  const double std_h = sample_stddev(sims);
  if (sims.empty() || c.adversarial_similarity < mean_h - kappa * std_h) {
    c.downgrade_reasons.push_back("victim query atypical for candidate");
  }
  if (c.similarity_ceiling < detector.threshold() - eta) c.downgrade_reasons.push_back("ceiling below threshold");
  if (detector.config().mode == ScoreMode::Combined && !sims.empty() && mean_h < detector.mu()) {
    c.downgrade_reasons.push_back("history mean below reference mean");
  }
  c.deterministic = c.downgrade_reasons.empty();
  return c;
}

BoundReport BoundReport::make(std::string name, std::string inputs, double bound, std::optional<double> empirical) {
  BoundReport r{std::move(name), std::move(inputs), bound, empirical, true};
  if (empirical) r.satisfied = *empirical <= bound;
  return r;
}

namespace {

// Supremum distance between the ECDF of `sample` and that of `population`.
double ecdf_sup_distance(std::vector<double> sample, const std::vector<double>& sorted_population) {
  std::sort(sample.begin(), sample.end());
  const double ns = static_cast<double>(sample.size());
  const double np = static_cast<double>(sorted_population.size());
  double sup = 0.0;
  std::size_t is = 0;
  for (std::size_t ip = 0; ip < sorted_population.size();) {
    const double x = sorted_population[ip];
    while (ip < sorted_population.size() && sorted_population[ip] == x) ++ip;
    while (is < sample.size() && sample[is] <= x) ++is;
    sup = std::max(sup, std::abs(static_cast<double>(is) / ns - static_cast<double>(ip) / np));
  }
  return sup;
}

std::string kv(std::initializer_list<std::pair<const char*, double>> items) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : items) {
    if (!first) os << ';';
    os << k << '=' << v;
    first = false;
  }
  return os.str();
}

}  // namespace

std::vector<BoundReport> bound_reports(const std::vector<double>& scores, double kappa, std::uint64_t seed) {
  std::vector<BoundReport> out;
  const double sigma = sample_stddev(scores);

  for (std::size_t n : {25, 50, 100, 200, 500}) {
    const auto c = calibration_resampling(scores, n, kappa, 0.05, 1000, seed);
    out.push_back(BoundReport::make("calibration", kv({{"N", double(n)}, {"kappa", kappa}, {"delta", 0.05},
                                                       {"sigma", sigma}}),
                                    c.bound, c.p95_observed));
  }

  {
    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    Rng rng = make_rng(seed, 0xD4);
    std::vector<double> sups;
    std::vector<double> sample(200);
    for (int t = 0; t < 1000; ++t) {
      for (auto& x : sample) x = scores[uniform_index(rng, scores.size())];
      sups.push_back(ecdf_sup_distance(sample, sorted));
    }
    out.push_back(BoundReport::make("dkw_fpr", kv({{"N", 200}, {"delta", 0.05}}), dkw_fpr_bound(200, 0.05),
                                    quantile(sups, 0.95)));
  }

  {
    const double s = 0.05, shift = 0.01;
    double worst = 0.0;
    for (int i = -400; i <= 400; ++i) {
      const double tau = static_cast<double>(i) * 0.001;
      worst = std::max(worst, std::abs(normal_cdf(tau / s) - normal_cdf((tau - shift) / s)));
    }
    out.push_back(BoundReport::make("wasserstein_tpr", kv({{"eps_w", shift}, {"sigma", s}}),
                                    wasserstein_tpr_bound(shift, gaussian_gmax(s)), worst));
  }

  {
    const std::size_t n = 1000;
    const double fpr = 0.01, eps = 0.01;
    const auto b = fpr_concentration_bound(n, 200, eps, fpr);
    Rng rng = make_rng(seed, 0xB3);
    std::binomial_distribution<std::size_t> bin(n, fpr);
    std::size_t tail = 0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
      const double f = static_cast<double>(bin(rng)) / static_cast<double>(n);
      if (std::abs(f - fpr) >= eps) ++tail;
    }
    out.push_back(BoundReport::make("fpr_concentration_test_term", kv({{"n", double(n)}, {"eps", eps}, {"fpr", fpr}}),
                                    b.test_term, static_cast<double>(tail) / reps));
  }

  {
    const double s = 0.05, drift = 1e-3;
    const auto w = regret_window(s, drift);
    out.push_back(BoundReport::make("regret_window", kv({{"sigma", s}, {"drift", drift}, {"m_star", double(w.m_star)}}),
                                    w.regret, simulate_tracking_error(s, drift, w.m_star, 20000, seed)));
  }

  out.push_back(BoundReport::make("snr_from_auroc", kv({{"auroc", 0.914}}), snr_from_auroc(0.914), std::nullopt));
  out.push_back(BoundReport::make("sample_complexity", kv({{"rho", 0.5}, {"eps", 0.0}}),
                                  static_cast<double>(sample_complexity(0.5, 0.0)), std::nullopt));
  out.push_back(BoundReport::make("sample_complexity", kv({{"rho", 0.5}, {"eps", 0.05}}),
                                  static_cast<double>(sample_complexity(0.5, 0.05)), std::nullopt));
  out.push_back(BoundReport::make("certified_radius", kv({{"gap", 0.13}, {"radius", 0.08}}),
                                  certified_radius_check(0.13, 0.0, 0.0, 0.08) ? 1.0 : 0.0, std::nullopt));
  out.push_back(BoundReport::make("clopper_pearson_hi", kv({{"k", 0}, {"n", 1000}}), clopper_pearson(0, 1000).hi,
                                  std::nullopt));
  return out;
}

}  // namespace memshield
