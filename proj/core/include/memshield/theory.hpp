#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memshield/defenses.hpp"
#include "memshield/embedding.hpp"
#include "memshield/random.hpp"

namespace memshield {

// Raw-vector helpers. The checks below work on unit vectors directly, so the
// text encoder never has to be differentiable.
using Vec = std::vector<double>;

Vec vnormalized(const Vec& a);
Vec random_unit_vector(std::size_t d, Rng& rng);
/// Random unit vector orthogonal to `e`.
Vec random_tangent(const Vec& e, Rng& rng);
/// Point reached by walking `angle` radians from unit `e` along unit tangent `t`.
Vec sphere_step(const Vec& e, const Vec& t, double angle);
/// Constant-speed great-circle interpolation between unit vectors.
Vec slerp(const Vec& a, const Vec& b, double t);

/// Central-difference gradient of f at x with step h.
Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5);

/// Tangent-space gradient of e -> e.v on the unit sphere: v - (e.v) e.
/// Throws DimensionMismatch.
Vec sphere_gradient(const Vec& e, const Vec& v);

enum class MonotoneMap { Identity, Affine, Exp, Logistic };
std::string_view to_string(MonotoneMap g);
double apply_map(MonotoneMap g, double x);
double map_derivative(MonotoneMap g, double x);

struct CouplingResult {
  double cosine;         // cosine of the angle between the two gradients
  double scale;          // |grad(g o R)| / |grad R|, close to g'(R)
  Vec composed_gradient;
  Vec retrieval_gradient;
};

/// Compares the finite-difference gradient of x -> g(cos(x/|x|, q)) at unit
/// `e` with the analytic sphere gradient of the retrieval score.
CouplingResult coupling_check(const Vec& e, const Vec& q, MonotoneMap g, double h = 1e-5);

struct PathWitness {
  Vec query;
  Vec start;
  Vec end;
  std::vector<Vec> path;
  double retrieval_start, retrieval_end;
  double detector_start, detector_end;
  bool monotone_along_path;  // retrieval rises and detection falls at every step
  bool verified;
};

/// For the detector D = -R: a great-circle path on which retrieval improves
/// while the detector score drops. d >= 2.
PathWitness noncoupled_path_witness(std::size_t d, std::uint64_t seed = 7, std::size_t steps = 64);

/// |R_adv - (mu + kappa sigma)| / sigma. Throws DegenerateCalibration when sigma <= 0.
double fisher_rao_bound(double retrieval_adv, double mu, double kappa, double sigma);

/// Midpoint-rule integral of |gradR . dgamma| / sigma along a sampled path.
double fisher_rao_path_length(const std::vector<Vec>& path, const Vec& query, double sigma);

/// Threshold estimation tolerance for N reference scores:
/// sigma (1/sqrt(N) + kappa/sqrt(2(N-1))) sqrt(2 log(4/delta)).
double calibration_bound(std::size_t n, double kappa, double delta, double sigma);

struct CalibrationCheck {
  std::size_t n;
  double bound;
  double coverage;         // fraction of resamples with |tau_N - tau*| <= bound
  double median_observed;  // median |tau_N - tau*|
  double p95_observed;
  double ratio;            // bound / median_observed
};

/// Draws `trials` resamples of size n (with replacement) from `population`
/// and compares each mu + kappa sigma estimate with the population value.
CalibrationCheck calibration_resampling(const std::vector<double>& population, std::size_t n, double kappa,
                                        double delta, std::size_t trials, std::uint64_t seed);

/// Per-step regret model sigma/sqrt(m) + m delta.
double regret_model(double sigma, double drift, std::size_t m);

struct RegretWindow {
  std::size_t m_star;
  double regret;
};

/// Balance-point window round((sigma/drift)^(2/3)), at least 1.
RegretWindow regret_window(double sigma, double drift);

/// Mean absolute error of a trailing-window mean tracking a linearly drifting
/// Gaussian mean.
double simulate_tracking_error(double sigma, double drift, std::size_t window, std::size_t steps,
                               std::uint64_t seed);

/// sqrt(log(2/delta) / (2N)).
double dkw_fpr_bound(std::size_t n, double delta);

/// sqrt(2 g_max eps_w).
double wasserstein_tpr_bound(double eps_w, double g_max);
/// Peak density of N(., sigma^2).
double gaussian_gmax(double sigma);
/// tpr - sqrt(2 g_max eps), clamped to [0, 1].
double dro_tpr_floor(double tpr, double eps, double g_max);

struct FprConcentration {
  double test_term;         // 2 exp(-(n eps^2 / 2) / (fpr(1 - fpr) + eps/3))
  double calibration_term;  // 2 exp(-N eps^2 / 8)
  double total;
};

FprConcentration fpr_concentration_bound(std::size_t n, std::size_t n_calibration, double eps, double fpr_star);

/// Standard normal quantile.
double inverse_normal_cdf(double p);
/// sqrt(2) * inverse_normal_cdf(auroc).
double snr_from_auroc(double auroc);
/// ceil(4 (1 - eps)^2 / rho^2).
std::size_t sample_complexity(double rho, double eps);

/// delta_s > kappa sigma + eta. Throws ConfigError on negative sigma or eta.
bool certified_radius_check(double delta_s, double kappa, double sigma, double eta);

struct Certificate {
  double similarity_ceiling;  // max benign reference similarity to the victim query
  double adversarial_similarity;
  double gap;
  double radius;  // kappa sigma + eta
  bool gap_holds;
  bool deterministic;
  std::vector<std::string> downgrade_reasons;
};

/// Certificate for candidate `c` against a calibrated detector. The gap
/// condition alone gives a probabilistic statement; it is promoted to
/// deterministic only when the monitored premises hold:
///   - the victim query is in the detector's history,
///   - it is typical for c: cos(q, c) >= mean_H(c) - kappa std_H(c),
///   - the ceiling is not below the threshold: ceiling >= tau - eta,
///   - for the combined score, mean_H(c) >= mu.
/// Failed premises are listed in downgrade_reasons.
Certificate certify(const MemSad& detector, const std::vector<Embedding>& reference, const Embedding& victim_query,
                    const Embedding& candidate, double eta);

struct BoundReport {
  std::string name;
  std::string inputs;
  double bound = 0.0;
  std::optional<double> empirical;
  bool satisfied = true;

  static BoundReport make(std::string name, std::string inputs, double bound, std::optional<double> empirical);
};

/// The closed-form bounds with Monte Carlo empirical counterparts where one
/// is defined. `scores` is a benign calibration score population.
std::vector<BoundReport> bound_reports(const std::vector<double>& scores, double kappa, std::uint64_t seed);

}  // namespace memshield
