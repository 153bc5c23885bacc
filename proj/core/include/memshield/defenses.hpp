#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "memshield/embedding.hpp"
#include "memshield/memory_store.hpp"

namespace memshield {

/// Per-entry decision. Scores are oriented so that higher means more
/// anomalous, and flagged is always score > threshold.
struct DefenseVerdict {
  std::string defense;
  double score = 0.0;
  double threshold = 0.0;
  bool flagged = false;

  static DefenseVerdict make(std::string defense, double score, double threshold);
};

// ---------------------------------------------------------------------------
// MemSAD

enum class ScoreMode { Max, Combined };

std::string_view to_string(ScoreMode m);
ScoreMode parse_score_mode(std::string_view s);

/// Similarity of an embedding to a query history, in the requested mode.
/// Throws NotCalibrated on an empty history.
double history_score(const Embedding& e, const std::deque<Embedding>& history, ScoreMode mode);

/// Calibrated detector snapshot. Rolling updates return a new snapshot.
class MemSad {
 public:
  struct Config {
    std::size_t capacity = 20;
    double kappa = 2.0;
    ScoreMode mode = ScoreMode::Combined;
  };

  MemSad() = default;
  explicit MemSad(Config cfg);

  /// Fills the history with `queries` (FIFO, last `capacity` kept) and sets
  /// mean/std from the reference scores. Throws InsufficientCalibration when
  /// fewer than two reference entries are given.
  MemSad calibrated(const std::vector<Embedding>& reference, const std::vector<Embedding>& queries) const;

  /// Appends one query, evicting the oldest at capacity, and recomputes the
  /// calibration statistics from the stored reference set.
  MemSad rolled(const Embedding& query) const;

  /// Same as rolled() with a different capacity (e.g. the regret-optimal window).
  MemSad with_capacity(std::size_t capacity) const;
  MemSad with_kappa(double kappa) const;

  double score(const Embedding& e) const;
  DefenseVerdict filter(const Embedding& e) const;

  bool is_calibrated() const noexcept { return calibrated_; }
  const Config& config() const noexcept { return cfg_; }
  double mu() const;
  double sigma() const;
  double threshold() const;
  std::size_t n() const noexcept { return reference_.size(); }
  const std::deque<Embedding>& history() const noexcept { return history_; }
  const std::vector<double>& reference_scores() const noexcept { return reference_scores_; }

 private:
  void recompute();
  void require_calibrated() const;

  Config cfg_;
  std::deque<Embedding> history_;
  std::vector<Embedding> reference_;
  std::vector<double> reference_scores_;
  double mu_ = 0.0;
  double sigma_ = 0.0;
  bool calibrated_ = false;
};

// ---------------------------------------------------------------------------
// MemSAD+: character n-gram divergence on the raw surface text

using CharDistribution = std::map<std::string, double>;

/// Normalized character n-gram frequencies of `text` (lowercased, raw).
CharDistribution char_ngrams(std::string_view text, std::size_t n = 3);
CharDistribution char_ngrams(const std::vector<std::string>& texts, std::size_t n = 3);

/// Jensen-Shannon divergence in bits, in [0, 1].
double jensen_shannon(const CharDistribution& p, const CharDistribution& q);

struct MemSadPlusScore {
  double semantic;
  double char_divergence;
  double char_excess;  // divergence minus its expected value at this text length
};

class MemSadPlus {
 public:
  /// `baseline_texts` estimate the benign n-gram distribution. Divergence of
  /// `calibration_texts` is fit linearly in log text length; the char
  /// threshold is the `quantile` of the residuals.
  MemSadPlus(MemSad semantic, const std::vector<std::string>& baseline_texts,
             const std::vector<std::string>& calibration_texts, double quantile = 0.99, std::size_t n = 3);

  MemSadPlusScore score(std::string_view text, const Embedding& e) const;
  double char_divergence(std::string_view text) const;
  double char_excess(std::string_view text) const;

  /// Flags when either the semantic or the character test fires. The verdict
  /// score is the larger of the two threshold-normalized margins.
  DefenseVerdict filter(std::string_view text, const Embedding& e) const;

  double char_threshold() const noexcept { return char_threshold_; }
  const MemSad& semantic() const noexcept { return semantic_; }

 private:
  MemSad semantic_;
  CharDistribution baseline_;
  static double log_length(std::string_view text);

  double char_threshold_ = 0.0;
  double intercept_ = 0.0;
  double slope_ = 0.0;
  std::size_t n_ = 3;
};

// ---------------------------------------------------------------------------
// Watermark

struct WatermarkConfig {
  double gamma = 0.45;
  double z_write = 2.0;
  double z_thr = 1.5;
  std::uint64_t seed = 0x3A7E12ULL;

  void validate() const;
};

/// Whether `c` is green after `prev`; '\0' stands in before the first char.
bool is_green(char prev, char c, const WatermarkConfig& cfg);

struct GreenCount {
  std::size_t green = 0;
  std::size_t total = 0;  // characters from the 95-char printable alphabet
};

GreenCount count_green(std::string_view text, const WatermarkConfig& cfg);

/// z = (g - gamma n) / sqrt(gamma (1 - gamma) n). Throws EmptyInput when n = 0.
double watermark_z(std::size_t green, std::size_t n, double gamma);

struct WatermarkResult {
  std::string text;
  double z;
  std::size_t swaps;
  std::size_t case_flips;
};

/// Greedy synonym swaps that raise the green count until z >= z_write or
/// no swap helps, then letter-case flips if z is still short.
WatermarkResult watermark_write(std::string_view text, const WatermarkConfig& cfg, const SynonymTable& table);

/// Flags (as unwatermarked) when z < z_thr. The verdict score is -z.
DefenseVerdict watermark_detect(std::string_view text, const WatermarkConfig& cfg);

// ---------------------------------------------------------------------------
// Validation

/// One pattern per line; '#' starts a comment line; blank lines skipped.
std::vector<std::string> load_patterns(const std::filesystem::path& path);

/// Flags when any pattern occurs as a case-insensitive substring. The score
/// is the number of matching patterns.
DefenseVerdict validation_filter(std::string_view text, const std::vector<std::string>& patterns);

// ---------------------------------------------------------------------------
// Proactive probes

class Proactive {
 public:
  Proactive(std::vector<Embedding> probes, double tau = 0.19);

  /// Threshold at the `quantile` of mean-probe similarity over `benign`.
  static Proactive auto_threshold(std::vector<Embedding> probes, const std::vector<Embedding>& benign,
                                  double quantile = 0.99);

  double score(const Embedding& e) const;
  DefenseVerdict filter(const Embedding& e) const;
  double tau() const noexcept { return tau_; }
  const std::vector<Embedding>& probes() const noexcept { return probes_; }

 private:
  std::vector<Embedding> probes_;
  double tau_;
};

std::vector<Embedding> embed_all(const std::vector<std::string>& texts, const Embedder& embedder);

// ---------------------------------------------------------------------------
// Composite

/// Disjunction of the watermark, MemSAD and proactive verdicts. Other
/// verdicts in the list are ignored; throws ConfigError if one of the three
/// is missing. Score is the number of firing members.
DefenseVerdict composite_filter(const std::vector<DefenseVerdict>& sub_verdicts);

// ---------------------------------------------------------------------------
// OOD baselines

struct OodScores {
  double energy;
  double mahalanobis;
  double knn;
};

class OodBaselines {
 public:
  /// Covariance gets +1e-6 * trace / d on the diagonal before inversion.
  /// Throws NumericalError if it is still not positive definite.
  OodBaselines(std::vector<Embedding> calibration_queries, const std::vector<Embedding>& benign,
               double temperature = 1.0, std::size_t knn_k = 10);

  /// Inverted energy: T * logsumexp(cos / T) over the calibration queries.
  double energy(const Embedding& e) const;
  double mahalanobis(const Embedding& e) const;
  /// Euclidean distance to the knn_k-th nearest benign embedding.
  double knn(const Embedding& e) const;
  OodScores score(const Embedding& e) const;

  const std::vector<double>& mean() const noexcept { return mean_; }

 private:
  std::vector<Embedding> queries_;
  std::vector<Embedding> benign_;
  std::vector<double> mean_;
  std::vector<double> precision_;  // row-major d x d inverse covariance
  double temperature_;
  std::size_t knn_k_;
};

}  // namespace memshield
