#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "memshield/defenses.hpp"
#include "memshield/embedding.hpp"
#include "memshield/memory_store.hpp"
#include "memshield/stats.hpp"

namespace memshield {

/// Fraction of queries whose top-k over (store + poison) holds a poison entry.
double asr_r(const MemoryStore& store, const std::vector<MemoryEntry>& poison, const std::vector<Embedding>& queries,
             std::size_t k);

/// Per-query flag: does the top-k over (store + poison) contain a poison entry.
std::vector<bool> poison_retrieved(const MemoryStore& store, const std::vector<MemoryEntry>& poison,
                                   const std::vector<Embedding>& queries, std::size_t k);

/// Fraction of queries whose top-k id set is identical in both stores.
double benign_accuracy(const MemoryStore& before, const MemoryStore& after, const std::vector<Embedding>& queries,
                       std::size_t k);

struct Rates {
  double tpr;
  double fpr;
  std::size_t tp, fn, fp, tn;
};

/// labels[i] is true for poison. Throws ConfigError unless both classes occur.
Rates tpr_fpr(const std::vector<bool>& flagged, const std::vector<bool>& labels);
Rates tpr_fpr(const std::vector<DefenseVerdict>& verdicts, const std::vector<bool>& labels);

/// Mann-Whitney AUROC, ties credited 1/2. Positive = label true.
double auroc(const std::vector<double>& scores, const std::vector<bool>& labels);

struct RocPoint {
  double threshold;  // flag when score >= threshold
  double fpr;
  double tpr;
};

/// Empirical ROC, one point per distinct score from high to low, starting at (0, 0).
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels);

struct Interval {
  double lo;
  double hi;
};

/// Percentile bootstrap of the mean with B seeded resamples.
Interval bootstrap_ci(const std::vector<double>& values, std::size_t resamples = 1000, double level = 0.95,
                      std::uint64_t seed = 0xB007);

/// Exact binomial interval for k successes in n trials.
Interval clopper_pearson(std::size_t k, std::size_t n, double level = 0.95);

/// P(X >= k) for X ~ Binomial(n, p0).
double binomial_test_one_sided(std::size_t k, std::size_t n, double p0 = 0.05);

/// Smallest k whose one-sided p-value is <= alpha, or n + 1 if none is.
std::size_t binomial_critical_k(std::size_t n, double p0, double alpha);

/// Probability of rejecting at level alpha when the true rate is p_alt.
double binomial_power(std::size_t n, double p0, double p_alt, double alpha);

double bonferroni(double alpha = 0.05, std::size_t comparisons = 15);

/// Fixed-point text with the given number of decimals.
std::string format_fixed(double v, int decimals);

struct DefenseMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
  double auroc = 0.5;
  std::size_t poison_flagged = 0;
  std::size_t poison_total = 0;
  std::size_t benign_flagged = 0;
  std::size_t benign_total = 0;
  double post_filter_asr_r = 0.0;
  double benign_accuracy = 1.0;
};

struct TrialReport {
  std::uint64_t seed = 0;
  std::map<std::string, std::string> regime;
  double asr_r = 0.0;
  double asr_a = 0.0;
  double asr_t = 0.0;
  std::map<std::string, DefenseMetrics> defenses;

  /// Sets asr_t = asr_r * asr_a.
  void finalize();
};

}  // namespace memshield
