#include "memshield/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "memshield/error.hpp"
#include "memshield/random.hpp"

namespace memshield {

namespace {

struct Candidate {
  double score;
  const std::string* id;
  bool poison;
};

bool before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return *a.id < *b.id;
}

}  // namespace

std::vector<bool> poison_retrieved(const MemoryStore& store, const std::vector<MemoryEntry>& poison,
                                   const std::vector<Embedding>& queries, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::ConfigError, "k must be >= 1");
  std::vector<bool> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    if (poison.empty()) {
      out.push_back(false);
      continue;
    }
    // Merged top-k lies within the store's own top-k plus the poison set.
    std::vector<Candidate> cands;
    if (!store.empty()) {
      for (const auto& h : store.retrieve(q, std::min(k, store.size()))) {
        cands.push_back({h.score, &store.at(h.index).id, false});
      }
    }
    for (const auto& p : poison) cands.push_back({cosim(q, p.embedding), &p.id, true});
    const std::size_t depth = std::min(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(depth), cands.end(), before);
    bool hit = false;
    for (std::size_t i = 0; i < depth; ++i) hit |= cands[i].poison;
    out.push_back(hit);
  }
  return out;
}

double asr_r(const MemoryStore& store, const std::vector<MemoryEntry>& poison, const std::vector<Embedding>& queries,
             std::size_t k) {
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "no victim queries");
  const auto hits = poison_retrieved(store, poison, queries, k);
  return static_cast<double>(std::count(hits.begin(), hits.end(), true)) / static_cast<double>(hits.size());
}

double benign_accuracy(const MemoryStore& before_store, const MemoryStore& after_store,
                       const std::vector<Embedding>& queries, std::size_t k) {
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "no benign queries");
  std::size_t same = 0;
  for (const auto& q : queries) {
    std::set<std::string> a, b;
    for (const auto& h : before_store.retrieve(q, std::min(k, before_store.size())))
      a.insert(before_store.at(h.index).id);
    for (const auto& h : after_store.retrieve(q, std::min(k, after_store.size())))
      b.insert(after_store.at(h.index).id);
    if (a == b) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(queries.size());
}

Rates tpr_fpr(const std::vector<bool>& flagged, const std::vector<bool>& labels) {
  if (flagged.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "verdict/label count mismatch");
  Rates r{0, 0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      flagged[i] ? ++r.tp : ++r.fn;
    } else {
      flagged[i] ? ++r.fp : ++r.tn;
    }
  }
  if (r.tp + r.fn == 0 || r.fp + r.tn == 0) {
    throw Error(ErrorCode::ConfigError, "rates need at least one positive and one negative label");
  }
  r.tpr = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  r.fpr = static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn);
  return r;
}

Rates tpr_fpr(const std::vector<DefenseVerdict>& verdicts, const std::vector<bool>& labels) {
  std::vector<bool> f;
  f.reserve(verdicts.size());
  for (const auto& v : verdicts) f.push_back(v.flagged);
  return tpr_fpr(f, labels);
}

double auroc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "score/label count mismatch");
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks for ties.
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  double rpos = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      rpos += rank[i];
      ++npos;
    }
  }
  const std::size_t nneg = labels.size() - npos;
  if (npos == 0 || nneg == 0) throw Error(ErrorCode::ConfigError, "AUROC needs both classes");
  const double np = static_cast<double>(npos);
  return (rpos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(nneg));
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "score/label count mismatch");
  const auto npos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t nneg = labels.size() - npos;
  if (npos == 0 || nneg == 0) throw Error(ErrorCode::ConfigError, "ROC needs both classes");
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double thr = scores[idx[i]];
    for (; i < idx.size() && scores[idx[i]] == thr; ++i) (labels[idx[i]] ? tp : fp)++;
    out.push_back({thr, static_cast<double>(fp) / static_cast<double>(nneg),
                   static_cast<double>(tp) / static_cast<double>(npos)});
  }
  return out;
}

Interval bootstrap_ci(const std::vector<double>& values, std::size_t resamples, double level, std::uint64_t seed) {
  if (values.size() < 2) throw Error(ErrorCode::InsufficientCalibration, "bootstrap needs at least two values");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::ConfigError, "level must lie in (0, 1)");
  Rng rng = make_rng(seed, 0xB5);
  std::vector<double> means;
  means.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[uniform_index(rng, values.size())];
    means.push_back(s / static_cast<double>(values.size()));
  }
  const double a = (1.0 - level) / 2.0;
  return {quantile(means, a), quantile(means, 1.0 - a)};
}

Interval clopper_pearson(std::size_t k, std::size_t n, double level) {
  if (n == 0 || k > n) throw Error(ErrorCode::ConfigError, "clopper_pearson needs 0 <= k <= n, n >= 1");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::ConfigError, "level must lie in (0, 1)");
  const double alpha = 1.0 - level;
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  Interval ci{0.0, 1.0};
  if (k == 0) {
    ci.hi = 1.0 - std::pow(alpha / 2.0, 1.0 / nn);
  } else if (k == n) {
    ci.lo = std::pow(alpha / 2.0, 1.0 / nn);
  } else {
    ci.lo = boost::math::quantile(boost::math::beta_distribution<double>(kk, nn - kk + 1.0), alpha / 2.0);
    ci.hi = boost::math::quantile(boost::math::beta_distribution<double>(kk + 1.0, nn - kk), 1.0 - alpha / 2.0);
  }
  return ci;
}

double binomial_test_one_sided(std::size_t k, std::size_t n, double p0) {
  if (k > n) throw Error(ErrorCode::ConfigError, "k must not exceed n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(ErrorCode::ConfigError, "p0 must lie in (0, 1)");
  if (k == 0) return 1.0;
  const boost::math::binomial_distribution<double> bin(static_cast<double>(n), p0);
  return boost::math::cdf(boost::math::complement(bin, static_cast<double>(k - 1)));
}

std::size_t binomial_critical_k(std::size_t n, double p0, double alpha) {
  for (std::size_t k = 0; k <= n; ++k) {
    if (binomial_test_one_sided(k, n, p0) <= alpha) return k;
  }
  return n + 1;
}

double binomial_power(std::size_t n, double p0, double p_alt, double alpha) {
  if (!(p_alt >= 0.0 && p_alt <= 1.0)) throw Error(ErrorCode::ConfigError, "p_alt must lie in [0, 1]");
  const std::size_t kc = binomial_critical_k(n, p0, alpha);
  if (kc > n) return 0.0;
  if (kc == 0) return 1.0;
  if (p_alt == 1.0) return 1.0;
  if (p_alt == 0.0) return 0.0;
  const boost::math::binomial_distribution<double> bin(static_cast<double>(n), p_alt);
  return boost::math::cdf(boost::math::complement(bin, static_cast<double>(kc - 1)));
}

double bonferroni(double alpha, std::size_t comparisons) {
  if (comparisons == 0) throw Error(ErrorCode::ConfigError, "need at least one comparison");
  return alpha / static_cast<double>(comparisons);
}

std::string format_fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

void TrialReport::finalize() { asr_t = asr_r * asr_a; }

}  // namespace memshield
