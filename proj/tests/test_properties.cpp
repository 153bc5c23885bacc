// Randomized property checks. Each generator is seeded so failures replay.
#include <algorithm>
#include <cmath>

#include "memshield/defenses.hpp"
#include "memshield/metrics.hpp"
#include "memshield/propagation.hpp"
#include "memshield/reports.hpp"
#include "memshield/stats.hpp"
#include "memshield/theory.hpp"
#include "support.hpp"

using namespace memshield;
using namespace memshield::testing;

namespace {

constexpr int kCases = 200;

std::vector<bool> random_labels(Rng& rng, std::size_t n) {
  std::vector<bool> l(n);
  for (auto&& x : l) x = bernoulli(rng, 0.4);
  l[0] = true;
  l[1] = false;
  return l;
}

// Scores on a coarse grid so ties are common.
std::vector<double> random_scores(Rng& rng, std::size_t n) {
  std::vector<double> s(n);
  for (double& x : s) x = static_cast<double>(uniform_index(rng, 8)) / 8.0;
  return s;
}

Vec tangent_part(const Vec& e, const Vec& v) { return sphere_gradient(e, v); }

}  // namespace

TEST(Property, EmbeddingNormAndSynonymInvariance) {
  Embedder emb;
  const auto& table = emb.table();
  Rng rng = make_rng(101);
  for (int c = 0; c < kCases; ++c) {
    const auto text = random_sentence(rng);
    const auto e = emb.embed(text);
    ASSERT_NEAR(norm(e.values()), 1.0, 1e-9);
    auto tokens = tokenize(text);
    for (auto& t : tokens) {
      const auto alts = table.alternatives(t);
      if (!alts.empty() && bernoulli(rng, 0.5)) t = pick(alts, rng);
    }
    ASSERT_EQ(emb.embed(join(tokens)), e) << text;
  }
}

TEST(Property, RetrievalPrefixAndRankConsistency) {
  Rng rng = make_rng(102);
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 5 + uniform_index(rng, 60);
    const std::size_t d = 2 + uniform_index(rng, 10);
    const auto s = random_store(n, d, 1000 + c);
    const auto q = random_embedding(d, rng);
    const auto all = s.retrieve(q, n);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto top = s.retrieve(q, k);
      for (std::size_t i = 0; i < k; ++i) ASSERT_EQ(top[i].index, all[i].index);
    }
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(s.rank(q, s.at(all[i].index).id), i + 1);
    for (std::size_t i = 1; i < n; ++i) ASSERT_GE(all[i - 1].score, all[i].score);
  }
}

TEST(Property, AurocMatchesPairOracle) {
  Rng rng = make_rng(103);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t n = 2 + uniform_index(rng, 49);
    const auto l = random_labels(rng, n);
    const auto s = random_scores(rng, n);
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (l[i] && !l[j]) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    ASSERT_NEAR(auroc(s, l), wins / pairs, 1e-12);
  }
}

TEST(Property, RatesMatchCounting) {
  Rng rng = make_rng(104);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t n = 2 + uniform_index(rng, 60);
    const auto l = random_labels(rng, n);
    std::vector<bool> f(n);
    for (auto&& x : f) x = bernoulli(rng, 0.5);
    std::size_t tp = 0, p = 0, fp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p += l[i];
      tp += l[i] && f[i];
      fp += !l[i] && f[i];
    }
    const auto r = tpr_fpr(f, l);
    ASSERT_DOUBLE_EQ(r.tpr, static_cast<double>(tp) / p);
    ASSERT_DOUBLE_EQ(r.fpr, static_cast<double>(fp) / (n - p));
  }
}

TEST(Property, BootstrapWithinSampleRange) {
  Rng rng = make_rng(105);
  for (int c = 0; c < 100; ++c) {
    std::vector<double> v(2 + uniform_index(rng, 10));
    for (double& x : v) x = uniform01(rng);
    const auto ci = bootstrap_ci(v, 200, 0.95, c);
    ASSERT_GE(ci.lo, *std::min_element(v.begin(), v.end()));
    ASSERT_LE(ci.hi, *std::max_element(v.begin(), v.end()));
    ASSERT_LE(ci.lo, ci.hi);
  }
}

TEST(Property, BinomialTailMonotoneAndIntervalsNested) {
  Rng rng = make_rng(106);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t n = 1 + uniform_index(rng, 300);
    const double p0 = 0.01 + 0.9 * uniform01(rng);
    const std::size_t k = uniform_index(rng, n + 1);
    if (k > 0) ASSERT_LE(binomial_test_one_sided(k, n, p0), binomial_test_one_sided(k - 1, n, p0) + 1e-15);
    const auto ci95 = clopper_pearson(k, n, 0.95);
    const auto ci99 = clopper_pearson(k, n, 0.99);
    ASSERT_LE(ci99.lo, ci95.lo + 1e-12);
    ASSERT_GE(ci99.hi, ci95.hi - 1e-12);
    const double phat = static_cast<double>(k) / n;
    ASSERT_LE(ci95.lo, phat + 1e-12);
    ASSERT_GE(ci95.hi, phat - 1e-12);
  }
}

TEST(Property, WatermarkZScalesWithSqrtTwo) {
  Rng rng = make_rng(107);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t n = 1 + uniform_index(rng, 500);
    const std::size_t g = uniform_index(rng, n + 1);
    const double gamma = 0.05 + 0.9 * uniform01(rng);
    ASSERT_NEAR(watermark_z(2 * g, 2 * n, gamma), std::sqrt(2.0) * watermark_z(g, n, gamma), 1e-9);
  }
}

TEST(Property, VerdictsAreOrientationNormalized) {
  Embedder emb;
  Rng rng = make_rng(108);
  std::vector<Embedding> ref, h;
  std::vector<std::string> texts;
  for (int i = 0; i < 30; ++i) {
    texts.push_back(random_sentence(rng));
    ref.push_back(emb.embed(texts.back()));
  }
  for (int i = 0; i < 10; ++i) h.push_back(emb.embed(random_sentence(rng)));
  const auto sad = MemSad(MemSad::Config{}).calibrated(ref, h);
  const MemSadPlus plus(sad, texts, texts);
  const Proactive pro(embed_all(fixtures::proactive_probes(), emb), 0.19);
  const WatermarkConfig wm;
  for (int c = 0; c < kCases; ++c) {
    const auto t = random_sentence(rng);
    const auto e = emb.embed(t);
    for (const auto& v : {sad.filter(e), plus.filter(t, e), pro.filter(e), watermark_detect(t, wm),
                          validation_filter(t, {"budget", "server"})}) {
      ASSERT_EQ(v.flagged, v.score > v.threshold) << v.defense;
    }
    const auto comp = composite_filter({watermark_detect(t, wm), sad.filter(e), pro.filter(e)});
    ASSERT_EQ(comp.flagged, watermark_detect(t, wm).flagged || sad.filter(e).flagged || pro.filter(e).flagged);
  }
}

TEST(Property, MaxModeCouplingWhenSameQueryAttainsBothMaxima) {
  Rng rng = make_rng(109);
  std::size_t checked = 0;
  for (int c = 0; c < 2000; ++c) {
    const std::size_t d = 4 + uniform_index(rng, 28);
    std::deque<Embedding> h;
    for (int i = 0; i < 5; ++i) h.push_back(random_embedding(d, rng));
    const Embedding& qstar = h[0];
    const auto c1 = near(qstar, 1.0 + 2 * uniform01(rng), rng);
    const auto c2 = near(qstar, 1.0 + 2 * uniform01(rng), rng);
    auto argmax = [&](const Embedding& e) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < h.size(); ++i)
        if (cosim(e, h[i]) > cosim(e, h[best])) best = i;
      return best;
    };
    if (argmax(c1) != 0 || argmax(c2) != 0) continue;
    ++checked;
    const double ds = history_score(c1, h, ScoreMode::Max) - history_score(c2, h, ScoreMode::Max);
    const double dr = cosim(c1, qstar) - cosim(c2, qstar);
    ASSERT_EQ(ds > 0, dr > 0);
    ASSERT_EQ(ds < 0, dr < 0);
  }
  EXPECT_GT(checked, 500u);
}

TEST(Property, CombinedModeDescentLowersMaxScoreUnderAlignment) {
  Rng rng = make_rng(110);
  std::size_t premise = 0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t d = 8 + uniform_index(rng, 24);
    std::deque<Embedding> h;
    const auto topic = random_embedding(d, rng);
    for (int i = 0; i < 6; ++i) h.push_back(near(topic, uniform01(rng) * 2.0, rng));
    const auto e = near(topic, uniform01(rng) * 2.0, rng);
    std::size_t best = 0;
    Vec mean_q(d, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (cosim(e, h[i]) > cosim(e, h[best])) best = i;
      for (std::size_t j = 0; j < d; ++j) mean_q[j] += h[i][j] / h.size();
    }
    const Vec g_max = tangent_part(e.values(), h[best].values());
    const Vec g_mean = tangent_part(e.values(), mean_q);
    const double gg = dot(g_max, g_max);
    if (gg < 1e-8) continue;
    const double beta = std::max(0.0, -dot(g_mean, g_max) / gg);
    if (beta >= 0.9) continue;
    ++premise;
    Vec step(d);
    for (std::size_t j = 0; j < d; ++j) step[j] = e[j] - 1e-4 * 0.5 * (g_max[j] + g_mean[j]);
    const auto moved = Embedding::normalized(step);
    ASSERT_LT(history_score(moved, h, ScoreMode::Combined), history_score(e, h, ScoreMode::Combined));
    ASSERT_LT(history_score(moved, h, ScoreMode::Max), history_score(e, h, ScoreMode::Max)) << "beta " << beta;
  }
  EXPECT_GT(premise, 200u);
}

TEST(Property, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(111);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = c % 2 ? 64 : 8;
    const Vec e = random_unit_vector(d, rng);
    const Vec v = random_unit_vector(d, rng);
    const auto fd = finite_difference_gradient([&](const Vec& x) { return dot(vnormalized(x), v); }, e);
    const auto an = sphere_gradient(e, v);
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) diff += (fd[i] - an[i]) * (fd[i] - an[i]);
    ASSERT_LE(std::sqrt(diff), 1e-4 * norm(an));
    ASSERT_NEAR(dot(an, e), 0.0, 1e-9);
  }
}

TEST(Property, BoundsMonotoneOnGrids) {
  for (std::size_t n = 2; n < 600; ++n) {
    ASSERT_GT(calibration_bound(n, 2.0, 0.05, 0.1), calibration_bound(n + 1, 2.0, 0.05, 0.1));
    ASSERT_GT(dkw_fpr_bound(n, 0.05), dkw_fpr_bound(n + 1, 0.05));
  }
  for (double e = 0.0; e < 1.0; e += 0.01) {
    ASSERT_LE(wasserstein_tpr_bound(e, 1.0), wasserstein_tpr_bound(e + 0.01, 1.0));
  }
}

TEST(Property, SirConservationAndFinalSize) {
  Rng rng = make_rng(112);
  for (int c = 0; c < kCases; ++c) {
    const double n = 5.0 + uniform_index(rng, 100);
    const double beta = uniform01(rng), gamma = 0.01 + uniform01(rng);
    for (const auto& s : sir_difference_run(beta, gamma, n, 1.0, 50)) {
      ASSERT_NEAR(s.s + s.i + s.r, n, 1e-9 * n);
      ASSERT_GE(s.s, -1e-12);
    }
    const double z = final_size_solve(beta + 0.01, gamma);
    if (z > 0.0) ASSERT_NEAR(1.0 - z, std::exp(-((beta + 0.01) / gamma) * z), 1e-9);
  }
}

TEST(Property, ConfigCanonicalRoundTrip) {
  Rng rng = make_rng(113);
  const std::vector<std::pair<std::string, std::vector<std::string>>> choices = {
      {"kappa", {"0", "0.5", "1", "2.25", "3"}},
      {"family", {"agentpoison", "minja", "injecmem"}},
      {"score_mode", {"max", "combined"}},
      {"corpus_size", {"100", "200", "1000"}},
      {"seeds", {"1", "1,2,3", "7,9"}},
      {"synonym_jitter", {"0", "0.004"}},
      {"sir_defense", {"none", "memsad", "composite"}},
  };
  for (int c = 0; c < 100; ++c) {
    std::vector<std::string> overrides;
    for (const auto& [k, vs] : choices) {
      if (bernoulli(rng, 0.6)) overrides.push_back(k + "=" + pick(vs, rng));
    }
    const auto a = parse_config_text("", overrides);
    std::string text;
    for (const auto& [k, v] : config_values(a)) text += k + " = " + v + "\n";
    const auto b = parse_config_text(text);
    ASSERT_EQ(canonical_config(a), canonical_config(b));
    ASSERT_EQ(config_hash(a), config_hash(b));
  }
}
