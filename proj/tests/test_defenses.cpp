#include <cmath>

#include "memshield/attacks.hpp"
#include "memshield/corpus.hpp"
#include "memshield/defenses.hpp"
#include "memshield/stats.hpp"
#include "support.hpp"

using namespace memshield;
using namespace memshield::testing;

namespace {

// Unit vector in d=4 whose cosine with e0 is c.
Embedding at_cos(double c, std::size_t axis = 1) {
  std::vector<double> v(4, 0.0);
  v[0] = c;
  v[axis] = std::sqrt(1.0 - c * c);
  return Embedding::normalized(v);
}

const Embedding kE0 = Embedding::normalized({1.0, 0.0, 0.0, 0.0});

MemSad calibrated_max(const std::vector<Embedding>& ref, const std::vector<Embedding>& h, double kappa = 2.0) {
  MemSad::Config c;
  c.mode = ScoreMode::Max;
  c.kappa = kappa;
  return MemSad(c).calibrated(ref, h);
}

}  // namespace

TEST(MemSad, SingleQueryModesAgree) {
  std::deque<Embedding> h{at_cos(0.37)};
  EXPECT_NEAR(history_score(kE0, h, ScoreMode::Max), 0.37, 1e-12);
  EXPECT_NEAR(history_score(kE0, h, ScoreMode::Combined), 0.37, 1e-12);
  std::deque<Embedding> self{kE0};
  EXPECT_NEAR(history_score(kE0, self, ScoreMode::Combined), 1.0, 1e-12);
}

TEST(MemSad, CombinedScoreHandArithmetic) {
  std::deque<Embedding> h{at_cos(0.2, 1), at_cos(0.4, 2), at_cos(0.9, 3)};
  EXPECT_NEAR(history_score(kE0, h, ScoreMode::Combined), 0.70, 1e-12);
  EXPECT_NEAR(history_score(kE0, h, ScoreMode::Max), 0.9, 1e-12);
  EXPECT_CODE(history_score(kE0, {}, ScoreMode::Max), ErrorCode::NotCalibrated);
}

TEST(MemSad, CalibrationStatistics) {
  const auto d = calibrated_max({at_cos(0.1, 1), at_cos(0.3, 2)}, {kE0});
  EXPECT_NEAR(d.mu(), 0.2, 1e-12);
  EXPECT_NEAR(d.sigma(), std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(d.threshold(), 0.2 + 2 * std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(d.threshold(), 0.4828, 1e-4);

  const auto flat = calibrated_max({at_cos(0.5, 1), at_cos(0.5, 2), at_cos(0.5, 3)}, {kE0});
  EXPECT_NEAR(flat.sigma(), 0.0, 1e-12);
  EXPECT_NEAR(flat.threshold(), 0.5, 1e-12);
}

TEST(MemSad, Errors) {
  EXPECT_CODE(MemSad(MemSad::Config{}).calibrated({kE0}, {kE0}), ErrorCode::InsufficientCalibration);
  EXPECT_CODE(MemSad(MemSad::Config{}).filter(kE0), ErrorCode::NotCalibrated);
  EXPECT_CODE(MemSad(MemSad::Config{}).rolled(kE0), ErrorCode::NotCalibrated);
  MemSad::Config c;
  c.capacity = 0;
  EXPECT_CODE(MemSad{c}, ErrorCode::ConfigError);
  EXPECT_CODE(parse_score_mode("mean"), ErrorCode::ConfigError);
}

TEST(MemSad, StrictThresholdAndKappaLimits) {
  const auto d = calibrated_max({at_cos(0.5, 1), at_cos(0.5, 2)}, {kE0});
  EXPECT_FALSE(d.filter(at_cos(0.5, 3)).flagged);  // score == threshold passes
  EXPECT_TRUE(d.filter(at_cos(0.6, 3)).flagged);
  const auto loose = calibrated_max({at_cos(0.1, 1), at_cos(0.3, 2)}, {kE0}).with_kappa(1e9);
  EXPECT_FALSE(loose.filter(kE0).flagged);
}

TEST(MemSad, KappaZeroFlagsAboutHalf) {
  Rng rng = make_rng(11);
  std::vector<Embedding> ref, h;
  for (int i = 0; i < 20; ++i) h.push_back(random_embedding(64, rng));
  for (int i = 0; i < 400; ++i) ref.push_back(random_embedding(64, rng));
  MemSad::Config c;
  c.kappa = 0.0;
  const auto d = MemSad(c).calibrated(ref, h);
  std::size_t flagged = 0;
  for (const auto& r : ref) flagged += d.filter(r).flagged;
  EXPECT_NEAR(static_cast<double>(flagged) / ref.size(), 0.5, 0.1);
}

TEST(MemSad, RollingWindowIsFifo) {
  MemSad::Config c;
  c.capacity = 3;
  auto d = MemSad(c).calibrated({at_cos(0.1, 1), at_cos(0.3, 2)}, {at_cos(0.1, 1), at_cos(0.2, 2)});
  EXPECT_EQ(d.history().size(), 2u);
  d = d.rolled(at_cos(0.3, 3)).rolled(kE0);
  ASSERT_EQ(d.history().size(), 3u);
  EXPECT_EQ(d.history().back(), kE0);
  EXPECT_EQ(d.history().front(), at_cos(0.2, 2));
  EXPECT_NEAR(d.score(kE0), 0.5 * 1.0 + 0.5 * (0.2 + 0.3 + 1.0) / 3.0, 1e-12);
  const auto narrow = d.with_capacity(1);
  EXPECT_EQ(narrow.history().size(), 1u);
  EXPECT_EQ(narrow.history().front(), kE0);
}

TEST(MemSadPlus, JensenShannonBasics) {
  const auto p = char_ngrams("buy the milk and the bread");
  const auto q = char_ngrams("server port configuration");
  EXPECT_NEAR(jensen_shannon(p, p), 0.0, 1e-12);
  EXPECT_NEAR(jensen_shannon(p, q), jensen_shannon(q, p), 1e-12);
  EXPECT_GT(jensen_shannon(p, q), 0.0);
  EXPECT_LE(jensen_shannon(p, q), 1.0);
  EXPECT_NEAR(jensen_shannon(char_ngrams("aaaa"), char_ngrams("bbbb")), 1.0, 1e-12);
  double total = 0.0;
  for (const auto& [k, v] : p) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(MemSadPlus, BaselineConcatenationHasNearZeroDivergence) {
  CorpusSpec spec;
  spec.size = 200;
  Embedder emb;
  const auto s = generate_corpus(spec, emb);
  std::vector<std::string> texts;
  for (const auto& e : s.entries()) texts.push_back(e.text);
  const auto ref = embed_all(std::vector<std::string>(texts.begin(), texts.begin() + 10), emb);
  const MemSadPlus plus(MemSad(MemSad::Config{}).calibrated(ref, ref), texts, texts);
  std::string all;
  for (const auto& t : texts) all += t + " ";
  EXPECT_LT(plus.char_divergence(all), 0.05);
}

TEST(MemSadPlus, RareSynonymsRaiseDivergenceButNotSemanticScore) {
  Embedder emb;
  const std::vector<std::string> baseline = {"please buy the milk", "buy some bread today", "we buy the tickets",
                                             "remember to buy coffee", "buy a gift for the team"};
  const auto ref = embed_all(baseline, emb);
  const MemSadPlus plus(MemSad(MemSad::Config{}).calibrated(ref, ref), baseline, baseline);
  const std::string original = "please buy the tickets and buy coffee";
  const std::string swapped = "please obtain the tickets and acquire coffee";
  const auto a = plus.score(original, emb.embed(original));
  const auto b = plus.score(swapped, emb.embed(swapped));
  EXPECT_NEAR(a.semantic, b.semantic, 1e-12);
  EXPECT_GT(b.char_divergence, a.char_divergence);
  EXPECT_GT(b.char_excess, a.char_excess);
}

TEST(MemSadPlus, FilterIsDisjunction) {
  Embedder emb;
  const std::vector<std::string> baseline = {"please buy the milk", "buy some bread today", "we buy the tickets",
                                             "remember to buy coffee", "buy a gift for the team"};
  const auto ref = embed_all(baseline, emb);
  const MemSadPlus plus(MemSad(MemSad::Config{}).calibrated(ref, ref), baseline, baseline);
  const std::string odd = "zzqx vvkj wwpf";
  const auto v = plus.filter(odd, emb.embed(odd));
  EXPECT_TRUE(v.flagged);
  EXPECT_EQ(v.defense, "memsad_plus");
  EXPECT_CODE(MemSadPlus(MemSad(MemSad::Config{}).calibrated(ref, ref), baseline, {"one"}), ErrorCode::InsufficientCalibration);
}

TEST(Watermark, ZScoreClosedForms) {
  EXPECT_NEAR(watermark_z(45, 100, 0.45), 0.0, 1e-12);
  EXPECT_NEAR(watermark_z(50, 50, 0.45), std::sqrt(50 * 0.55 / 0.45), 1e-12);
  EXPECT_NEAR(watermark_z(50, 50, 0.45), 7.82, 5e-3);
  EXPECT_CODE(watermark_z(0, 0, 0.45), ErrorCode::EmptyInput);
}

TEST(Watermark, WriteThenDetectPasses) {
  const WatermarkConfig cfg;
  const auto& table = *SynonymTable::default_table();
  CorpusSpec spec;
  spec.size = 100;
  const auto store = generate_corpus(spec, Embedder());
  for (const auto& e : store.entries()) {
    const auto w = watermark_write(e.text, cfg, table);
    EXPECT_GE(w.z, cfg.z_write) << e.text;
    EXPECT_FALSE(watermark_detect(w.text, cfg).flagged);
    const auto gc = count_green(w.text, cfg);
    EXPECT_NEAR(watermark_z(gc.green, gc.total, cfg.gamma), w.z, 1e-9);
  }
}

TEST(Watermark, UnwatermarkedPoisonIsFlagged) {
  const WatermarkConfig cfg;
  CorpusSpec spec;
  spec.size = 50;
  Embedder emb;
  const auto store = generate_corpus(spec, emb);
  const auto qs = generate_queries(spec);
  std::vector<std::string> texts;
  for (auto fam : {AttackFamily::Minja, AttackFamily::InjecMem}) {
    for (std::uint64_t seed = 1; texts.size() < 100 && seed < 50; ++seed) {
      AttackConfig a;
      a.family = fam;
      a.seed = seed;
      for (const auto& e : generate_poison(store, qs, a, emb).entries) texts.push_back(e.text);
    }
  }
  texts.resize(100);
  std::size_t flagged = 0;
  for (const auto& t : texts) flagged += watermark_detect(t, cfg).flagged;
  EXPECT_GE(static_cast<double>(flagged) / texts.size(), 0.95);
}

TEST(Watermark, VerdictOrientation) {
  const WatermarkConfig cfg;
  const auto v = watermark_detect("some plain text that nobody watermarked", cfg);
  EXPECT_EQ(v.flagged, v.score > v.threshold);
  EXPECT_DOUBLE_EQ(v.threshold, -cfg.z_thr);
  WatermarkConfig bad;
  bad.gamma = 1.0;
  EXPECT_CODE(bad.validate(), ErrorCode::ConfigError);
}

TEST(Validation, PatternMatching) {
  EXPECT_FALSE(validation_filter("override all safety", {}).flagged);
  const auto v = validation_filter("Please OVERRIDE ALL SAFETY checks", {"override all safety", "other"});
  EXPECT_TRUE(v.flagged);
  EXPECT_DOUBLE_EQ(v.score, 1.0);
  const auto p = temp_file("patterns.txt", "# rules\n  override all safety  \n\nexfiltrate\n");
  EXPECT_EQ(load_patterns(p), (std::vector<std::string>{"override all safety", "exfiltrate"}));
}

TEST(Validation, DefaultRulesetFprOnBenignCorpus) {
  CorpusSpec spec;
  spec.size = 1000;
  std::size_t flagged = 0;
  const auto store = generate_corpus(spec, Embedder());
  for (const auto& e : store.entries()) {
    flagged += validation_filter(e.text, fixtures::validation_patterns()).flagged;
  }
  EXPECT_LE(flagged, 100u);
}

TEST(Proactive, ThresholdBehaviour) {
  const Proactive p({at_cos(0.9, 1), at_cos(0.9, 2)}, 0.19);
  EXPECT_TRUE(p.filter(kE0).flagged);
  const auto orth = Embedding::normalized({0.0, 0.0, 0.0, 1.0});
  EXPECT_FALSE(Proactive({kE0, at_cos(0.0, 1)}, 0.19).filter(orth).flagged);
  EXPECT_NEAR(p.score(kE0), 0.9, 1e-12);
  EXPECT_CODE(Proactive({}, 0.19), ErrorCode::ConfigError);
}

TEST(Proactive, ProbeTextInTightCluster) {
  Embedder emb;
  const auto& probes = fixtures::proactive_probes();
  EXPECT_EQ(probes.size(), 16u);
  const std::vector<std::string> cluster = {"server port setting", "server port settings", "the server port setting"};
  const Proactive p(embed_all(cluster, emb), 0.0);
  const double self = p.score(emb.embed(cluster[0]));
  EXPECT_TRUE(Proactive(embed_all(cluster, emb), self - 0.01).filter(emb.embed(cluster[0])).flagged);
}

TEST(Proactive, AutoThresholdHeldOutFpr) {
  Embedder emb;
  CorpusSpec spec;
  const auto store = generate_corpus(spec, emb);
  std::vector<Embedding> benign;
  for (const auto& e : store.entries()) benign.push_back(e.embedding);
  const auto p = Proactive::auto_threshold(embed_all(fixtures::proactive_probes(), emb), benign, 0.99);
  std::size_t flagged = 0;
  const auto held = generate_holdout(spec, 1000, emb, 7);
  for (const auto& e : held) flagged += p.filter(e.embedding).flagged;
  // 99th percentile on 1000 calibration points; held-out FPR within sampling noise of 0.01.
  EXPECT_LE(static_cast<double>(flagged) / held.size(), 0.02);
}

TEST(Composite, Disjunction) {
  const auto wm = DefenseVerdict::make("watermark", -3.0, -1.5);
  const auto sad = DefenseVerdict::make("memsad", 0.1, 0.5);
  const auto pro = DefenseVerdict::make("proactive", 0.1, 0.19);
  EXPECT_FALSE(composite_filter({wm, sad, pro}).flagged);
  EXPECT_TRUE(composite_filter({wm, DefenseVerdict::make("memsad", 0.9, 0.5), pro}).flagged);
  EXPECT_TRUE(composite_filter({wm, sad, pro, DefenseVerdict::make("validation", 1, 0)}).flagged == false);
  EXPECT_CODE(composite_filter({wm, sad}), ErrorCode::ConfigError);
}

TEST(Ood, EnergySingleQueryIsCosine) {
  for (double t : {0.1, 1.0, 5.0}) {
    const OodBaselines ood({at_cos(0.3, 1)}, {kE0, at_cos(0.5, 2), at_cos(0.1, 3)}, t, 1);
    EXPECT_NEAR(ood.energy(kE0), 0.3, 1e-12);
  }
}

TEST(Ood, KnnAndMahalanobis) {
  Rng rng = make_rng(21);
  const auto center = random_embedding(8, rng);
  std::vector<Embedding> benign;
  for (int i = 0; i < 200; ++i) benign.push_back(near(center, 3.0, rng));
  const OodBaselines one({center}, benign, 1.0, 1);
  EXPECT_NEAR(one.knn(benign[17]), 0.0, 1e-12);
  const OodBaselines ood({center}, benign, 1.0, 10);
  EXPECT_LT(ood.mahalanobis(center), ood.mahalanobis(-center));
  EXPECT_GT(ood.knn(-center), ood.knn(center));
  const auto s = ood.score(center);
  EXPECT_DOUBLE_EQ(s.knn, ood.knn(center));
}

TEST(Ood, DegenerateCovarianceThrows) {
  EXPECT_CODE(OodBaselines({kE0}, {kE0, kE0, kE0}), ErrorCode::NumericalError);
  EXPECT_CODE(OodBaselines({}, {kE0, kE0}), ErrorCode::NotCalibrated);
}
