#include "memshield/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "memshield/error.hpp"
#include "memshield/fixtures.hpp"
#include "memshield/stats.hpp"

namespace memshield {

std::string_view to_string(QueryProtocol p) { return p == QueryProtocol::Plain ? "plain" : "triggered"; }

QueryProtocol parse_query_protocol(std::string_view s) {
  if (s == "plain") return QueryProtocol::Plain;
  if (s == "triggered") return QueryProtocol::Triggered;
  throw Error(ErrorCode::ConfigError, "unknown query protocol '" + std::string(s) + "' (plain, triggered)");
}

std::string_view to_string(CalibrationProtocol p) {
  switch (p) {
    case CalibrationProtocol::Auto: return "auto";
    case CalibrationProtocol::Plain: return "plain";
    case CalibrationProtocol::Triggered: return "triggered";
  }
  return "?";
}

CalibrationProtocol parse_calibration_protocol(std::string_view s) {
  if (s == "auto") return CalibrationProtocol::Auto;
  if (s == "plain") return CalibrationProtocol::Plain;
  if (s == "triggered") return CalibrationProtocol::Triggered;
  throw Error(ErrorCode::ConfigError, "unknown calibration protocol '" + std::string(s) + "' (auto, plain, triggered)");
}

std::string_view to_string(DefenseKind d) {
  switch (d) {
    case DefenseKind::Watermark: return "watermark";
    case DefenseKind::Validation: return "validation";
    case DefenseKind::Proactive: return "proactive";
    case DefenseKind::MemSad: return "memsad";
    case DefenseKind::MemSadPlus: return "memsad_plus";
    case DefenseKind::Composite: return "composite";
  }
  return "?";
}

DefenseKind parse_defense_kind(std::string_view s) {
  for (auto d : {DefenseKind::Watermark, DefenseKind::Validation, DefenseKind::Proactive, DefenseKind::MemSad,
                 DefenseKind::MemSadPlus, DefenseKind::Composite}) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorCode::ConfigError, "unknown defense '" + std::string(s) +
                                          "' (watermark, validation, proactive, memsad, memsad_plus, composite)");
}

void ScenarioConfig::validate() const {
  corpus.validate();
  attack.validate();
  WatermarkConfig(defense.watermark).validate();
  if (defense.history == 0) throw Error(ErrorCode::ConfigError, "history must be >= 1");
  if (defense.calibration_n < 2) throw Error(ErrorCode::ConfigError, "calibration_n must be >= 2");
  if (defense.calibration_n > corpus.size) throw Error(ErrorCode::ConfigError, "calibration_n exceeds corpus size");
  if (!(defense.kappa >= 0.0)) throw Error(ErrorCode::ConfigError, "kappa must be >= 0");
  if (seeds.empty()) throw Error(ErrorCode::ConfigError, "need at least one seed");
  if (holdout == 0) throw Error(ErrorCode::ConfigError, "holdout must be >= 1");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::ConfigError, "lambda must be >= 0");
  if (roster.empty()) throw Error(ErrorCode::ConfigError, "defense roster is empty");
  if (protocol == QueryProtocol::Triggered && attack.family != AttackFamily::AgentPoison) {
    throw Error(ErrorCode::ConfigError, "triggered protocol needs an attack that produces a trigger");
  }
  if (calibration == CalibrationProtocol::Triggered && attack.family != AttackFamily::AgentPoison) {
    throw Error(ErrorCode::ConfigError, "triggered calibration needs an attack that produces a trigger");
  }
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::map<std::string, std::string> ScenarioConfig::describe() const {
  std::map<std::string, std::string> m;
  m["corpus_size"] = std::to_string(corpus.size);
  m["victim_queries"] = std::to_string(corpus.victim_queries);
  m["benign_queries"] = std::to_string(corpus.benign_queries);
  m["k"] = std::to_string(corpus.k);
  m["family"] = std::string(to_string(attack.family));
  m["n_base"] = std::to_string(attack.effective_n_base());
  m["trigger_length"] = std::to_string(attack.trigger_length);
  m["p0"] = num(attack.p0);
  m["minja_lambda"] = num(attack.lambda);
  m["dimension"] = std::to_string(embedder.dimension);
  m["synonym_jitter"] = num(embedder.synonym_jitter);
  m["canonicalize"] = embedder.canonicalize_synonyms ? "true" : "false";
  m["kappa"] = num(defense.kappa);
  m["history"] = std::to_string(defense.history);
  m["calibration_n"] = std::to_string(defense.calibration_n);
  m["score_mode"] = std::string(to_string(defense.mode));
  m["protocol"] = std::string(to_string(protocol));
  m["calibration"] = std::string(to_string(calibration));
  m["holdout"] = std::to_string(holdout);
  m["lambda"] = num(lambda);
  m["proactive_tau"] = defense.proactive_tau ? num(*defense.proactive_tau) : "auto";
  m["proactive_quantile"] = num(defense.proactive_quantile);
  std::string roster_s;
  for (auto d : roster) roster_s += (roster_s.empty() ? "" : "+") + std::string(to_string(d));
  m["roster"] = roster_s;
  return m;
}

namespace {

std::vector<Embedding> embed_texts(const std::vector<std::string>& texts, const Embedder& e) {
  return embed_all(texts, e);
}

// Write-path watermarking: the text is rewritten and re-embedded.
void watermark_entry(MemoryEntry& m, const WatermarkConfig& cfg, const Embedder& embedder) {
  auto wm = watermark_write(m.text, cfg, embedder.table());
  m.watermark_z = wm.z;
  if (wm.text != m.text) {
    m.text = std::move(wm.text);
    m.embedding = embedder.embed(m.text);
  }
}

}  // namespace

TrialSetup build_trial(const ScenarioConfig& sc, std::uint64_t seed) {
  sc.validate();
  TrialSetup t;
  t.seed = seed;
  t.embedder = Embedder(sc.embedder);
  CorpusSpec spec = sc.corpus;
  spec.seed = seed;

  MemoryStore raw = generate_corpus(spec, t.embedder);
  t.store = MemoryStore(spec.k);
  for (auto m : raw.entries()) {
    watermark_entry(m, sc.defense.watermark, t.embedder);
    t.store.insert(std::move(m));
  }

  t.queries = generate_queries(spec);
  AttackConfig acfg = sc.attack;
  acfg.seed = seed;
  t.poison = generate_poison(t.store, t.queries, acfg, t.embedder);
  if (t.poison.trigger) t.queries = generate_queries(spec, t.poison.trigger);

  const bool eval_triggered = sc.protocol == QueryProtocol::Triggered;
  t.victims = embed_texts(t.queries.victims(eval_triggered), t.embedder);
  t.triggered_calibration = sc.calibration == CalibrationProtocol::Triggered ||
                            (sc.calibration == CalibrationProtocol::Auto && t.poison.trigger.has_value());
  const auto& hist_texts = t.queries.victims(t.triggered_calibration);
  std::vector<std::string> hist(hist_texts.begin(),
                                hist_texts.begin() + static_cast<std::ptrdiff_t>(std::min(sc.defense.history,
                                                                                          hist_texts.size())));
  t.calibration_history = embed_texts(hist, t.embedder);
  t.benign_queries = embed_texts(t.queries.benign, t.embedder);

  std::vector<std::size_t> idx(t.store.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = make_rng(seed, 0xCA11B);
  shuffle(idx, rng);
  for (std::size_t i = 0; i < sc.defense.calibration_n; ++i) t.reference.push_back(t.store.at(idx[i]));

  t.control = generate_holdout(spec, sc.holdout, t.embedder, seed);
  for (auto& m : t.control) watermark_entry(m, sc.defense.watermark, t.embedder);
  return t;
}

DefenseSuite fit_defenses(const ScenarioConfig& sc, const TrialSetup& t) {
  DefenseSuite s;
  s.patterns = fixtures::validation_patterns();
  s.watermark = sc.defense.watermark;

  std::vector<Embedding> ref;
  for (const auto& m : t.reference) ref.push_back(m.embedding);
  s.memsad = MemSad({sc.defense.history, sc.defense.kappa, sc.defense.mode}).calibrated(ref, t.calibration_history);

  std::vector<Embedding> store_emb;
  std::vector<std::string> first_half, second_half;
  for (std::size_t i = 0; i < t.store.size(); ++i) {
    store_emb.push_back(t.store.at(i).embedding);
    (i % 2 == 0 ? first_half : second_half).push_back(t.store.at(i).text);
  }
  auto probes = embed_all(fixtures::proactive_probes(), t.embedder);
  if (sc.defense.proactive_tau) {
    s.proactive.emplace(std::move(probes), *sc.defense.proactive_tau);
  } else {
    s.proactive.emplace(Proactive::auto_threshold(std::move(probes), store_emb, sc.defense.proactive_quantile));
  }
  s.memsad_plus.emplace(s.memsad, first_half, second_half, sc.defense.char_quantile);
  return s;
}

std::map<std::string, DefenseVerdict> DefenseSuite::judge(const MemoryEntry& e,
                                                          const std::vector<DefenseKind>& roster) const {
  std::map<std::string, DefenseVerdict> out;
  std::optional<DefenseVerdict> wm, sad, pro;
  const auto need = [&](DefenseKind k) {
    return std::find(roster.begin(), roster.end(), k) != roster.end() ||
           std::find(roster.begin(), roster.end(), DefenseKind::Composite) != roster.end();
  };
  if (need(DefenseKind::Watermark)) wm = watermark_detect(e.text, watermark);
  if (need(DefenseKind::MemSad)) sad = memsad.filter(e.embedding);
  if (need(DefenseKind::Proactive)) pro = proactive->filter(e.embedding);
  for (auto d : roster) {
    switch (d) {
      case DefenseKind::Watermark: out["watermark"] = *wm; break;
      case DefenseKind::Validation: out["validation"] = validation_filter(e.text, patterns); break;
      case DefenseKind::Proactive: out["proactive"] = *pro; break;
      case DefenseKind::MemSad: out["memsad"] = *sad; break;
      case DefenseKind::MemSadPlus: out["memsad_plus"] = memsad_plus->filter(e.text, e.embedding); break;
      case DefenseKind::Composite: out["composite"] = composite_filter({*wm, *sad, *pro}); break;
    }
  }
  return out;
}

TrialReport evaluate_defenses(const ScenarioConfig& sc, const TrialSetup& t, const DefenseSuite& suite,
                              const std::vector<MemoryEntry>& poison_entries) {
  TrialReport r;
  r.seed = t.seed;
  r.regime = sc.describe();
  r.regime["seed"] = std::to_string(t.seed);
  r.regime["calibration_used"] = t.triggered_calibration ? "triggered" : "plain";
  r.regime["poison_entries"] = std::to_string(poison_entries.size());
  const std::size_t k = sc.corpus.k;
  r.asr_r = asr_r(t.store, poison_entries, t.victims, k);
  r.asr_a = t.poison.modelled_asr_a;
  r.finalize();

  std::vector<std::map<std::string, DefenseVerdict>> pv, cv;
  for (const auto& p : poison_entries) pv.push_back(suite.judge(p, sc.roster));
  for (const auto& c : t.control) cv.push_back(suite.judge(c, sc.roster));

  MemoryStore before = t.store;
  for (const auto& c : t.control) before.insert(c);

  for (auto d : sc.roster) {
    const std::string name(to_string(d));
    DefenseMetrics m;
    std::vector<double> scores;
    std::vector<bool> labels, flags;
    std::vector<MemoryEntry> kept;
    for (std::size_t i = 0; i < poison_entries.size(); ++i) {
      const auto& v = pv[i].at(name);
      scores.push_back(v.score);
      labels.push_back(true);
      flags.push_back(v.flagged);
      if (v.flagged) {
        ++m.poison_flagged;
      } else {
        kept.push_back(poison_entries[i]);
      }
    }
    m.poison_total = poison_entries.size();
    MemoryStore after = t.store;
    for (std::size_t i = 0; i < t.control.size(); ++i) {
      const auto& v = cv[i].at(name);
      scores.push_back(v.score);
      labels.push_back(false);
      flags.push_back(v.flagged);
      if (v.flagged) {
        ++m.benign_flagged;
      } else {
        after.insert(t.control[i]);
      }
    }
    m.benign_total = t.control.size();
    m.fpr = static_cast<double>(m.benign_flagged) / static_cast<double>(m.benign_total);
    if (m.poison_total > 0) {
      m.tpr = static_cast<double>(m.poison_flagged) / static_cast<double>(m.poison_total);
      m.auroc = auroc(scores, labels);
    }
    m.post_filter_asr_r = asr_r(t.store, kept, t.victims, k);
    m.benign_accuracy = benign_accuracy(before, after, t.benign_queries, k);
    r.defenses[name] = m;
  }
  return r;
}

TrialReport run_trial(const ScenarioConfig& sc, std::uint64_t seed) {
  const auto t = build_trial(sc, seed);
  const auto suite = fit_defenses(sc, t);
  return evaluate_defenses(sc, t, suite, t.poison.entries);
}

std::vector<ScenarioConfig> matrix_scenarios(const ScenarioConfig& base) {
  std::vector<ScenarioConfig> out;
  for (auto f : {AttackFamily::AgentPoison, AttackFamily::Minja, AttackFamily::InjecMem}) {
    ScenarioConfig s = base;
    s.attack.family = f;
    if (f != AttackFamily::AgentPoison) {
      s.protocol = QueryProtocol::Plain;
      if (s.calibration == CalibrationProtocol::Triggered) s.calibration = CalibrationProtocol::Auto;
    }
    out.push_back(s);
  }
  return out;
}

namespace {

Interval ci_of(const std::vector<double>& v, std::uint64_t seed) {
  if (v.size() < 2) return {v.front(), v.front()};
  return bootstrap_ci(v, 1000, 0.95, seed);
}

}  // namespace

MatrixReport run_matrix(const std::vector<ScenarioConfig>& scenarios) {
  if (scenarios.empty()) throw Error(ErrorCode::ConfigError, "no scenarios");
  MatrixReport rep;
  for (const auto& sc : scenarios) {
    std::vector<std::uint64_t> seeds = sc.seeds;
    std::sort(seeds.begin(), seeds.end());
    for (auto seed : seeds) {
      try {
        rep.trials.push_back(run_trial(sc, seed));
      } catch (const Error& e) {
        throw Error(e.code(), "trial " + std::string(to_string(sc.attack.family)) + "/seed " + std::to_string(seed) +
                                  ": " + e.what());
      }
    }
  }

  std::map<std::string, std::vector<const TrialReport*>> by_family;
  std::vector<std::string> family_order;
  for (const auto& t : rep.trials) {
    const auto& f = t.regime.at("family");
    if (!by_family.count(f)) family_order.push_back(f);
    by_family[f].push_back(&t);
  }
  std::vector<std::string> defense_order;
  for (auto d : scenarios.front().roster) defense_order.emplace_back(to_string(d));
  rep.comparisons = family_order.size() * defense_order.size();
  rep.alpha_corrected = bonferroni(rep.alpha, rep.comparisons);

  for (const auto& f : family_order) {
    const auto& ts = by_family[f];
    AttackSummary a;
    a.family = f;
    std::vector<double> asr;
    for (const auto* t : ts) asr.push_back(t->asr_r);
    a.asr_r = mean(asr);
    a.asr_a = ts.front()->asr_a;
    a.asr_t = a.asr_r * a.asr_a;
    a.asr_r_ci = ci_of(asr, 0xA5);
    rep.attacks.push_back(a);

    for (const auto& d : defense_order) {
      CellSummary c;
      c.family = f;
      c.defense = d;
      std::vector<double> tpr, fpr, au, post, acc;
      for (const auto* t : ts) {
        const auto& m = t->defenses.at(d);
        tpr.push_back(m.tpr);
        fpr.push_back(m.fpr);
        au.push_back(m.auroc);
        post.push_back(m.post_filter_asr_r);
        acc.push_back(m.benign_accuracy);
        c.poison_flagged += m.poison_flagged;
        c.poison_total += m.poison_total;
        c.benign_flagged += m.benign_flagged;
        c.benign_total += m.benign_total;
      }
      c.tpr = mean(tpr);
      c.fpr = mean(fpr);
      c.auroc = mean(au);
      c.post_filter_asr_r = mean(post);
      c.benign_accuracy = mean(acc);
      c.tpr_ci = ci_of(tpr, 0x7A);
      c.fpr_ci = ci_of(fpr, 0xF9);
      c.post_asr_ci = ci_of(post, 0x95);
      c.fpr_exact = clopper_pearson(c.benign_flagged, c.benign_total);
      if (c.poison_total > 0) {
        c.p_value = binomial_test_one_sided(c.poison_flagged, c.poison_total, 0.05);
        c.reject = c.p_value <= rep.alpha_corrected;
        const double observed = static_cast<double>(c.poison_flagged) / static_cast<double>(c.poison_total);
        c.power = binomial_power(c.poison_total, 0.05, observed, rep.alpha_corrected);
      }
      rep.cells.push_back(c);
    }
  }
  return rep;
}

double leader_argmin(const std::vector<KappaPoint>& points, double lambda) {
  if (points.empty()) throw Error(ErrorCode::ConfigError, "kappa grid is empty");
  const KappaPoint* best = nullptr;
  double best_obj = 0.0;
  for (const auto& p : points) {
    const double obj = p.post_filter_asr_r + lambda * p.fpr;
    if (!best || obj < best_obj - 1e-15 || (std::abs(obj - best_obj) <= 1e-15 && p.kappa < best->kappa)) {
      best = &p;
      best_obj = obj;
    }
  }
  return best->kappa;
}

KappaSweep kappa_sweep(const ScenarioConfig& sc, const std::vector<double>& grid, double lambda, DefenseKind leader) {
  if (grid.empty()) throw Error(ErrorCode::ConfigError, "kappa grid is empty");
  if (leader != DefenseKind::MemSad && leader != DefenseKind::Composite) {
    throw Error(ErrorCode::ConfigError, "leader must be memsad or composite");
  }
  KappaSweep out;
  out.lambda = lambda;
  out.leader = std::string(to_string(leader));
  std::vector<double> sorted(grid);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> asr_sum(sorted.size(), 0.0), fpr_sum(sorted.size(), 0.0);

  ScenarioConfig s = sc;
  s.roster = {leader};
  for (auto seed : sc.seeds) {
    const auto t = build_trial(s, seed);
    DefenseSuite suite = fit_defenses(s, t);
    const MemSad base = suite.memsad;
    for (std::size_t g = 0; g < sorted.size(); ++g) {
      suite.memsad = base.with_kappa(sorted[g]);
      // Follower best-responds to the committed detector.
      const auto adapted = synonym_adapt(t.poison, suite.memsad, t.embedder.table(), t.store, t.victims, s.corpus.k,
                                         t.embedder);
      const auto rep = evaluate_defenses(s, t, suite, adapted.adapted.entries);
      const auto& m = rep.defenses.at(out.leader);
      asr_sum[g] += m.post_filter_asr_r;
      fpr_sum[g] += m.fpr;
    }
  }
  const double n = static_cast<double>(sc.seeds.size());
  for (std::size_t g = 0; g < sorted.size(); ++g) {
    KappaPoint p{sorted[g], asr_sum[g] / n, fpr_sum[g] / n, 0.0};
    p.objective = p.post_filter_asr_r + lambda * p.fpr;
    out.points.push_back(p);
  }
  out.kappa_star = leader_argmin(out.points, lambda);
  return out;
}

std::string_view to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::Kappa: return "kappa";
    case AblationAxis::CorpusSize: return "corpus_size";
    case AblationAxis::NBase: return "n_base";
    case AblationAxis::CalibrationN: return "calibration_n";
    case AblationAxis::SynonymJitter: return "synonym_jitter";
  }
  return "?";
}

AblationAxis parse_ablation_axis(std::string_view s) {
  for (auto a : {AblationAxis::Kappa, AblationAxis::CorpusSize, AblationAxis::NBase, AblationAxis::CalibrationN,
                 AblationAxis::SynonymJitter}) {
    if (to_string(a) == s) return a;
  }
  throw Error(ErrorCode::ConfigError, "unknown ablation axis '" + std::string(s) +
                                          "' (kappa, corpus_size, n_base, calibration_n, synonym_jitter)");
}

ScenarioConfig with_axis_value(const ScenarioConfig& sc, AblationAxis axis, double value) {
  ScenarioConfig s = sc;
  const auto count = [&]() {
    if (!(value >= 0.0) || value != std::floor(value)) {
      throw Error(ErrorCode::ConfigError, std::string(to_string(axis)) + " needs a non-negative integer value");
    }
    return static_cast<std::size_t>(value);
  };
  switch (axis) {
    case AblationAxis::Kappa: s.defense.kappa = value; break;
    case AblationAxis::CorpusSize:
      s.corpus.size = count();
      s.defense.calibration_n = std::min(s.defense.calibration_n, s.corpus.size);
      break;
    case AblationAxis::NBase: s.attack.n_base = count(); break;
    case AblationAxis::CalibrationN: s.defense.calibration_n = count(); break;
    case AblationAxis::SynonymJitter: s.embedder.synonym_jitter = value; break;
  }
  s.validate();
  return s;
}

AblationTable ablation_sweep(const ScenarioConfig& sc, AblationAxis axis, const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::ConfigError, "ablation grid is empty");
  AblationTable table{axis, {}};
  std::vector<double> population;
  if (axis == AblationAxis::CalibrationN) {
    // Score population of the whole benign store under the first seed's history.
    const auto t = build_trial(sc, sc.seeds.front());
    const auto suite = fit_defenses(sc, t);
    for (const auto& m : t.store.entries()) population.push_back(suite.memsad.score(m.embedding));
  }
  for (double v : grid) {
    const ScenarioConfig s = with_axis_value(sc, axis, v);
    AblationPoint p{v, {}, std::nullopt};
    for (auto seed : s.seeds) p.trials.push_back(run_trial(s, seed));
    if (axis == AblationAxis::CalibrationN) {
      p.calibration = calibration_resampling(population, s.defense.calibration_n, s.defense.kappa, 0.05, 1000,
                                             sc.seeds.front());
    }
    table.points.push_back(std::move(p));
  }
  return table;
}

std::vector<AdaptiveRow> adaptive_run(const ScenarioConfig& sc) {
  std::vector<AdaptiveRow> rows;
  const double jitter = sc.embedder.synonym_jitter;
  for (auto seed : sc.seeds) {
    const auto t = build_trial(sc, seed);
    const auto suite = fit_defenses(sc, t);
    const auto rep = synonym_adapt(t.poison, suite.memsad, t.embedder.table(), t.store, t.victims, sc.corpus.k,
                                   t.embedder);
    AdaptiveRow row;
    row.seed = seed;
    row.family = std::string(to_string(sc.attack.family));
    row.entries = t.poison.entries.size();
    if (row.entries == 0) {
      rows.push_back(row);
      continue;
    }
    const double n = static_cast<double>(row.entries);
    std::size_t before = 0, after = 0, plus = 0, subs = 0;
    double score_delta = 0.0;
    for (std::size_t i = 0; i < row.entries; ++i) {
      before += rep.flagged_before[i];
      after += rep.flagged_after[i];
      subs += rep.substitutions[i];
      const double ds = rep.score_after[i] - rep.score_before[i];
      score_delta += ds;
      const double limit = static_cast<double>(rep.substitutions[i]) * jitter + 1e-9;
      const double shift = std::max(std::abs(ds), rep.max_cosim_shift[i]);
      row.max_abs_shift = std::max(row.max_abs_shift, shift);
      if (shift > limit) row.shift_bound_holds = false;
      const auto& e = rep.adapted.entries[i];
      plus += suite.memsad_plus->filter(e.text, e.embedding).flagged;
    }
    row.tpr_before = static_cast<double>(before) / n;
    row.tpr_after = static_cast<double>(after) / n;
    row.evasion = 1.0 - row.tpr_after;
    row.asr_r_before = asr_r(t.store, t.poison.entries, t.victims, sc.corpus.k);
    row.asr_r_after = asr_r(t.store, rep.adapted.entries, t.victims, sc.corpus.k);
    row.delta_asr_r = row.asr_r_after - row.asr_r_before;
    row.subs_per_entry = static_cast<double>(subs) / n;
    row.score_delta = score_delta / n;
    row.plus_tpr_after = static_cast<double>(plus) / n;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace memshield
