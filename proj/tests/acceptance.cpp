// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "memshield/fixtures.hpp"
#include "memshield/harness.hpp"
#include "memshield/metrics.hpp"
#include "memshield/propagation.hpp"
#include "memshield/reports.hpp"
#include "memshield/stats.hpp"
#include "memshield/theory.hpp"

using namespace memshield;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fail: " << what << "] ";
    }
  }
};

std::string fmt(double v, int p = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", p, v);
  return buf;
}

ScenarioConfig family_scenario(AttackFamily f) {
  ScenarioConfig sc;
  sc.attack.family = f;
  if (f == AttackFamily::AgentPoison) sc.protocol = QueryProtocol::Triggered;
  return sc;
}

const std::vector<AttackFamily> kFamilies = {AttackFamily::AgentPoison, AttackFamily::Minja, AttackFamily::InjecMem};

// Shared between criteria 6 and 11.
const MatrixReport& fixture_matrix() {
  static const MatrixReport m = [] {
    std::vector<ScenarioConfig> scenarios;
    for (auto f : kFamilies) scenarios.push_back(family_scenario(f));
    return run_matrix(scenarios);
  }();
  return m;
}

// Shared between criteria 4 and 5.
const std::map<AttackFamily, std::vector<AdaptiveRow>>& adaptive_rows() {
  static const auto rows = [] {
    std::map<AttackFamily, std::vector<AdaptiveRow>> out;
    for (auto f : {AttackFamily::Minja, AttackFamily::InjecMem}) {
      auto sc = family_scenario(f);
      sc.embedder.synonym_jitter = 0.004;
      out[f] = adaptive_run(sc);
    }
    return out;
  }();
  return rows;
}

double pair_oracle(const std::vector<double>& s, const std::vector<bool>& l) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (l[i] && !l[j]) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

void criterion1(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  double worst_rel = 0.0, worst_cos = 1.0;
  Rng rng = make_rng(1, 1);
  for (std::size_t d : {8, 64}) {
    for (int i = 0; i < 100; ++i) {
      const Vec e = random_unit_vector(d, rng);
      const Vec q = random_unit_vector(d, rng);
      const Vec an = sphere_gradient(e, q);
      const Vec fd = finite_difference_gradient([&](const Vec& x) { return dot(vnormalized(x), q); }, e);
      double diff = 0.0;
      for (std::size_t j = 0; j < d; ++j) diff += (an[j] - fd[j]) * (an[j] - fd[j]);
      worst_rel = std::max(worst_rel, std::sqrt(diff) / norm(an));
      for (auto g : {MonotoneMap::Affine, MonotoneMap::Exp, MonotoneMap::Logistic})
        worst_cos = std::min(worst_cos, coupling_check(e, q, g).cosine);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(worst_rel <= 1e-4, "gradient relative error");
  o.require(worst_cos >= 1.0 - 1e-6, "coupling cosine");
  o.require(secs < 5.0, "runtime");
  o.detail << "max rel err " << worst_rel << ", min cosine " << fmt(worst_cos, 9) << ", " << fmt(secs, 2) << " s";
}

void criterion2(Outcome& o) {
  std::size_t gap = 0, deterministic = 0, violations = 0, gap_unflagged = 0;
  const std::size_t d = 64, scenarios = 600;
  for (std::size_t s = 0; s < scenarios; ++s) {
    Rng rng = make_rng(1000 + s, 0);
    const Vec topic = random_unit_vector(d, rng);
    auto around = [&](double w) {
      Vec v = random_unit_vector(d, rng);
      for (std::size_t i = 0; i < d; ++i) v[i] += w * topic[i];
      return Embedding::normalized(v);
    };
    std::vector<Embedding> history, reference;
    for (int i = 0; i < 10; ++i) history.push_back(around(1.5));
    for (int i = 0; i < 100; ++i) reference.push_back(around(0.0));
    MemSad::Config cfg;
    cfg.capacity = 10;
    cfg.kappa = 2.0;
    cfg.mode = s % 2 ? ScoreMode::Combined : ScoreMode::Max;
    const auto det = MemSad(cfg).calibrated(reference, history);
    const double a = uniform01(rng);
    Vec c = random_unit_vector(d, rng);
    for (std::size_t i = 0; i < d; ++i) c[i] = (1 - a) * c[i] + a * 4 * history[0][i] + a * topic[i];
    const auto candidate = Embedding::normalized(c);
    const double eta = calibration_bound(reference.size(), 2.0, 0.05, det.sigma());
    const auto cert = certify(det, reference, history[0], candidate, eta);
    const bool flagged = det.filter(candidate).flagged;
    gap += cert.gap_holds;
    deterministic += cert.deterministic;
    violations += cert.deterministic && !flagged;
    gap_unflagged += cert.gap_holds && !flagged;
  }
  const bool instance = certified_radius_check(0.13, 2.0, 0.03, 0.02);
  o.require(violations == 0, "deterministic certificate not flagged");
  o.require(deterministic >= 50, "too few deterministic certificates");
  o.require(instance, "worked instance");
  o.detail << scenarios << " scenarios, gap holds " << gap << ", deterministic " << deterministic
           << ", violations " << violations << ", gap-only unflagged " << gap_unflagged
           << ", instance 0.13 > 0.08: " << (instance ? "certified" : "not certified");
}

void criterion3(Outcome& o) {
  for (auto f : {AttackFamily::Minja, AttackFamily::AgentPoison}) {
    const auto sc = family_scenario(f);
    const auto t = build_trial(sc, sc.seeds.front());
    const auto suite = fit_defenses(sc, t);
    std::vector<double> scores;
    for (const auto& m : t.store.entries()) scores.push_back(suite.memsad.score(m.embedding));
    o.detail << to_string(f) << ":";
    for (std::size_t n : {25, 50, 100, 200, 500}) {
      const auto c = calibration_resampling(scores, n, 2.0, 0.05, 1000, 7);
      o.require(c.coverage >= 0.95, std::string(to_string(f)) + std::string(" coverage N=") + std::to_string(n));
      o.require(c.ratio >= 1.2 && c.ratio <= 3.0, std::string(to_string(f)) + std::string(" ratio N=") + std::to_string(n));
      o.detail << " N=" << n << " cov " << fmt(c.coverage, 3) << " bound/median " << fmt(c.ratio, 2)
               << " bound/p95 " << fmt(c.bound / c.p95_observed, 2) << ";";
    }
    o.detail << " ";
  }
}

void criterion4(Outcome& o) {
  // Canonicalizing embedder: every synonym swap leaves embedding, score and rank untouched.
  {
    const auto sc = family_scenario(AttackFamily::Minja);
    const auto t = build_trial(sc, 1);
    const auto suite = fit_defenses(sc, t);
    const auto& table = t.embedder.table();
    std::size_t swaps = 0, moved = 0;
    for (const auto& p : t.poison.entries) {
      auto tokens = tokenize(p.text);
      for (auto& tok : tokens) {
        const auto alts = table.alternatives(tok);
        if (alts.empty()) continue;
        tok = alts.front();
        ++swaps;
      }
      const auto e = t.embedder.embed(join(tokens));
      const double ds = suite.memsad.score(e) - suite.memsad.score(p.embedding);
      bool rank_same = true;
      for (const auto& q : t.victims) rank_same &= t.store.rank_of(q, p.id, e) == t.store.rank_of(q, p.id, p.embedding);
      moved += !(e == p.embedding) || ds != 0.0 || !rank_same;
    }
    o.require(swaps > 0 && moved == 0, "canonical embedder moved under substitution");
    o.detail << "eps=0: " << swaps << " swaps, " << moved << " moved; ";
  }
  const std::size_t pairs = SynonymTable::default_table()->pair_count();
  o.require(pairs >= 60, "synonym pairs");
  o.detail << pairs << " pairs; eps=0.004:";
  for (const auto& [f, rows] : adaptive_rows()) {
    double evasion = 0.0, delta = 0.0;
    bool bound = true;
    for (const auto& r : rows) {
      evasion += r.evasion / rows.size();
      delta = std::max(delta, std::abs(r.delta_asr_r));
      bound &= r.shift_bound_holds;
    }
    o.require(evasion >= 0.8, std::string(to_string(f)) + std::string(" evasion"));
    o.require(delta == 0.0, std::string(to_string(f)) + std::string(" delta ASR-R"));
    o.require(bound, std::string(to_string(f)) + std::string(" shift bound"));
    o.detail << " " << to_string(f) << " evasion " << fmt(evasion, 2) << " max|dASR-R| " << delta
             << " bound " << (bound ? "holds" : "violated") << ";";
  }
}

void criterion5(Outcome& o) {
  bool strict = false;
  for (const auto& [f, rows] : adaptive_rows()) {
    double sad = 0.0, plus = 0.0;
    for (const auto& r : rows) {
      o.require(r.plus_tpr_after >= r.tpr_after, std::string(to_string(f)) + std::string(" seed ") + std::to_string(r.seed));
      sad += r.tpr_after / rows.size();
      plus += r.plus_tpr_after / rows.size();
    }
    strict |= plus > sad;
    o.detail << to_string(f) << " MemSAD " << fmt(sad, 2) << " -> MemSAD+ " << fmt(plus, 2) << "; ";
  }
  o.require(strict, "no strict improvement");
}

void criterion6(Outcome& o) {
  const auto& m = fixture_matrix();
  for (auto f : kFamilies) {
    double post = 0.0;
    for (const auto& t : m.trials)
      if (t.regime.at("family") == to_string(f)) post = std::max(post, t.defenses.at("composite").post_filter_asr_r);
    for (const auto& c : m.cells) {
      if (c.family != to_string(f) || c.defense != "composite") continue;
      o.require(post == 0.0, c.family + " post-filter ASR-R");
      o.require(c.fpr <= 0.01, c.family + " FPR");
      o.detail << c.family << " post-ASR-R " << fmt(post, 2) << " FPR " << fmt(c.fpr, 4) << "; ";
    }
  }
}

void criterion7(Outcome& o) {
  auto mean_asr = [](ScenarioConfig sc) {
    sc.roster = {DefenseKind::Validation};
    sc.holdout = 10;
    double s = 0.0;
    for (auto seed : sc.seeds) s += run_trial(sc, seed).asr_r;
    return s / sc.seeds.size();
  };
  std::map<std::string, std::vector<double>> untriggered;
  for (std::size_t m : {50, 100, 200, 500, 1000}) {
    ScenarioConfig sc;
    sc.corpus.size = m;
    sc.attack.family = AttackFamily::AgentPoison;
    const double plain = mean_asr(sc);
    sc.protocol = QueryProtocol::Triggered;
    const double trig = mean_asr(sc);
    o.require(trig >= 4.0 * plain, "triggered/plain at |M|=" + std::to_string(m));
    if (m <= 200) o.require(trig == 1.0, "triggered ASR-R at |M|=" + std::to_string(m));
    o.detail << "|M|=" << m << " AP " << fmt(plain, 2) << "/" << fmt(trig, 2);
    sc.protocol = QueryProtocol::Plain;
    untriggered["agentpoison"].push_back(plain);
    for (auto f : {AttackFamily::Minja, AttackFamily::InjecMem}) {
      sc.attack.family = f;
      const double a = mean_asr(sc);
      untriggered[std::string(to_string(f))].push_back(a);
      o.detail << " " << to_string(f) << " " << fmt(a, 2);
    }
    o.detail << "; ";
  }
  for (const auto& [name, series] : untriggered) {
    bool mono = series.front() > series.back();
    for (std::size_t i = 1; i < series.size(); ++i) mono &= series[i] <= series[i - 1];
    o.require(mono, name + " not decreasing in |M|");
  }
}

void criterion8(Outcome& o) {
  const auto cp = clopper_pearson(0, 1000);
  o.require(cp.lo == 0.0 && std::abs(cp.hi - 0.00368) <= 1e-5, "Clopper-Pearson(0, 1000)");
  const double dkw = dkw_fpr_bound(200, 0.05);
  o.require(std::abs(dkw - 0.0960) <= 1e-4, "DKW");
  const double snr = snr_from_auroc(0.914);
  o.require(std::abs(snr - 1.93) <= 0.01, "SNR");
  double worst = 0.0;
  for (auto f : kFamilies) {
    const auto sc = family_scenario(f);
    const auto t = build_trial(sc, 1);
    const auto suite = fit_defenses(sc, t);
    std::vector<double> s;
    std::vector<bool> l;
    for (const auto& p : t.poison.entries) {
      s.push_back(suite.memsad.score(p.embedding));
      l.push_back(true);
    }
    for (const auto& c : t.control) {
      s.push_back(suite.memsad.score(c.embedding));
      l.push_back(false);
    }
    worst = std::max(worst, std::abs(auroc(s, l) - pair_oracle(s, l)));
  }
  o.require(worst <= 1e-12, "AUROC vs pair oracle");
  Rng rng = make_rng(8, 8);
  std::size_t covered = 0;
  const std::size_t draws = 10000, n = 50;
  for (std::size_t i = 0; i < draws; ++i) {
    const double p = 0.01 + 0.98 * uniform01(rng);
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) k += bernoulli(rng, p);
    const auto ci = clopper_pearson(k, n);
    covered += ci.lo <= p && p <= ci.hi;
  }
  const double coverage = static_cast<double>(covered) / draws;
  o.require(coverage >= 0.94, "CP coverage");
  o.detail << "CP(0,1000) = [" << cp.lo << ", " << fmt(cp.hi, 5) << "], DKW " << fmt(dkw) << ", SNR "
           << fmt(snr, 3) << ", AUROC max dev " << worst << ", CP coverage " << fmt(coverage, 4);
}

void criterion9(Outcome& o) {
  struct Row {
    double asr;
    std::size_t s50, s90, s95;
    double expected;
  };
  for (const Row& r : {Row{1.0, 1, 1, 1, 1.0}, Row{0.14, 1, 4, 4, 1.9}, Row{0.07, 2, 7, 9, 3.3}}) {
    const auto c = compound_exposure(r.asr, 5);
    const bool ok = c.sessions[0] == r.s50 && c.sessions[1] == r.s90 && c.sessions[2] == r.s95 &&
                    c.expected_sessions && std::abs(*c.expected_sessions - r.expected) <= 0.05;
    o.require(ok, "row " + fmt(r.asr, 2));
    o.detail << fmt(r.asr, 2) << " -> " << c.sessions[0].value_or(0) << "/" << c.sessions[1].value_or(0) << "/"
             << c.sessions[2].value_or(0) << "/" << fmt(c.expected_sessions.value_or(-1), 2) << "; ";
  }
}

void criterion10(Outcome& o) {
  bool conserved = true;
  for (const auto& s : sir_difference_run(0.3, 0.1, 100.0, 1.0, 200))
    conserved &= std::abs(s.s + s.i + s.r - 100.0) <= 1e-9;
  o.require(conserved, "conservation");
  const double z = final_size_solve(2.0, 1.0);
  o.require(std::abs(z - 0.7968) <= 1e-3, "final size");
  o.detail << "final size " << fmt(z) << "; ";

  for (auto f : {AttackFamily::AgentPoison, AttackFamily::Minja}) {
    const auto sc = family_scenario(f);
    std::size_t none_sec = 0, sad_sec = 0, oracle_sec = 0;
    double none_spread = 0.0, oracle_spread = 0.0;
    for (auto seed : sc.seeds) {
      const auto t = build_trial(sc, seed);
      const auto suite = fit_defenses(sc, t);
      SirConfig cfg;
      cfg.seed = seed;
      const auto none = sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder);
      const auto sad = sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder,
                                     [&](const MemoryEntry& e) { return suite.memsad.filter(e.embedding).flagged; });
      const auto oracle = sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder,
                                        [](const MemoryEntry& e) { return e.provenance.poison; });
      none_sec += none.secondary_entries;
      sad_sec += sad.secondary_entries;
      oracle_sec += oracle.secondary_entries;
      none_spread = std::max(none_spread, none.final_spread());
      oracle_spread = std::max(oracle_spread, oracle.final_spread());
      if (f == AttackFamily::AgentPoison) o.require(none.final_spread() == 1.0, "no-defense spread");
    }
    const double reduction = none_sec ? 1.0 - static_cast<double>(sad_sec) / none_sec : 0.0;
    o.require(oracle_spread == 0.0 && oracle_sec == 0, std::string(to_string(f)) + std::string(" oracle quarantine"));
    o.require(reduction >= 0.15, std::string(to_string(f)) + std::string(" MemSAD reduction"));
    o.detail << to_string(f) << " none spread " << fmt(none_spread, 2) << " secondary " << none_sec << ", MemSAD "
             << sad_sec << " (-" << fmt(100 * reduction, 1) << "%), oracle " << fmt(oracle_spread, 2) << "/"
             << oracle_sec << "; ";
  }
}

void criterion11(Outcome& o) {
  const double p0 = binomial_test_one_sided(0, 20, 0.05);
  const double p20 = binomial_test_one_sided(20, 20, 0.05);
  const double a = bonferroni(0.05, 15);
  o.require(p0 == 1.0, "p(k=0)");
  o.require(p20 < 1e-26, "p(20/20)");
  o.require(format_fixed(a, 3) == "0.003", "Bonferroni display");
  const double power = binomial_power(20, 0.05, 1.0, a);
  o.require(format_fixed(power, 2) == "1.00", "power at p_alt=1");
  o.detail << "p(0)=" << p0 << " p(20/20)=" << p20 << " alpha'=" << format_fixed(a, 3) << " power "
           << format_fixed(power, 2) << ";";
  const auto& m = fixture_matrix();
  for (const auto& c : m.cells) {
    if (c.defense != "composite") continue;
    o.require(c.reject, c.family + " composite does not reject");
    o.require(format_fixed(c.power, 2) == "1.00", c.family + " composite power");
    o.detail << " " << c.family << " p=" << c.p_value << " power " << format_fixed(c.power, 2);
  }
}

void criterion12(Outcome& o) {
  AppConfig c;
  c.scenario.seeds = {3};
  c.scenario.holdout = 100;
  c.sir.steps = 10;
  for (const std::string cmd : {"attack", "defend", "propagate", "theory-check"}) {
    const auto first = run_command(cmd, c);
    const auto manifest = parse_manifest(manifest_json(make_manifest(cmd, c, first)));
    const auto replay = run_command(manifest.command, config_from_manifest(manifest));
    bool same = first.outputs.size() == replay.outputs.size();
    for (std::size_t i = 0; same && i < first.outputs.size(); ++i)
      same = first.outputs[i].name == replay.outputs[i].name && first.outputs[i].content == replay.outputs[i].content &&
             manifest.outputs.at(first.outputs[i].name) == content_hash(replay.outputs[i].content);
    o.require(same, cmd + " replay differs");
    o.detail << cmd << " " << first.outputs.size() << " files " << (same ? "identical" : "DIFFER") << "; ";
  }
}

}  // namespace

int main() {
  const std::vector<std::function<void(Outcome&)>> criteria = {
      criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i](o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
