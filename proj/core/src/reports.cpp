#include "memshield/reports.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <sstream>

#include "memshield/error.hpp"
#include "memshield/metrics.hpp"
#include "memshield/random.hpp"
#include "memshield/stats.hpp"
#include "memshield/theory.hpp"

#ifndef MEMSHIELD_VERSION
#define MEMSHIELD_VERSION "0.0.0"
#endif

namespace memshield {

namespace {

using json = nlohmann::json;

// Shortest text that parses back to the same double.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::ConfigError, "bad value '" + std::string(v) + "' for key " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::ConfigError, "bad value '" + std::string(v) + "' for key " + std::string(key) +
                                          " (true or false)");
}

std::string join_list(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

struct KeySpec {
  std::string name;
  std::string help;
  std::function<void(AppConfig&, std::string_view)> set;
  std::function<std::string(const AppConfig&)> get;
};

template <typename T>
KeySpec size_key(std::string name, std::string help, T AppConfig::*outer, std::size_t T::*field) {
  return {name, std::move(help),
          [=](AppConfig& c, std::string_view v) { (c.*outer).*field = parse_number<std::size_t>(name, v); },
          [=](const AppConfig& c) { return std::to_string((c.*outer).*field); }};
}

template <typename T>
KeySpec double_key(std::string name, std::string help, T AppConfig::*outer, double T::*field) {
  return {name, std::move(help),
          [=](AppConfig& c, std::string_view v) { (c.*outer).*field = parse_number<double>(name, v); },
          [=](const AppConfig& c) { return num((c.*outer).*field); }};
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> kKeys = [] {
    std::vector<KeySpec> k;
    // Corpus.
    k.push_back({"corpus_size", "memory entries per trial",
                 [](AppConfig& c, std::string_view v) { c.scenario.corpus.size = parse_number<std::size_t>("corpus_size", v); },
                 [](const AppConfig& c) { return std::to_string(c.scenario.corpus.size); }});
    k.push_back({"victim_queries", "victim queries per trial",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.corpus.victim_queries = parse_number<std::size_t>("victim_queries", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.corpus.victim_queries); }});
    k.push_back({"benign_queries", "benign queries per trial",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.corpus.benign_queries = parse_number<std::size_t>("benign_queries", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.corpus.benign_queries); }});
    k.push_back({"k", "retrieval depth",
                 [](AppConfig& c, std::string_view v) { c.scenario.corpus.k = parse_number<std::size_t>("k", v); },
                 [](const AppConfig& c) { return std::to_string(c.scenario.corpus.k); }});
    // Attack.
    k.push_back({"family", "attack family: agentpoison, minja, injecmem",
                 [](AppConfig& c, std::string_view v) { c.scenario.attack.family = parse_attack_family(v); },
                 [](const AppConfig& c) { return std::string(to_string(c.scenario.attack.family)); }});
    k.push_back({"n_base", "poison count base, 0 for the family default",
                 [](AppConfig& c, std::string_view v) { c.scenario.attack.n_base = parse_number<std::size_t>("n_base", v); },
                 [](const AppConfig& c) { return std::to_string(c.scenario.attack.n_base); }});
    k.push_back({"trigger_length", "trigger tokens",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.attack.trigger_length = parse_number<std::size_t>("trigger_length", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.attack.trigger_length); }});
    k.push_back({"centroid_tokens", "victim tokens in the trigger passage",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.attack.centroid_tokens = parse_number<std::size_t>("centroid_tokens", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.attack.centroid_tokens); }});
    k.push_back({"trigger_sweeps", "coordinate sweeps of the trigger search",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.attack.trigger_sweeps = parse_number<std::size_t>("trigger_sweeps", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.attack.trigger_sweeps); }});
    k.push_back({"p0", "first-step commit probability of the injection chain",
                 [](AppConfig& c, std::string_view v) { c.scenario.attack.p0 = parse_number<double>("p0", v); },
                 [](const AppConfig& c) { return num(c.scenario.attack.p0); }});
    k.push_back({"minja_lambda", "commit decay per chain step",
                 [](AppConfig& c, std::string_view v) { c.scenario.attack.lambda = parse_number<double>("minja_lambda", v); },
                 [](const AppConfig& c) { return num(c.scenario.attack.lambda); }});
    // Embedder.
    k.push_back({"dimension", "embedding dimension",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.embedder.dimension = parse_number<std::size_t>("dimension", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.embedder.dimension); }});
    k.push_back({"embedder_seed", "projection seed",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.embedder.seed = parse_number<std::uint64_t>("embedder_seed", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.embedder.seed); }});
    k.push_back({"ngram_order", "character n-gram order of the embedder",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.embedder.ngram_order = parse_number<std::size_t>("ngram_order", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.embedder.ngram_order); }});
    k.push_back({"canonicalize", "map synonyms to one representative before embedding",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.embedder.canonicalize_synonyms = parse_bool("canonicalize", v);
                 },
                 [](const AppConfig& c) { return std::string(c.scenario.embedder.canonicalize_synonyms ? "true" : "false"); }});
    k.push_back({"synonym_jitter", "largest embedding move per synonym swap",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.embedder.synonym_jitter = parse_number<double>("synonym_jitter", v);
                 },
                 [](const AppConfig& c) { return num(c.scenario.embedder.synonym_jitter); }});
    // Defenses.
    k.push_back({"kappa", "detector threshold multiplier",
                 [](AppConfig& c, std::string_view v) { c.scenario.defense.kappa = parse_number<double>("kappa", v); },
                 [](const AppConfig& c) { return num(c.scenario.defense.kappa); }});
    k.push_back({"history", "query history capacity",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.history = parse_number<std::size_t>("history", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.defense.history); }});
    k.push_back({"calibration_n", "reference entries for the detector statistics",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.calibration_n = parse_number<std::size_t>("calibration_n", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.defense.calibration_n); }});
    k.push_back({"score_mode", "max or combined",
                 [](AppConfig& c, std::string_view v) { c.scenario.defense.mode = parse_score_mode(v); },
                 [](const AppConfig& c) { return std::string(to_string(c.scenario.defense.mode)); }});
    k.push_back({"proactive_tau", "probe threshold, or auto for the benign quantile",
                 [](AppConfig& c, std::string_view v) {
                   if (v == "auto") {
                     c.scenario.defense.proactive_tau.reset();
                   } else {
                     c.scenario.defense.proactive_tau = parse_number<double>("proactive_tau", v);
                   }
                 },
                 [](const AppConfig& c) {
                   return c.scenario.defense.proactive_tau ? num(*c.scenario.defense.proactive_tau) : std::string("auto");
                 }});
    k.push_back({"proactive_quantile", "benign quantile for the automatic probe threshold",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.proactive_quantile = parse_number<double>("proactive_quantile", v);
                 },
                 [](const AppConfig& c) { return num(c.scenario.defense.proactive_quantile); }});
    k.push_back({"char_quantile", "benign quantile for the character divergence threshold",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.char_quantile = parse_number<double>("char_quantile", v);
                 },
                 [](const AppConfig& c) { return num(c.scenario.defense.char_quantile); }});
    k.push_back({"wm_gamma", "green fraction of the watermark",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.watermark.gamma = parse_number<double>("wm_gamma", v);
                 },
                 [](const AppConfig& c) { return num(c.scenario.defense.watermark.gamma); }});
    k.push_back({"wm_z_write", "z-score the writer aims for",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.watermark.z_write = parse_number<double>("wm_z_write", v);
                 },
                 [](const AppConfig& c) { return num(c.scenario.defense.watermark.z_write); }});
    k.push_back({"wm_z_thr", "z-score below which an entry is rejected",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.watermark.z_thr = parse_number<double>("wm_z_thr", v);
                 },
                 [](const AppConfig& c) { return num(c.scenario.defense.watermark.z_thr); }});
    k.push_back({"wm_seed", "watermark key",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario.defense.watermark.seed = parse_number<std::uint64_t>("wm_seed", v);
                 },
                 [](const AppConfig& c) { return std::to_string(c.scenario.defense.watermark.seed); }});
    k.push_back({"roster", "comma list of defenses: watermark, validation, proactive, memsad, memsad_plus, composite",
                 [](AppConfig& c, std::string_view v) {
                   std::vector<DefenseKind> r;
                   for (const auto& s : split_list(v)) r.push_back(parse_defense_kind(s));
                   c.scenario.roster = std::move(r);
                 },
                 [](const AppConfig& c) {
                   std::vector<std::string> s;
                   for (auto d : c.scenario.roster) s.emplace_back(to_string(d));
                   return join_list(s);
                 }});
    // Protocol and trials.
    k.push_back({"protocol", "evaluation queries: plain or triggered",
                 [](AppConfig& c, std::string_view v) { c.scenario.protocol = parse_query_protocol(v); },
                 [](const AppConfig& c) { return std::string(to_string(c.scenario.protocol)); }});
    k.push_back({"calibration", "history queries: auto, plain or triggered",
                 [](AppConfig& c, std::string_view v) { c.scenario.calibration = parse_calibration_protocol(v); },
                 [](const AppConfig& c) { return std::string(to_string(c.scenario.calibration)); }});
    k.push_back({"seeds", "comma list of trial seeds",
                 [](AppConfig& c, std::string_view v) {
                   std::vector<std::uint64_t> s;
                   for (const auto& x : split_list(v)) s.push_back(parse_number<std::uint64_t>("seeds", x));
                   c.scenario.seeds = std::move(s);
                 },
                 [](const AppConfig& c) {
                   std::vector<std::string> s;
                   for (auto x : c.scenario.seeds) s.push_back(std::to_string(x));
                   return join_list(s);
                 }});
    k.push_back({"holdout", "benign control entries per trial",
                 [](AppConfig& c, std::string_view v) { c.scenario.holdout = parse_number<std::size_t>("holdout", v); },
                 [](const AppConfig& c) { return std::to_string(c.scenario.holdout); }});
    k.push_back({"lambda", "false-positive weight in the sweep objective",
                 [](AppConfig& c, std::string_view v) { c.scenario.lambda = parse_number<double>("lambda", v); },
                 [](const AppConfig& c) { return num(c.scenario.lambda); }});
    // Sweeps and figures.
    k.push_back({"axis", "ablation axis: kappa, corpus_size, n_base, calibration_n, synonym_jitter",
                 [](AppConfig& c, std::string_view v) { c.axis = parse_ablation_axis(v); },
                 [](const AppConfig& c) { return std::string(to_string(c.axis)); }});
    k.push_back({"grid", "comma list of axis values, empty for the default grid",
                 [](AppConfig& c, std::string_view v) {
                   std::vector<double> g;
                   for (const auto& x : split_list(v)) g.push_back(parse_number<double>("grid", x));
                   c.grid = std::move(g);
                 },
                 [](const AppConfig& c) {
                   std::vector<std::string> s;
                   for (double x : c.grid) s.push_back(num(x));
                   return join_list(s);
                 }});
    k.push_back({"figure", "figure for the report command: coupling_trajectory, roc, sir, regret_curve, corpus_scaling",
                 [](AppConfig& c, std::string_view v) {
                   (void)parse_figure(v);
                   c.figure = std::string(v);
                 },
                 [](const AppConfig& c) { return c.figure; }});
    // Propagation.
    k.push_back(size_key("sir_agents", "agents sharing the store", &AppConfig::sir, &SirConfig::agents));
    k.push_back(double_key("sir_p_restore", "chance an infected agent re-stores poison each step", &AppConfig::sir,
                           &SirConfig::p_restore));
    k.push_back(size_key("sir_steps", "simulation steps", &AppConfig::sir, &SirConfig::steps));
    k.push_back(size_key("sir_initial_poison", "poison entries written before the first step", &AppConfig::sir,
                         &SirConfig::initial_poison));
    k.push_back({"sir_defense", "write filter during propagation: none, memsad, composite",
                 [](AppConfig& c, std::string_view v) {
                   if (v != "none" && v != "memsad" && v != "composite") {
                     throw Error(ErrorCode::ConfigError, "sir_defense must be none, memsad or composite");
                   }
                   c.sir_defense = std::string(v);
                 },
                 [](const AppConfig& c) { return c.sir_defense; }});
    std::sort(k.begin(), k.end(), [](const KeySpec& a, const KeySpec& b) { return a.name < b.name; });
    return k;
  }();
  return kKeys;
}

std::string valid_key_list() {
  std::string s;
  for (const auto& k : key_specs()) s += (s.empty() ? "" : ", ") + k.name;
  return s;
}

void validate_app(const AppConfig& c) {
  c.scenario.validate();
  c.sir.validate();
  (void)parse_figure(c.figure);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

// ---------------------------------------------------------------------------
// Figure series

std::string coupling_csv(const AppConfig& c) {
  ScenarioConfig sc = c.scenario;
  sc.attack.family = AttackFamily::AgentPoison;
  if (sc.attack.trigger_length == 0) throw Error(ErrorCode::ConfigError, "coupling trajectory needs trigger_length >= 1");
  const auto t = build_trial(sc, sc.seeds.front());
  const auto& ps = t.poison;
  const std::string suffix = " " + *ps.trigger;
  std::string passage = ps.entries.front().text;
  if (passage.size() > suffix.size() && passage.ends_with(suffix)) passage.resize(passage.size() - suffix.size());

  std::vector<Embedding> reference;
  for (const auto& m : t.reference) reference.push_back(m.embedding);
  const std::size_t h = std::min(sc.defense.history, t.queries.victim.size());
  MemSad base({sc.defense.history, sc.defense.kappa, sc.defense.mode});

  std::ostringstream os;
  os << "step,trigger,retrieval_objective,anomaly_score,threshold,fired\n";
  for (std::size_t step = 0; step < ps.objective_trace.size(); ++step) {
    const std::string& trig = ps.trigger_trace[step];
    std::vector<Embedding> history;
    for (std::size_t i = 0; i < h; ++i) history.push_back(t.embedder.embed(t.queries.victim[i] + " " + trig));
    const MemSad det = base.calibrated(reference, history);
    const double s = det.score(t.embedder.embed(passage + " " + trig));
    os << step << ',' << csv_field(trig) << ',' << num(ps.objective_trace[step]) << ',' << num(s) << ','
       << num(det.threshold()) << ',' << (s > det.threshold() ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string roc_csv(const AppConfig& c) {
  std::ostringstream os;
  os << "family,defense,threshold,fpr,tpr\n";
  const std::vector<DefenseKind> scored = {DefenseKind::MemSad, DefenseKind::MemSadPlus, DefenseKind::Proactive};
  for (auto sc : matrix_scenarios(c.scenario)) {
    sc.roster = scored;
    const auto t = build_trial(sc, sc.seeds.front());
    const auto suite = fit_defenses(sc, t);
    std::map<std::string, std::vector<double>> scores;
    std::vector<bool> labels;
    auto add = [&](const MemoryEntry& e, bool poison) {
      for (const auto& [name, v] : suite.judge(e, scored)) scores[name].push_back(v.score - v.threshold);
      labels.push_back(poison);
    };
    for (const auto& p : t.poison.entries) add(p, true);
    for (const auto& b : t.control) add(b, false);
    for (const auto& [name, s] : scores) {
      for (const auto& pt : roc_curve(s, labels)) {
        os << to_string(sc.attack.family) << ',' << name << ',' << num(pt.threshold) << ',' << num(pt.fpr) << ','
           << num(pt.tpr) << '\n';
      }
    }
  }
  return os.str();
}

struct SirRun {
  std::string condition;
  std::uint64_t seed;
  SirTrajectory trajectory;
};

std::vector<SirRun> sir_runs(const AppConfig& c) {
  std::vector<SirRun> runs;
  for (auto seed : c.scenario.seeds) {
    const auto t = build_trial(c.scenario, seed);
    const auto suite = fit_defenses(c.scenario, t);
    SirConfig cfg = c.sir;
    cfg.k = c.scenario.corpus.k;
    cfg.seed = seed;
    runs.push_back({"none", seed, sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder)});
    if (c.sir_defense == "none") continue;
    WriteFilter filter;
    if (c.sir_defense == "memsad") {
      filter = [&](const MemoryEntry& e) { return suite.memsad.filter(e.embedding).flagged; };
    } else {
      filter = [&](const MemoryEntry& e) { return suite.judge(e, {DefenseKind::Composite}).at("composite").flagged; };
    }
    runs.push_back({c.sir_defense, seed, sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder, filter)});
  }
  return runs;
}

std::string sir_csv(const std::vector<SirRun>& runs) {
  std::ostringstream os;
  os << "condition,seed,step,S,I,R,secondary_entries,quarantined\n";
  for (const auto& r : runs) {
    for (const auto& s : r.trajectory.steps) {
      os << r.condition << ',' << r.seed << ',' << s.step << ',' << s.s << ',' << s.i << ',' << s.r << ','
         << s.secondary_entries << ',' << s.quarantined << '\n';
    }
  }
  return os.str();
}

constexpr double kRegretSigma = 0.05;
constexpr double kRegretDrift = 1e-3;

std::string regret_csv(const AppConfig& c) {
  const auto win = regret_window(kRegretSigma, kRegretDrift);
  std::ostringstream os;
  os << "window,model_regret,tracking_error,balance_point\n";
  for (std::size_t m = 1; m <= 100; ++m) {
    const double err = simulate_tracking_error(kRegretSigma, kRegretDrift, m, 2000, c.scenario.seeds.front());
    os << m << ',' << num(regret_model(kRegretSigma, kRegretDrift, m)) << ',' << num(err) << ','
       << (m == win.m_star ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string corpus_scaling_csv(const AppConfig& c) {
  std::ostringstream os;
  os << "corpus_size,family,protocol,seed,asr_r\n";
  for (double size : default_grid(AblationAxis::CorpusSize)) {
    for (auto sc : matrix_scenarios(c.scenario)) {
      sc.corpus.size = static_cast<std::size_t>(size);
      sc.defense.calibration_n = std::min(sc.defense.calibration_n, sc.corpus.size);
      std::vector<QueryProtocol> protocols = {QueryProtocol::Plain};
      if (sc.attack.family == AttackFamily::AgentPoison) protocols.push_back(QueryProtocol::Triggered);
      for (auto proto : protocols) {
        sc.protocol = proto;
        for (auto seed : sc.seeds) {
          const auto t = build_trial(sc, seed);
          os << sc.corpus.size << ',' << to_string(sc.attack.family) << ',' << to_string(proto) << ',' << seed << ','
             << num(asr_r(t.store, t.poison.entries, t.victims, sc.corpus.k)) << '\n';
        }
      }
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

json metrics_json(const DefenseMetrics& m) {
  return {{"tpr", m.tpr},
          {"fpr", m.fpr},
          {"auroc", m.auroc},
          {"post_filter_asr_r", m.post_filter_asr_r},
          {"benign_accuracy", m.benign_accuracy},
          {"poison_flagged", m.poison_flagged},
          {"poison_total", m.poison_total},
          {"benign_flagged", m.benign_flagged},
          {"benign_total", m.benign_total}};
}

std::string trials_csv(const std::vector<TrialReport>& trials) {
  std::ostringstream os;
  static const char* const kRegime[] = {"family",      "protocol", "calibration",   "calibration_used",
                                        "score_mode",  "kappa",    "calibration_n", "history",
                                        "corpus_size", "n_base",   "poison_entries"};
  for (const char* col : kRegime) os << col << ',';
  os << "seed,asr_r,asr_a,asr_t,defense,tpr,fpr,auroc,post_filter_asr_r,benign_accuracy\n";
  for (const auto& t : trials) {
    for (const auto& [name, m] : t.defenses) {
      for (const char* col : kRegime) os << t.regime.at(col) << ',';
      os << t.seed << ',' << num(t.asr_r) << ','
         << num(t.asr_a) << ',' << num(t.asr_t) << ',' << name << ',' << num(m.tpr) << ',' << num(m.fpr) << ','
         << num(m.auroc) << ',' << num(m.post_filter_asr_r) << ',' << num(m.benign_accuracy) << '\n';
    }
  }
  return os.str();
}

CommandResult cmd_attack(const AppConfig& c) {
  const auto& sc = c.scenario;
  std::ostringstream rows, entries;
  rows << "seed,family,protocol,entries,asr_r,asr_a,asr_t,trigger\n";
  entries << "seed,id,text\n";
  json summary = {{"command", "attack"}, {"family", std::string(to_string(sc.attack.family))}};
  std::vector<double> asrs;
  for (auto seed : sc.seeds) {
    const auto t = build_trial(sc, seed);
    const double r = asr_r(t.store, t.poison.entries, t.victims, sc.corpus.k);
    asrs.push_back(r);
    rows << seed << ',' << to_string(sc.attack.family) << ',' << to_string(sc.protocol) << ','
         << t.poison.entries.size() << ',' << num(r) << ',' << num(t.poison.modelled_asr_a) << ','
         << num(r * t.poison.modelled_asr_a) << ',' << csv_field(t.poison.trigger.value_or("")) << '\n';
    for (const auto& e : t.poison.entries) entries << seed << ',' << e.id << ',' << csv_field(e.text) << '\n';
  }
  summary["asr_r_mean"] = mean(asrs);
  summary["modelled_asr_a"] = modelled_asr_a(sc.attack.family);
  return {{{"attack.csv", rows.str()}, {"poison.csv", entries.str()}, {"summary.json", summary.dump(2) + "\n"}},
          true,
          {}};
}

CommandResult cmd_defend(const AppConfig& c) {
  std::vector<TrialReport> trials;
  for (auto seed : c.scenario.seeds) trials.push_back(run_trial(c.scenario, seed));
  json summary = {{"command", "defend"}};
  std::map<std::string, std::vector<DefenseMetrics>> by;
  for (const auto& t : trials) {
    for (const auto& [name, m] : t.defenses) by[name].push_back(m);
  }
  json defs = json::object();
  for (const auto& [name, ms] : by) {
    std::vector<double> tpr, fpr, post;
    for (const auto& m : ms) {
      tpr.push_back(m.tpr);
      fpr.push_back(m.fpr);
      post.push_back(m.post_filter_asr_r);
    }
    defs[name] = {{"tpr_mean", mean(tpr)}, {"fpr_mean", mean(fpr)}, {"post_filter_asr_r_mean", mean(post)}};
  }
  summary["defenses"] = defs;
  std::vector<double> asrs;
  for (const auto& t : trials) asrs.push_back(t.asr_r);
  summary["asr_r_mean"] = mean(asrs);
  json per_trial = json::array();
  for (const auto& t : trials) {
    json d = json::object();
    for (const auto& [name, m] : t.defenses) d[name] = metrics_json(m);
    per_trial.push_back({{"seed", t.seed}, {"asr_r", t.asr_r}, {"asr_t", t.asr_t}, {"defenses", d}});
  }
  summary["trials"] = per_trial;
  return {{{"trials.csv", trials_csv(trials)}, {"summary.json", summary.dump(2) + "\n"}}, true, {}};
}

CommandResult cmd_matrix(const AppConfig& c) {
  const auto rep = run_matrix(matrix_scenarios(c.scenario));
  std::ostringstream cells, attacks;
  cells << "family,defense,tpr,tpr_lo,tpr_hi,fpr,fpr_lo,fpr_hi,fpr_exact_lo,fpr_exact_hi,auroc,post_filter_asr_r,"
           "benign_accuracy,poison_flagged,poison_total,benign_flagged,benign_total,p_value,reject,power\n";
  for (const auto& x : rep.cells) {
    cells << x.family << ',' << x.defense << ',' << num(x.tpr) << ',' << num(x.tpr_ci.lo) << ',' << num(x.tpr_ci.hi)
          << ',' << num(x.fpr) << ',' << num(x.fpr_ci.lo) << ',' << num(x.fpr_ci.hi) << ',' << num(x.fpr_exact.lo)
          << ',' << num(x.fpr_exact.hi) << ',' << num(x.auroc) << ',' << num(x.post_filter_asr_r) << ','
          << num(x.benign_accuracy) << ',' << x.poison_flagged << ',' << x.poison_total << ',' << x.benign_flagged
          << ',' << x.benign_total << ',' << num(x.p_value) << ',' << (x.reject ? 1 : 0) << ',' << num(x.power)
          << '\n';
  }
  attacks << "family,asr_r,asr_r_lo,asr_r_hi,asr_a,asr_t\n";
  for (const auto& a : rep.attacks) {
    attacks << a.family << ',' << num(a.asr_r) << ',' << num(a.asr_r_ci.lo) << ',' << num(a.asr_r_ci.hi) << ','
            << num(a.asr_a) << ',' << num(a.asr_t) << '\n';
  }
  json summary = {{"command", "matrix"},
                  {"alpha", rep.alpha},
                  {"comparisons", rep.comparisons},
                  {"alpha_corrected", rep.alpha_corrected},
                  {"alpha_corrected_display", format_fixed(rep.alpha_corrected, 3)}};
  json cj = json::array();
  for (const auto& x : rep.cells) {
    cj.push_back({{"family", x.family},
                  {"defense", x.defense},
                  {"tpr", x.tpr},
                  {"fpr", x.fpr},
                  {"post_filter_asr_r", x.post_filter_asr_r},
                  {"p_value", x.p_value},
                  {"reject", x.reject}});
  }
  summary["cells"] = cj;
  return {{{"attacks.csv", attacks.str()},
           {"cells.csv", cells.str()},
           {"trials.csv", trials_csv(rep.trials)},
           {"summary.json", summary.dump(2) + "\n"}},
          true,
          {}};
}

CommandResult cmd_adaptive(const AppConfig& c) {
  const auto rows = adaptive_run(c.scenario);
  std::ostringstream os;
  os << "family,seed,entries,tpr_before,tpr_after,evasion,asr_r_before,asr_r_after,delta_asr_r,subs_per_entry,"
        "score_delta,max_abs_shift,shift_bound_holds,plus_tpr_after\n";
  CommandResult r;
  std::vector<double> ev, subs, delta, plus;
  for (const auto& x : rows) {
    os << x.family << ',' << x.seed << ',' << x.entries << ',' << num(x.tpr_before) << ',' << num(x.tpr_after) << ','
       << num(x.evasion) << ',' << num(x.asr_r_before) << ',' << num(x.asr_r_after) << ',' << num(x.delta_asr_r)
       << ',' << num(x.subs_per_entry) << ',' << num(x.score_delta) << ',' << num(x.max_abs_shift) << ','
       << (x.shift_bound_holds ? 1 : 0) << ',' << num(x.plus_tpr_after) << '\n';
    ev.push_back(x.evasion);
    subs.push_back(x.subs_per_entry);
    delta.push_back(x.delta_asr_r);
    plus.push_back(x.plus_tpr_after);
    if (!x.shift_bound_holds) {
      r.checks_passed = false;
      r.failures.push_back("shift bound violated at seed " + std::to_string(x.seed));
    }
  }
  json summary = {{"command", "adaptive"},
                  {"family", std::string(to_string(c.scenario.attack.family))},
                  {"evasion_mean", mean(ev)},
                  {"subs_per_entry_mean", mean(subs)},
                  {"delta_asr_r_mean", mean(delta)},
                  {"memsad_plus_tpr_after_mean", mean(plus)},
                  {"synonym_jitter", c.scenario.embedder.synonym_jitter}};
  r.outputs = {{"adaptive.csv", os.str()}, {"summary.json", summary.dump(2) + "\n"}};
  return r;
}

CommandResult cmd_sweep(const AppConfig& c) {
  const auto grid = c.grid.empty() ? default_grid(c.axis) : c.grid;
  CommandResult r;
  json summary = {{"command", "sweep"}, {"axis", std::string(to_string(c.axis))}};
  if (c.axis == AblationAxis::Kappa) {
    const auto sw = kappa_sweep(c.scenario, grid, c.scenario.lambda);
    std::ostringstream os;
    os << "kappa,post_filter_asr_r,fpr,objective\n";
    for (const auto& p : sw.points) {
      os << num(p.kappa) << ',' << num(p.post_filter_asr_r) << ',' << num(p.fpr) << ',' << num(p.objective) << '\n';
    }
    summary["kappa_star"] = sw.kappa_star;
    summary["lambda"] = sw.lambda;
    summary["leader"] = sw.leader;
    r.outputs.push_back({"kappa.csv", os.str()});
  }
  const auto table = ablation_sweep(c.scenario, c.axis, grid);
  std::ostringstream os, cal;
  os << "value,seed,asr_r,defense,tpr,fpr,post_filter_asr_r\n";
  cal << "n,bound,coverage,median_observed,p95_observed,ratio\n";
  for (const auto& p : table.points) {
    for (const auto& t : p.trials) {
      for (const auto& [name, m] : t.defenses) {
        os << num(p.value) << ',' << t.seed << ',' << num(t.asr_r) << ',' << name << ',' << num(m.tpr) << ','
           << num(m.fpr) << ',' << num(m.post_filter_asr_r) << '\n';
      }
    }
    if (p.calibration) {
      const auto& k = *p.calibration;
      cal << k.n << ',' << num(k.bound) << ',' << num(k.coverage) << ',' << num(k.median_observed) << ','
          << num(k.p95_observed) << ',' << num(k.ratio) << '\n';
    }
  }
  r.outputs.push_back({"ablation.csv", os.str()});
  if (c.axis == AblationAxis::CalibrationN) r.outputs.push_back({"calibration.csv", cal.str()});
  r.outputs.push_back({"summary.json", summary.dump(2) + "\n"});
  return r;
}

CommandResult cmd_propagate(const AppConfig& c) {
  const auto runs = sir_runs(c);
  std::map<std::string, std::vector<double>> spread, secondary;
  for (const auto& r : runs) {
    spread[r.condition].push_back(r.trajectory.final_spread());
    secondary[r.condition].push_back(static_cast<double>(r.trajectory.secondary_entries));
  }
  json summary = {{"command", "propagate"}, {"defense", c.sir_defense}};
  json conds = json::object();
  for (const auto& [name, v] : spread) {
    conds[name] = {{"final_spread_mean", mean(v)}, {"secondary_entries_mean", mean(secondary[name])}};
  }
  summary["conditions"] = conds;
  if (c.sir_defense != "none") {
    const double base = mean(secondary["none"]);
    summary["secondary_reduction"] = base > 0.0 ? 1.0 - mean(secondary[c.sir_defense]) / base : 0.0;
  }
  return {{{"sir.csv", sir_csv(runs)}, {"summary.json", summary.dump(2) + "\n"}}, true, {}};
}

CommandResult cmd_theory_check(const AppConfig& c) {
  CommandResult r;
  // Coupling on random pairs.
  Rng rng = make_rng(c.scenario.seeds.front(), 0x7E0);
  double worst_rel = 0.0, worst_cos = 1.0;
  for (std::size_t d : {std::size_t{8}, std::size_t{64}}) {
    for (int i = 0; i < 100; ++i) {
      const Vec e = random_unit_vector(d, rng), q = random_unit_vector(d, rng);
      for (auto g : {MonotoneMap::Identity, MonotoneMap::Affine, MonotoneMap::Exp, MonotoneMap::Logistic}) {
        const auto res = coupling_check(e, q, g);
        const double slope = map_derivative(g, dot(e, q));
        Vec diff(d);
        for (std::size_t j = 0; j < d; ++j) diff[j] = res.composed_gradient[j] - slope * res.retrieval_gradient[j];
        const double denom = std::max(slope * norm(res.retrieval_gradient), 1e-12);
        worst_rel = std::max(worst_rel, norm(diff) / denom);
        worst_cos = std::min(worst_cos, res.cosine);
      }
    }
  }
  // Bounds on the detector score population of the first trial.
  const auto t = build_trial(c.scenario, c.scenario.seeds.front());
  const auto suite = fit_defenses(c.scenario, t);
  std::vector<double> scores;
  for (const auto& m : t.store.entries()) scores.push_back(suite.memsad.score(m.embedding));
  const auto reports = bound_reports(scores, c.scenario.defense.kappa, c.scenario.seeds.front());

  std::ostringstream os;
  os << "name,inputs,bound,empirical,satisfied\n";
  json rows = json::array();
  for (const auto& b : reports) {
    os << b.name << ',' << csv_field(b.inputs) << ',' << num(b.bound) << ','
       << (b.empirical ? num(*b.empirical) : std::string()) << ',' << (b.satisfied ? 1 : 0) << '\n';
    rows.push_back({{"name", b.name}, {"inputs", b.inputs}, {"bound", b.bound}, {"satisfied", b.satisfied}});
    if (!b.satisfied) {
      r.checks_passed = false;
      r.failures.push_back("bound not satisfied: " + b.name + " (" + b.inputs + ")");
    }
  }
  if (worst_cos < 1.0 - 1e-6) {
    r.checks_passed = false;
    r.failures.push_back("gradient coupling cosine below 1 - 1e-6");
  }
  json summary = {{"command", "theory-check"},
                  {"coupling_min_cosine", worst_cos},
                  {"coupling_max_rel_error", worst_rel},
                  {"bounds", rows}};
  r.outputs = {{"bounds.csv", os.str()}, {"summary.json", summary.dump(2) + "\n"}};
  return r;
}

CommandResult cmd_report(const AppConfig& c) {
  const Figure f = parse_figure(c.figure);
  return {{{std::string(to_string(f)) + ".csv", figure_csv(f, c)}}, true, {}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<ConfigKey> config_keys() {
  const AppConfig defaults;
  std::vector<ConfigKey> out;
  for (const auto& k : key_specs()) out.push_back({k.name, k.get(defaults), k.help});
  return out;
}

void set_config_value(AppConfig& c, std::string_view key, std::string_view value) {
  const auto& keys = key_specs();
  const auto it = std::find_if(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.name == key; });
  if (it == keys.end()) {
    throw Error(ErrorCode::ConfigError, "unknown key '" + std::string(key) + "'; valid keys: " + valid_key_list());
  }
  it->set(c, trim(value));
}

std::map<std::string, std::string> config_values(const AppConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& k : key_specs()) out[k.name] = k.get(c);
  return out;
}

namespace {

void apply_assignment(AppConfig& c, std::string_view line, std::size_t lineno) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ParseError(lineno, "expected key = value");
  const std::string key = trim(line.substr(0, eq));
  if (key.empty()) throw ParseError(lineno, "empty key");
  set_config_value(c, key, line.substr(eq + 1));
}

}  // namespace

AppConfig parse_config_text(std::string_view text, const std::vector<std::string>& overrides) {
  AppConfig c;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    apply_assignment(c, line, lineno);
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "override '" + o + "' is not key=value");
    set_config_value(c, trim(std::string_view(o).substr(0, eq)), std::string_view(o).substr(eq + 1));
  }
  validate_app(c);
  return c;
}

AppConfig parse_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config_text(text, overrides);
}

std::string canonical_config(const AppConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_values(c)) out += k + "=" + v + "\n";
  return out;
}

std::string content_hash(std::string_view content) { return hex16(fnv1a64(content)); }

std::string config_hash(const AppConfig& c) { return content_hash(canonical_config(c)); }

std::vector<double> default_grid(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::Kappa: return {1.0, 1.5, 2.0, 2.5, 3.0};
    case AblationAxis::CorpusSize: return {50, 100, 200, 500, 1000};
    case AblationAxis::NBase: return {1, 3, 5, 10, 20};
    case AblationAxis::CalibrationN: return {25, 50, 100, 200, 500};
    case AblationAxis::SynonymJitter: return {0.0, 0.002, 0.004, 0.008};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Figures

std::string_view to_string(Figure f) {
  switch (f) {
    case Figure::CouplingTrajectory: return "coupling_trajectory";
    case Figure::Roc: return "roc";
    case Figure::Sir: return "sir";
    case Figure::RegretCurve: return "regret_curve";
    case Figure::CorpusScaling: return "corpus_scaling";
  }
  return "?";
}

Figure parse_figure(std::string_view s) {
  for (auto f : {Figure::CouplingTrajectory, Figure::Roc, Figure::Sir, Figure::RegretCurve, Figure::CorpusScaling}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown figure '" + std::string(s) +
                                          "' (coupling_trajectory, roc, sir, regret_curve, corpus_scaling)");
}

std::string figure_csv(Figure f, const AppConfig& c) {
  switch (f) {
    case Figure::CouplingTrajectory: return coupling_csv(c);
    case Figure::Roc: return roc_csv(c);
    case Figure::Sir: return sir_csv(sir_runs(c));
    case Figure::RegretCurve: return regret_csv(c);
    case Figure::CorpusScaling: return corpus_scaling_csv(c);
  }
  throw Error(ErrorCode::ConfigError, "unknown figure");
}

// ---------------------------------------------------------------------------
// Commands and manifests

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> kNames = {"attack",    "defend",    "matrix",       "adaptive",
                                                  "sweep",     "propagate", "theory-check", "report"};
  return kNames;
}

CommandResult run_command(std::string_view command, const AppConfig& c) {
  validate_app(c);
  if (command == "attack") return cmd_attack(c);
  if (command == "defend") return cmd_defend(c);
  if (command == "matrix") return cmd_matrix(c);
  if (command == "adaptive") return cmd_adaptive(c);
  if (command == "sweep") return cmd_sweep(c);
  if (command == "propagate") return cmd_propagate(c);
  if (command == "theory-check") return cmd_theory_check(c);
  if (command == "report") return cmd_report(c);
  throw Error(ErrorCode::ConfigError, "unknown command '" + std::string(command) + "'");
}

Manifest make_manifest(std::string_view command, const AppConfig& c, const CommandResult& r) {
  Manifest m;
  m.command = std::string(command);
  m.version = MEMSHIELD_VERSION;
  m.config_hash = config_hash(c);
  m.seeds = c.scenario.seeds;
  m.config = config_values(c);
  for (const char* mod : {"embedding", "memory_store", "corpus", "attacks", "defenses", "theory", "metrics",
                          "propagation", "harness", "reports"}) {
    m.modules[mod] = MEMSHIELD_VERSION;
  }
  for (const auto& o : r.outputs) m.outputs[o.name] = content_hash(o.content);
  return m;
}

std::string manifest_json(const Manifest& m) {
  json j = {{"command", m.command},
            {"version", m.version},
            {"config_hash", m.config_hash},
            {"seeds", m.seeds},
            {"config", m.config},
            {"modules", m.modules},
            {"outputs", m.outputs}};
  return j.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("manifest is not valid JSON: ") + e.what());
  }
  Manifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.modules = j.value("modules", std::map<std::string, std::string>{});
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("manifest field missing or mistyped: ") + e.what());
  }
  return m;
}

AppConfig config_from_manifest(const Manifest& m) {
  AppConfig c;
  for (const auto& [k, v] : m.config) set_config_value(c, k, v);
  validate_app(c);
  if (config_hash(c) != m.config_hash) {
    throw Error(ErrorCode::ConfigError, "manifest config does not match its hash " + m.config_hash);
  }
  return c;
}

void write_outputs(const std::filesystem::path& dir, const CommandResult& r, const Manifest& m) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::NotFound, "cannot write " + (dir / name).string());
    out << content;
  };
  for (const auto& o : r.outputs) write(o.name, o.content);
  write("manifest.json", manifest_json(m));
}

}  // namespace memshield
