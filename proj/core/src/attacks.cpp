#include "memshield/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "memshield/defenses.hpp"
#include "memshield/error.hpp"
#include "memshield/random.hpp"

namespace memshield {

std::size_t AttackConfig::effective_n_base() const {
  if (n_base > 0) return n_base;
  switch (family) {
    case AttackFamily::AgentPoison: return 5;
    case AttackFamily::Minja: return 10;
    case AttackFamily::InjecMem: return 15;
  }
  return 5;
}

void AttackConfig::validate() const {
  if (!(p0 > 0.0 && p0 <= 1.0)) throw Error(ErrorCode::ConfigError, "p0 must lie in (0, 1]");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::ConfigError, "lambda must be >= 0");
}

double modelled_asr_a(AttackFamily family) {
  switch (family) {
    case AttackFamily::AgentPoison: return 0.68;
    case AttackFamily::Minja: return 0.76;
    case AttackFamily::InjecMem: return 0.57;
  }
  return 0.0;
}

namespace {

std::string poison_id(AttackFamily f, std::size_t i) {
  std::string s = std::to_string(i);
  if (s.size() < 4) s.insert(0, 4 - s.size(), '0');
  switch (f) {
    case AttackFamily::AgentPoison: return "ap" + s;
    case AttackFamily::Minja: return "mj" + s;
    case AttackFamily::InjecMem: return "im" + s;
  }
  return "px" + s;
}

MemoryEntry make_poison(AttackFamily f, std::size_t i, std::string text, const Embedder& embedder) {
  MemoryEntry e;
  e.id = poison_id(f, i);
  e.embedding = embedder.embed(text);
  e.text = std::move(text);
  e.provenance = Provenance::poisoned(f);
  e.category = "poison";
  return e;
}

std::string with_trigger(const std::string& text, const std::vector<std::string>& trigger) {
  if (trigger.empty()) return text;
  return text + " " + join(trigger);
}

}  // namespace

std::vector<std::string> centroid_tokens(const std::vector<std::string>& victims, std::size_t count) {
  std::map<std::string, std::size_t> freq;
  for (const auto& q : victims)
    for (const auto& t : tokenize(q)) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < items.size() && i < count; ++i) out.push_back(items[i].first);
  return out;
}

double trigger_objective(const std::vector<std::string>& victims, const std::vector<std::string>& passages,
                         const std::vector<std::string>& trigger, const Embedder& embedder) {
  if (victims.empty() || passages.empty()) throw Error(ErrorCode::EmptyInput, "trigger objective needs inputs");
  std::vector<Embedding> ps;
  ps.reserve(passages.size());
  for (const auto& p : passages) ps.push_back(embedder.embed(with_trigger(p, trigger)));
  double sum = 0.0;
  for (const auto& q : victims) {
    const Embedding eq = embedder.embed(with_trigger(q, trigger));
    for (const auto& p : ps) sum += cosim(eq, p);
  }
  return sum / static_cast<double>(victims.size() * ps.size());
}

std::vector<std::string> greedy_trigger_search(const std::vector<std::string>& victims,
                                               const std::vector<std::string>& passages,
                                               const std::vector<std::string>& vocab, std::size_t length,
                                               std::size_t sweeps, std::uint64_t seed, const Embedder& embedder,
                                               std::vector<double>* trace, std::vector<std::string>* triggers) {
  if (length == 0) {
    if (trace) trace->push_back(trigger_objective(victims, passages, {}, embedder));
    if (triggers) triggers->emplace_back();
    return {};
  }
  if (vocab.empty()) throw Error(ErrorCode::ConfigError, "trigger vocabulary is empty");
  Rng rng = make_rng(seed, 0x7216);
  std::vector<std::string> trigger(length);
  for (auto& t : trigger) t = pick(vocab, rng);
  double best = trigger_objective(victims, passages, trigger, embedder);
  if (trace) trace->push_back(best);
  if (triggers) triggers->push_back(join(trigger));
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    bool improved = false;
    for (std::size_t pos = 0; pos < length; ++pos) {
      std::string best_tok = trigger[pos];
      for (const auto& tok : vocab) {
        if (tok == trigger[pos]) continue;
        const std::string saved = trigger[pos];
        trigger[pos] = tok;
        const double v = trigger_objective(victims, passages, trigger, embedder);
        trigger[pos] = saved;
        if (v > best) {
          best = v;
          best_tok = tok;
        }
      }
      if (best_tok != trigger[pos]) {
        trigger[pos] = best_tok;
        improved = true;
        if (trace) trace->push_back(best);
        if (triggers) triggers->push_back(join(trigger));
      }
    }
    if (!improved) break;
  }
  return trigger;
}

PoisonSet agentpoison_generate(const MemoryStore& /*store*/, const QuerySet& victims, const AttackConfig& cfg,
                               const Embedder& embedder, const std::vector<std::string>& trigger_vocab) {
  cfg.validate();
  if (victims.victim.empty()) throw Error(ErrorCode::EmptyInput, "no victim queries");
  if (cfg.trigger_length > 0 && trigger_vocab.empty()) {
    throw Error(ErrorCode::ConfigError, "trigger vocabulary is empty");
  }
  const std::size_t n = cfg.effective_n_base();
  const std::string centroid = join(centroid_tokens(victims.victim, cfg.centroid_tokens));
  const auto& payloads = fixtures::agentpoison_payloads();
  Rng rng = make_rng(cfg.seed, 0xA9E47);
  const std::size_t offset = uniform_index(rng, payloads.size());

  std::vector<std::string> passages;
  for (std::size_t i = 0; i < n; ++i) {
    passages.push_back(centroid + " " + payloads[(offset + i) % payloads.size()]);
  }

  PoisonSet ps;
  ps.family = AttackFamily::AgentPoison;
  ps.modelled_asr_a = modelled_asr_a(ps.family);
  ps.attempted = n;
  const auto trigger = greedy_trigger_search(victims.victim, passages, trigger_vocab, cfg.trigger_length,
                                             cfg.trigger_sweeps, cfg.seed, embedder, &ps.objective_trace,
                                             &ps.trigger_trace);
  ps.trigger = join(trigger);
  for (std::size_t i = 0; i < n; ++i) {
    ps.entries.push_back(make_poison(ps.family, i, with_trigger(passages[i], trigger), embedder));
  }
  return ps;
}

double minja_expected_commits(double p0, double lambda, std::size_t steps) {
  double s = 0.0;
  for (std::size_t i = 0; i < steps; ++i) s += p0 * std::exp(-lambda * static_cast<double>(i));
  return s;
}

PoisonSet minja_generate(const MemoryStore& /*store*/, const QuerySet& victims, const AttackConfig& cfg,
                         const Embedder& embedder) {
  cfg.validate();
  if (victims.victim.empty()) throw Error(ErrorCode::EmptyInput, "no victim queries");
  const std::size_t chain = 2 * cfg.effective_n_base();
  Rng rng = make_rng(cfg.seed, 0x313A);

  // Indication source: victim queries in seeded order, concatenated until
  // the longest prefix is available.
  const std::size_t min_tail = 5;
  const std::size_t longest = chain + min_tail - 1;
  std::vector<std::size_t> order(victims.victim.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  std::vector<std::string> source;
  for (std::size_t j = 0; source.size() < longest; j = (j + 1) % order.size()) {
    for (auto& t : tokenize(victims.victim[order[j]])) source.push_back(std::move(t));
  }

  PoisonSet ps;
  ps.family = AttackFamily::Minja;
  ps.modelled_asr_a = modelled_asr_a(ps.family);
  ps.attempted = chain;
  const std::string& directive = fixtures::minja_directive();
  for (std::size_t i = 0; i < chain; ++i) {
    const std::size_t len = longest - i;
    std::vector<std::string> prefix(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(len));
    const bool committed = bernoulli(rng, cfg.p0 * std::exp(-cfg.lambda * static_cast<double>(i)));
    if (!committed) continue;
    ps.entries.push_back(make_poison(ps.family, i, join(prefix) + " " + directive, embedder));
  }
  return ps;
}

PoisonSet injecmem_generate(const MemoryStore& /*store*/, const QuerySet& /*victims*/, const AttackConfig& cfg,
                            const Embedder& embedder, const std::vector<std::string>& anchors) {
  cfg.validate();
  if (anchors.empty()) throw Error(ErrorCode::ConfigError, "no anchor templates");
  std::map<std::string, std::vector<std::string>> parts;
  for (const auto& p : fixtures::injecmem_payloads()) {
    const auto colon = p.find(':');
    parts[p.substr(0, colon)].push_back(p.substr(colon + 1));
  }
  const std::size_t n = 3 * cfg.effective_n_base();
  PoisonSet ps;
  ps.family = AttackFamily::InjecMem;
  ps.modelled_asr_a = modelled_asr_a(ps.family);
  ps.attempted = n;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(cfg.seed, hash_combine(0x1213, i));
    const std::string payload =
        pick(parts["action"], rng) + " " + pick(parts["object"], rng) + " " + pick(parts["dest"], rng);
    std::string text = anchors[i % anchors.size()];
    const auto slot = text.find("{payload}");
    if (slot != std::string::npos) {
      text.replace(slot, 9, payload);
    } else {
      text += " " + payload;
    }
    ps.entries.push_back(make_poison(ps.family, i, std::move(text), embedder));
  }
  return ps;
}

PoisonSet generate_poison(const MemoryStore& store, const QuerySet& victims, const AttackConfig& cfg,
                          const Embedder& embedder) {
  switch (cfg.family) {
    case AttackFamily::AgentPoison: return agentpoison_generate(store, victims, cfg, embedder);
    case AttackFamily::Minja: return minja_generate(store, victims, cfg, embedder);
    case AttackFamily::InjecMem: return injecmem_generate(store, victims, cfg, embedder);
  }
  throw Error(ErrorCode::ConfigError, "unknown attack family");
}

// ---------------------------------------------------------------------------
// Adaptive synonym adversary

AdaptReport synonym_adapt(const PoisonSet& poison, const MemSad& detector, const SynonymTable& table,
                          const MemoryStore& store, const std::vector<Embedding>& constraint_queries,
                          std::size_t k, const Embedder& embedder) {
  if (!detector.is_calibrated()) throw Error(ErrorCode::NotCalibrated, "adaptive adversary needs a calibrated detector");
  const double tau = detector.threshold();
  AdaptReport rep;
  rep.adapted = poison;
  for (auto& entry : rep.adapted.entries) {
    const Embedding original = entry.embedding;
    const double s0 = detector.score(original);
    rep.score_before.push_back(s0);
    rep.flagged_before.push_back(s0 > tau);

    // Which constraint queries retrieve the entry at depth k; a move must keep this set unchanged.
    std::vector<bool> held;
    for (const auto& q : constraint_queries) held.push_back(store.rank_of(q, entry.id, original) <= k);

    auto words = tokenize(entry.text);
    Embedding cur = original;
    double s = s0;
    std::size_t subs = 0;
    while (s > tau && !table.empty()) {
      // Rank candidate moves by score, then take the best one that keeps rank.
      struct Move {
        double score;
        std::size_t pos;
        std::string word;
        Embedding emb;
      };
      std::vector<Move> moves;
      for (std::size_t i = 0; i < words.size(); ++i) {
        for (const auto& alt : table.alternatives(words[i])) {
          auto cand = words;
          cand[i] = alt;
          Embedding e = embedder.embed(join(cand));
          const double cs = detector.score(e);
          if (cs < s) moves.push_back({cs, i, alt, std::move(e)});
        }
      }
      std::stable_sort(moves.begin(), moves.end(), [](const Move& a, const Move& b) { return a.score < b.score; });
      bool applied = false;
      for (auto& m : moves) {
        bool keeps = true;
        for (std::size_t qi = 0; qi < constraint_queries.size() && keeps; ++qi) {
          keeps = (store.rank_of(constraint_queries[qi], entry.id, m.emb) <= k) == held[qi];
        }
        if (!keeps) continue;
        words[m.pos] = m.word;
        cur = std::move(m.emb);
        s = m.score;
        ++subs;
        applied = true;
        break;
      }
      if (!applied) break;
    }

    double shift = 0.0;
    for (const auto& q : constraint_queries) shift = std::max(shift, std::abs(cosim(cur, q) - cosim(original, q)));
    if (subs > 0) {
      entry.text = join(words);
      entry.embedding = cur;
    }
    rep.substitutions.push_back(subs);
    rep.score_after.push_back(s);
    rep.flagged_after.push_back(s > tau);
    rep.max_cosim_shift.push_back(shift);
  }
  rep.adapted.substitutions = rep.substitutions;
  return rep;
}

}  // namespace memshield
