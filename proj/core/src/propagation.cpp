#include "memshield/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "memshield/error.hpp"
#include "memshield/fixtures.hpp"
#include "memshield/random.hpp"

namespace memshield {

SirState sir_difference_step(const SirState& x, double beta, double gamma, double n) {
  if (!(n > 0.0)) throw Error(ErrorCode::ConfigError, "population must be > 0");
  if (std::abs(x.s + x.i + x.r - n) > 1e-9 * std::max(1.0, n)) {
    throw Error(ErrorCode::ConfigError, "S + I + R must equal N");
  }
  const double infections = beta * x.s * x.i / n;
  const double recoveries = gamma * x.i;
  return {x.s - infections, x.i + infections - recoveries, x.r + recoveries};
}

std::vector<SirState> sir_difference_run(double beta, double gamma, double n, double i0, std::size_t steps) {
  if (!(i0 >= 0.0 && i0 <= n)) throw Error(ErrorCode::ConfigError, "initial infected must lie in [0, N]");
  std::vector<SirState> out{{n - i0, i0, 0.0}};
  for (std::size_t t = 0; t < steps; ++t) out.push_back(sir_difference_step(out.back(), beta, gamma, n));
  return out;
}

double final_size_solve(double beta, double gamma) {
  if (!(beta > 0.0) || !(gamma > 0.0)) throw Error(ErrorCode::ConfigError, "beta and gamma must be > 0");
  if (beta <= gamma) return 0.0;
  const double r0 = beta / gamma;
  // z -> 1 - exp(-r0 z) is a contraction near the nontrivial root; start at 1.
  double z = 1.0;
  for (int it = 0; it < 100000; ++it) {
    const double next = 1.0 - std::exp(-r0 * z);
    if (std::abs(next - z) < 1e-12) return next;
    z = next;
  }
  throw Error(ErrorCode::NumericalError, "final size iteration did not converge");
}

double quarantine_r0(double beta, double gamma, double tpr) {
  if (!(beta > 0.0) || !(gamma > 0.0)) throw Error(ErrorCode::ConfigError, "beta and gamma must be > 0");
  if (!(tpr >= 0.0 && tpr <= 1.0)) throw Error(ErrorCode::ConfigError, "tpr must lie in [0, 1]");
  return beta / (gamma + tpr * beta);
}

double quarantine_tpr_threshold(double beta, double gamma) {
  if (!(beta > 0.0) || !(gamma > 0.0)) throw Error(ErrorCode::ConfigError, "beta and gamma must be > 0");
  return std::max(0.0, (beta - gamma) / beta);
}

void SirConfig::validate() const {
  if (agents == 0) throw Error(ErrorCode::ConfigError, "need at least one agent");
  if (!(p_restore >= 0.0 && p_restore <= 1.0)) throw Error(ErrorCode::ConfigError, "p_restore must lie in [0, 1]");
  if (k == 0) throw Error(ErrorCode::ConfigError, "k must be >= 1");
}

double SirTrajectory::final_spread() const {
  if (steps.empty() || agents == 0) return 0.0;
  return static_cast<double>(steps.back().i + steps.back().r) / static_cast<double>(agents);
}

std::string mutate_poison_text(const std::string& text, const SynonymTable& table, Rng& rng) {
  const auto& notes = fixtures::restore_notes();
  auto words = tokenize(text);
  std::vector<std::size_t> swappable;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (table.contains(words[i])) swappable.push_back(i);
  }
  const std::string& note = pick(notes, rng);
  if (!swappable.empty()) {
    const std::size_t at = swappable[uniform_index(rng, swappable.size())];
    const auto alts = table.alternatives(words[at]);
    words[at] = pick(alts, rng);
  }
  return join(words) + " " + note;
}

SirTrajectory sir_agent_sim(const SirConfig& cfg, MemoryStore store, const std::vector<MemoryEntry>& poison,
                            const std::vector<Embedding>& queries, const Embedder& embedder,
                            const WriteFilter& filter) {
  cfg.validate();
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "agents need a query pool");
  if (poison.empty()) throw Error(ErrorCode::EmptyInput, "no poison entries");
  store.set_k(std::min(cfg.k, std::max<std::size_t>(1, store.size() + poison.size())));

  SirTrajectory tr;
  tr.agents = cfg.agents;
  const std::size_t initial = std::min(cfg.initial_poison, poison.size());
  for (std::size_t i = 0; i < initial; ++i) {
    if (filter && filter(poison[i])) {
      ++tr.quarantined;
    } else {
      store.insert(poison[i]);
      ++tr.initial_written;
    }
  }

  // For each infected agent, the poison entry that infected it.
  std::vector<std::optional<std::size_t>> infected_by(cfg.agents);
  std::size_t infected = 0;
  tr.steps.push_back({0, cfg.agents, 0, 0, 0, tr.quarantined});
  const SynonymTable& table = embedder.table();

  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    std::vector<std::size_t> newly;
    for (std::size_t a = 0; a < cfg.agents; ++a) {
      Rng rng = make_rng(hash_combine(cfg.seed, a), t);
      const Embedding& q = queries[uniform_index(rng, queries.size())];
      const bool restore = bernoulli(rng, cfg.p_restore);
      const std::uint64_t mutation_seed = rng();
      if (infected_by[a]) {
        if (!restore) continue;
        Rng mrng = make_rng(mutation_seed);
        const MemoryEntry& src = store.at(*infected_by[a]);
        MemoryEntry v;
        v.id = "sec" + std::to_string(a) + "_" + std::to_string(t);
        v.text = mutate_poison_text(src.text, table, mrng);
        v.embedding = embedder.embed(v.text);
        v.provenance = src.provenance;
        v.category = src.category;
        if (filter && filter(v)) {
          ++tr.quarantined;
        } else {
          store.insert(std::move(v));
          ++tr.secondary_entries;
        }
        continue;
      }
      if (store.empty()) continue;
      for (const auto& h : store.retrieve(q, std::min(store.k(), store.size()))) {
        if (store.at(h.index).provenance.poison) {
          newly.push_back(a);
          infected_by[a] = h.index;
          break;
        }
      }
    }
    infected += newly.size();
    const double frac = static_cast<double>(infected) / static_cast<double>(cfg.agents);
    if (!tr.step_to_50 && frac >= 0.5) tr.step_to_50 = t;
    if (!tr.step_to_90 && frac >= 0.9) tr.step_to_90 = t;
    tr.steps.push_back({t, cfg.agents - infected, infected, 0, tr.secondary_entries, tr.quarantined});
  }
  return tr;
}

void write_trajectory_csv(std::ostream& os, const SirTrajectory& t) {
  os << "step,S,I,R,secondary_entries,quarantined\n";
  for (const auto& s : t.steps) {
    os << s.step << ',' << s.s << ',' << s.i << ',' << s.r << ',' << s.secondary_entries << ',' << s.quarantined
       << '\n';
  }
}

CompoundExposure compound_exposure(double asr_r, std::size_t queries_per_session, std::vector<double> targets) {
  if (!(asr_r >= 0.0 && asr_r <= 1.0)) throw Error(ErrorCode::ConfigError, "asr_r must lie in [0, 1]");
  if (queries_per_session == 0) throw Error(ErrorCode::ConfigError, "need at least one query per session");
  CompoundExposure ce{asr_r, queries_per_session, std::move(targets), {}, std::nullopt};
  const double q = static_cast<double>(queries_per_session);
  for (double p : ce.targets) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::ConfigError, "targets must lie in (0, 1)");
    if (asr_r == 0.0) {
      ce.sessions.push_back(std::nullopt);
    } else if (asr_r == 1.0) {
      ce.sessions.push_back(1);
    } else {
      const double v = std::log(1.0 - p) / (q * std::log(1.0 - asr_r));
      ce.sessions.push_back(static_cast<std::size_t>(std::max(1.0, std::ceil(v - 1e-12))));
    }
  }
  if (asr_r > 0.0) ce.expected_sessions = 1.0 / (1.0 - std::pow(1.0 - asr_r, q));
  return ce;
}

}  // namespace memshield
