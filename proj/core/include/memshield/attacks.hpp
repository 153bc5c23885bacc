#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memshield/corpus.hpp"
#include "memshield/embedding.hpp"
#include "memshield/memory_store.hpp"

namespace memshield {

class MemSad;

struct AttackConfig {
  AttackFamily family = AttackFamily::AgentPoison;
  std::size_t n_base = 0;  // 0 selects the family default (5 / 10 / 15)
  std::size_t trigger_length = 4;
  std::size_t centroid_tokens = 8;
  std::size_t trigger_sweeps = 3;
  double p0 = 0.98;
  double lambda = 0.10;
  std::uint64_t seed = 1;

  std::size_t effective_n_base() const;
  void validate() const;
};

/// Modelled action-success constant for each family (Assumption 1 wiring).
double modelled_asr_a(AttackFamily family);

struct PoisonSet {
  AttackFamily family = AttackFamily::AgentPoison;
  std::vector<MemoryEntry> entries;
  std::optional<std::string> trigger;
  double modelled_asr_a = 0.0;
  std::size_t attempted = 0;               // chain length for MINJA, entries otherwise
  std::vector<std::size_t> substitutions;  // filled by synonym_adapt
  std::vector<double> objective_trace;     // AgentPoison trigger objective per accepted step
  std::vector<std::string> trigger_trace;  // the trigger after each of those steps
};

/// Mean cosine between every triggered query and every passage with the trigger appended.
double trigger_objective(const std::vector<std::string>& victims, const std::vector<std::string>& passages,
                         const std::vector<std::string>& trigger, const Embedder& embedder);

/// The most frequent victim-query tokens (ties broken alphabetically).
std::vector<std::string> centroid_tokens(const std::vector<std::string>& victims, std::size_t count);

/// Greedy coordinate search over `vocab`. `trace` receives the objective
/// after initialization and after each accepted improvement, `triggers` the
/// matching trigger strings.
std::vector<std::string> greedy_trigger_search(const std::vector<std::string>& victims,
                                               const std::vector<std::string>& passages,
                                               const std::vector<std::string>& vocab, std::size_t length,
                                               std::size_t sweeps, std::uint64_t seed, const Embedder& embedder,
                                               std::vector<double>* trace = nullptr,
                                               std::vector<std::string>* triggers = nullptr);

PoisonSet agentpoison_generate(const MemoryStore& store, const QuerySet& victims, const AttackConfig& cfg,
                               const Embedder& embedder,
                               const std::vector<std::string>& trigger_vocab = fixtures::trigger_vocabulary());

PoisonSet minja_generate(const MemoryStore& store, const QuerySet& victims, const AttackConfig& cfg,
                         const Embedder& embedder);

PoisonSet injecmem_generate(const MemoryStore& store, const QuerySet& victims, const AttackConfig& cfg,
                            const Embedder& embedder,
                            const std::vector<std::string>& anchors = fixtures::injecmem_anchor_templates());

PoisonSet generate_poison(const MemoryStore& store, const QuerySet& victims, const AttackConfig& cfg,
                          const Embedder& embedder);

/// Expected MINJA commits over `steps` chain positions: sum p0 * exp(-lambda * i).
double minja_expected_commits(double p0, double lambda, std::size_t steps);

struct AdaptReport {
  PoisonSet adapted;
  std::vector<std::size_t> substitutions;
  std::vector<double> score_before, score_after;
  std::vector<bool> flagged_before, flagged_after;
  std::vector<double> max_cosim_shift;  // largest |delta cosim| to any rank-constraint query
};

/// Greedy word-level synonym substitution that lowers the detector score
/// while the set of constraint queries retrieving the entry at depth k stays
/// exactly the same. Stops per entry once unflagged or when no move improves.
AdaptReport synonym_adapt(const PoisonSet& poison, const MemSad& detector, const SynonymTable& table,
                          const MemoryStore& store, const std::vector<Embedding>& constraint_queries,
                          std::size_t k, const Embedder& embedder);

}  // namespace memshield
