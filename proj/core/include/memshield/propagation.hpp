#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "memshield/embedding.hpp"
#include "memshield/memory_store.hpp"
#include "memshield/random.hpp"

namespace memshield {

struct SirState {
  double s;
  double i;
  double r;
};

/// One step of the deterministic S/I/R difference equations.
/// Throws ConfigError unless s + i + r == n (to 1e-9 relative).
SirState sir_difference_step(const SirState& x, double beta, double gamma, double n);

/// Runs `steps` difference steps from (n - i0, i0, 0); returns steps + 1 states.
std::vector<SirState> sir_difference_run(double beta, double gamma, double n, double i0, std::size_t steps);

/// Attack fraction z solving 1 - z = exp(-(beta/gamma) z); 0 when beta <= gamma.
double final_size_solve(double beta, double gamma);

/// beta / (gamma + tpr * beta).
double quarantine_r0(double beta, double gamma, double tpr);
/// Smallest TPR with R0 <= 1: (beta - gamma) / beta, or 0 when already subcritical.
double quarantine_tpr_threshold(double beta, double gamma);

struct SirConfig {
  std::size_t agents = 20;
  double p_restore = 0.30;
  std::size_t steps = 30;
  std::size_t initial_poison = 5;
  std::size_t k = 5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Returns true when the entry should be quarantined instead of written.
using WriteFilter = std::function<bool(const MemoryEntry&)>;

struct SirStep {
  std::size_t step;
  std::size_t s, i, r;
  std::size_t secondary_entries;
  std::size_t quarantined;
};

struct SirTrajectory {
  std::vector<SirStep> steps;  // step 0 is the initial state
  std::size_t agents = 0;
  std::size_t initial_written = 0;
  std::size_t secondary_entries = 0;
  std::size_t quarantined = 0;
  std::optional<std::size_t> step_to_50;  // first step with >= 50% infected
  std::optional<std::size_t> step_to_90;

  double final_spread() const;
};

/// Agent-level simulation over a shared store. The first cfg.initial_poison
/// poison entries pass through `filter` at write time. Each step every agent
/// draws one query from `queries`; a poison entry in its top-k infects it for
/// the rest of the run. Infected agents re-store a mutated poison variant with
/// probability p_restore; the variant also passes through `filter`. Query and
/// re-store draws depend only on (seed, agent, step), so two runs with the same
/// seed and different filters see the same query stream.
SirTrajectory sir_agent_sim(const SirConfig& cfg, MemoryStore store, const std::vector<MemoryEntry>& poison,
                            const std::vector<Embedding>& queries, const Embedder& embedder,
                            const WriteFilter& filter = {});

/// Appends a restore note and swaps one synonym for an alternative.
std::string mutate_poison_text(const std::string& text, const SynonymTable& table, Rng& rng);

void write_trajectory_csv(std::ostream& os, const SirTrajectory& t);

struct CompoundExposure {
  double asr_r;
  std::size_t queries_per_session;
  std::vector<double> targets;
  std::vector<std::optional<std::size_t>> sessions;  // nullopt: never reached
  std::optional<double> expected_sessions;           // nullopt: infinite
};

/// Sessions needed until compromise probability reaches each target, and the
/// expected number of sessions until the first compromise.
CompoundExposure compound_exposure(double asr_r, std::size_t queries_per_session,
                                   std::vector<double> targets = {0.5, 0.9, 0.95});

}  // namespace memshield
