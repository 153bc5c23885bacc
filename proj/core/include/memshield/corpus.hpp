#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memshield/embedding.hpp"
#include "memshield/fixtures.hpp"
#include "memshield/memory_store.hpp"
#include "memshield/random.hpp"

namespace memshield {

struct CorpusSpec {
  std::size_t size = 1000;
  std::vector<fixtures::CategoryFixture> categories = fixtures::categories();
  std::size_t victim_category = fixtures::victim_category_index();
  std::size_t victim_queries = 100;
  std::size_t benign_queries = 100;
  std::size_t k = 5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct QuerySet {
  std::vector<std::string> victim;
  std::vector<std::string> benign;
  std::optional<std::string> trigger;
  std::vector<std::string> triggered;  // victim[i] + " " + trigger, empty without a trigger

  /// Victim queries in the requested protocol.
  const std::vector<std::string>& victims(bool use_triggered) const;
};

/// Replaces every "{slot}" with a seeded draw from the named fixture pool.
std::string fill_template(const std::string& tpl, Rng& rng);

/// Entry `index` of the corpus for `seed`. Depends only on (seed, index), so
/// a larger corpus always contains the smaller one as a prefix.
MemoryEntry generate_entry(const CorpusSpec& spec, std::size_t index, const Embedder& embedder,
                           const std::string& id_prefix = "m");

MemoryStore generate_corpus(const CorpusSpec& spec, const Embedder& embedder);

/// Fresh benign entries from the same distribution, disjoint in index range
/// from any generated corpus. Used as held-out control streams.
std::vector<MemoryEntry> generate_holdout(const CorpusSpec& spec, std::size_t count, const Embedder& embedder,
                                          std::uint64_t stream);

QuerySet generate_queries(const CorpusSpec& spec, const std::optional<std::string>& trigger = std::nullopt);

/// Reads a snapshot file and pads with synthetic entries up to `pad_to`.
MemoryStore ingest_corpus(const std::filesystem::path& path, std::optional<std::size_t> pad_to,
                          const CorpusSpec& spec, const Embedder& embedder);

/// Mean embedding (not renormalized) of every entry in `category`.
std::vector<double> category_centroid(const MemoryStore& store, const std::string& category);

}  // namespace memshield
