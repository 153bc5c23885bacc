#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memshield/embedding.hpp"

namespace memshield {

enum class AttackFamily { AgentPoison, Minja, InjecMem };

std::string_view to_string(AttackFamily f);
AttackFamily parse_attack_family(std::string_view s);

struct Provenance {
  bool poison = false;
  AttackFamily family = AttackFamily::AgentPoison;  // meaningful only when poison

  static Provenance benign() { return {}; }
  static Provenance poisoned(AttackFamily f) { return {true, f}; }

  /// "benign" or "poison(<family>)".
  std::string str() const;
  static Provenance parse(std::string_view s);
  bool operator==(const Provenance&) const = default;
};

struct MemoryEntry {
  std::string id;
  std::string text;
  Embedding embedding;
  Provenance provenance;
  std::string category;
  std::optional<double> watermark_z;
  bool external_vector = false;  // embedding came from a vector file, not embed(text)
};

struct Hit {
  std::size_t index;
  double score;
};

/// Flat exact inner-product store. Ties in score break by ascending id.
class MemoryStore {
 public:
  MemoryStore() = default;
  explicit MemoryStore(std::size_t k) : k_(k) {}

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t k() const noexcept { return k_; }
  void set_k(std::size_t k);

  const std::vector<MemoryEntry>& entries() const noexcept { return entries_; }
  const MemoryEntry& at(std::size_t i) const { return entries_.at(i); }
  const MemoryEntry& get(std::string_view id) const;
  bool contains(std::string_view id) const;

  /// Throws DuplicateId.
  void insert(MemoryEntry entry);
  /// Throws NotFound.
  void remove(std::string_view id);

  /// Top-k by cosine, descending. Throws EmptyStore, ConfigError if k is 0
  /// or exceeds the store size.
  std::vector<Hit> retrieve(const Embedding& q, std::size_t k) const;
  std::vector<Hit> retrieve(const Embedding& q) const { return retrieve(q, k_); }

  /// 1-based position of `id` in the full descending order. Throws NotFound.
  std::size_t rank(const Embedding& q, std::string_view id) const;

  /// Rank a hypothetical entry (id, embedding) would get if it were inserted.
  std::size_t rank_of(const Embedding& q, std::string_view id, const Embedding& e) const;

 private:
  std::size_t k_ = 5;
  std::vector<MemoryEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Corpus snapshot: "<id>\t<category>\t<provenance>\t<text>" per line,
/// '#' comments. Embeddings are recomputed with `embedder` on load.
void write_snapshot(const MemoryStore& store, const std::filesystem::path& path);
MemoryStore read_snapshot(const std::filesystem::path& path, const Embedder& embedder, std::size_t k = 5);

}  // namespace memshield
