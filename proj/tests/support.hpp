#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "memshield/embedding.hpp"
#include "memshield/error.hpp"
#include "memshield/memory_store.hpp"
#include "memshield/random.hpp"

#define EXPECT_CODE(stmt, err)                                       \
  do {                                                               \
    try {                                                            \
      stmt;                                                          \
      ADD_FAILURE() << "expected " << ::memshield::to_string(err);   \
    } catch (const ::memshield::Error& e) {                          \
      EXPECT_EQ(e.code(), err) << e.what();                          \
    }                                                                \
  } while (0)

namespace memshield::testing {

inline std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "memshield_tests";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << content;
  return p;
}

// Hand-rolled generators for the property tests.

inline Embedding random_embedding(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  for (double& x : v) x = standard_normal(rng);
  return Embedding::normalized(std::move(v));
}

/// Unit vector near `center`: center * weight + noise, renormalized.
inline Embedding near(const Embedding& center, double weight, Rng& rng) {
  std::vector<double> v(center.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = weight * center[i] + standard_normal(rng) / std::sqrt(v.size());
  return Embedding::normalized(std::move(v));
}

inline std::string random_sentence(Rng& rng, std::size_t min_words = 3, std::size_t max_words = 12) {
  static const std::vector<std::string> words = {
      "buy",    "purchase", "milk",   "report", "send",  "mail",     "the",     "team",    "budget",
      "review", "check",    "coffee", "prefers", "likes", "settings", "server", "config",  "update",
      "change", "meeting",  "friday", "noon",   "plan",  "store",    "invoice", "project", "launch"};
  const std::size_t n = min_words + uniform_index(rng, max_words - min_words + 1);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pick(words, rng));
  return join(out);
}

inline MemoryEntry entry(std::string id, Embedding e, bool poison = false) {
  MemoryEntry m;
  m.id = std::move(id);
  m.text = m.id;
  m.embedding = std::move(e);
  if (poison) m.provenance = Provenance::poisoned(AttackFamily::Minja);
  return m;
}

/// Store of n random entries named r000..; deterministic per seed.
inline MemoryStore random_store(std::size_t n, std::size_t d, std::uint64_t seed, std::size_t k = 5) {
  Rng rng = make_rng(seed, 1);
  MemoryStore s(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::string id = std::to_string(i);
    id.insert(0, 3 - std::min<std::size_t>(3, id.size()), '0');
    s.insert(entry("r" + id, random_embedding(d, rng)));
  }
  return s;
}

}  // namespace memshield::testing
