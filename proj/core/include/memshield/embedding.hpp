#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace memshield {

/// Unit-norm dense vector. Construction always renormalizes, so every
/// instance satisfies the norm invariant to rounding.
class Embedding {
 public:
  Embedding() = default;

  /// Normalizes `values`; throws NumericalError on a zero vector and
  /// ConfigError when fewer than two dimensions are given.
  static Embedding normalized(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  Embedding operator-() const;
  bool operator==(const Embedding&) const = default;

 private:
  explicit Embedding(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm(const std::vector<double>& v);

/// Cosine similarity of two unit vectors, i.e. their dot product.
double cosim(const Embedding& a, const Embedding& b);

/// Euclidean distance between two embeddings.
double distance(const Embedding& a, const Embedding& b);

/// Lowercases and splits on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view text);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

/// Word groups with a designated representative (the first member).
class SynonymTable {
 public:
  SynonymTable() = default;

  /// Throws ConfigError if a word appears in more than one class or a class
  /// has fewer than two members.
  explicit SynonymTable(std::vector<std::vector<std::string>> classes);

  /// The built-in table shipped with the fixtures.
  static std::shared_ptr<const SynonymTable> default_table();

  /// One class per line, representative first, whitespace separated.
  /// Blank lines and lines starting with '#' are skipped.
  static SynonymTable from_file(const std::filesystem::path& path);

  const std::vector<std::vector<std::string>>& classes() const noexcept { return classes_; }
  bool empty() const noexcept { return classes_.empty(); }

  /// Number of (word, alternative) substitution pairs, counted unordered.
  std::size_t pair_count() const noexcept;

  bool contains(std::string_view word) const;
  std::optional<std::size_t> class_of(std::string_view word) const;

  /// Representative of the word's class, or the word itself.
  const std::string& canonical(const std::string& word) const;

  /// Other members of the word's class; empty if the word is not listed.
  std::vector<std::string> alternatives(std::string_view word) const;

 private:
  std::vector<std::vector<std::string>> classes_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EmbedderConfig {
  std::size_t dimension = 64;
  std::uint64_t seed = 0x5EEDULL;
  std::size_t ngram_order = 3;
  bool canonicalize_synonyms = true;
  double synonym_jitter = 0.0;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

/// Hashed character n-gram encoder with a seeded random-sign projection.
///
/// Each token is mapped to its synonym representative (when enabled), padded
/// as "<tok>", and split into overlapping n-grams. Every n-gram contributes a
/// +/-1 vector drawn from a hash of (n-gram, seed); the sum is normalized.
///
/// With synonym_jitter e > 0, every token that belongs to a synonym class
/// adds a fixed per-(word, seed) offset of norm e/2 on top of the canonical
/// direction scaled by (1 + c*e/2), c being the number of such tokens. One
/// substitution therefore moves the output by at most e.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig cfg = {}, std::shared_ptr<const SynonymTable> table = nullptr);

  /// Throws EmptyInput when the text has no tokens.
  Embedding embed(std::string_view text) const;

  const EmbedderConfig& config() const noexcept { return cfg_; }
  const SynonymTable& table() const noexcept { return *table_; }
  std::shared_ptr<const SynonymTable> table_ptr() const noexcept { return table_; }

 private:
  void add_token(const std::string& token, std::vector<double>& acc) const;

  EmbedderConfig cfg_;
  std::shared_ptr<const SynonymTable> table_;
};

struct ExternalVectors {
  std::size_t dimension = 0;
  std::map<std::string, Embedding> vectors;
  std::size_t count() const noexcept { return vectors.size(); }
};

/// Reads the "dim=<d>" header followed by "<id>\t<v1> ... <vd>" rows.
/// Vectors are renormalized. Throws ParseError (with line) on malformed rows,
/// DimensionMismatch on a row of the wrong length.
ExternalVectors load_external_vectors(const std::filesystem::path& path);

}  // namespace memshield
