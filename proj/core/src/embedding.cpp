#include "memshield/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "memshield/error.hpp"
#include "memshield/fixtures.hpp"
#include "memshield/random.hpp"

namespace memshield {

Embedding Embedding::normalized(std::vector<double> values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::ConfigError, "embedding dimension must be at least 2");
  }
  const double n = norm(values);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::NumericalError, "cannot normalize a zero or non-finite vector");
  }
  for (double& x : values) x /= n;
  return Embedding(std::move(values));
}

Embedding Embedding::operator-() const {
  std::vector<double> v = values_;
  for (double& x : v) x = -x;
  return Embedding(std::move(v));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosim(const Embedding& a, const Embedding& b) {
  return std::clamp(dot(a.values(), b.values()), -1.0, 1.0);
}

double distance(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "distance between unequal dimensions");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SynonymTable

SynonymTable::SynonymTable(std::vector<std::vector<std::string>> classes) : classes_(std::move(classes)) {
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    auto& cls = classes_[c];
    for (auto& w : cls) {
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char ch) { return std::tolower(ch); });
    }
    if (cls.size() < 2) {
      throw Error(ErrorCode::ConfigError, "synonym class " + std::to_string(c) + " has fewer than two words");
    }
    for (const auto& w : cls) {
      if (w.empty()) throw Error(ErrorCode::ConfigError, "empty word in synonym class " + std::to_string(c));
      auto [it, inserted] = index_.emplace(w, c);
      if (!inserted) {
        throw Error(ErrorCode::ConfigError, "word '" + w + "' appears in more than one synonym class");
      }
    }
  }
}

std::shared_ptr<const SynonymTable> SynonymTable::default_table() {
  static const auto kTable = std::make_shared<const SynonymTable>(fixtures::synonym_classes());
  return kTable;
}

SynonymTable SynonymTable::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open synonym table " + path.string());
  std::vector<std::vector<std::string>> classes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto words = tokenize(line);
    if (words.empty() || words.front().starts_with('#')) continue;
    if (words.size() < 2) throw ParseError(lineno, "synonym class needs at least two words");
    classes.push_back(std::move(words));
  }
  return SynonymTable(std::move(classes));
}

std::size_t SynonymTable::pair_count() const noexcept {
  std::size_t n = 0;
  for (const auto& cls : classes_) n += cls.size() * (cls.size() - 1) / 2;
  return n;
}

bool SynonymTable::contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }

std::optional<std::size_t> SynonymTable::class_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& SynonymTable::canonical(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return word;
  return classes_[it->second].front();
}

std::vector<std::string> SynonymTable::alternatives(std::string_view word) const {
  std::vector<std::string> out;
  auto c = class_of(word);
  if (!c) return out;
  for (const auto& w : classes_[*c]) {
    if (w != word) out.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Embedder

void EmbedderConfig::validate() const {
  if (dimension < 2) throw Error(ErrorCode::ConfigError, "dimension must be >= 2");
  if (ngram_order < 1) throw Error(ErrorCode::ConfigError, "ngram_order must be >= 1");
  if (!(synonym_jitter >= 0.0 && synonym_jitter <= 0.1)) {
    throw Error(ErrorCode::ConfigError, "synonym_jitter must lie in [0, 0.1]");
  }
}

Embedder::Embedder(EmbedderConfig cfg, std::shared_ptr<const SynonymTable> table)
    : cfg_(cfg), table_(table ? std::move(table) : SynonymTable::default_table()) {
  cfg_.validate();
}

void Embedder::add_token(const std::string& token, std::vector<double>& acc) const {
  const std::string padded = "<" + token + ">";
  const std::size_t n = cfg_.ngram_order;
  const std::size_t count = padded.size() >= n ? padded.size() - n + 1 : 1;
  const std::size_t len = std::min(n, padded.size());
  const std::size_t d = cfg_.dimension;
  for (std::size_t s = 0; s < count; ++s) {
    const std::uint64_t h = hash_string(std::string_view(padded).substr(s, len), cfg_.seed);
    for (std::size_t block = 0; block * 64 < d; ++block) {
      const std::uint64_t bits = splitmix64(h + block * 0x9E3779B97F4A7C15ULL);
      const std::size_t hi = std::min<std::size_t>(64, d - block * 64);
      for (std::size_t j = 0; j < hi; ++j) {
        acc[block * 64 + j] += ((bits >> j) & 1ULL) ? 1.0 : -1.0;
      }
    }
  }
}

Embedding Embedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "cannot embed empty text");

  std::vector<double> acc(cfg_.dimension, 0.0);
  for (const auto& tok : tokens) {
    add_token(cfg_.canonicalize_synonyms ? table_->canonical(tok) : tok, acc);
  }
  Embedding base = Embedding::normalized(std::move(acc));
  if (cfg_.synonym_jitter == 0.0) return base;

  const double half = cfg_.synonym_jitter / 2.0;
  std::vector<double> out(cfg_.dimension, 0.0);
  std::size_t listed = 0;
  for (const auto& tok : tokens) {
    if (!table_->contains(tok)) continue;
    ++listed;
    Rng rng = make_rng(hash_string(tok, cfg_.seed), 0x7177E5ULL);
    std::vector<double> j(cfg_.dimension);
    for (double& x : j) x = standard_normal(rng);
    const double jn = norm(j);
    for (std::size_t i = 0; i < j.size(); ++i) out[i] += half * j[i] / jn;
  }
  const double scale = 1.0 + static_cast<double>(listed) * half;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * base[i];
  return Embedding::normalized(std::move(out));
}

// ---------------------------------------------------------------------------
// External vectors

ExternalVectors load_external_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open vector file " + path.string());
  ExternalVectors out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (!line.starts_with("dim=")) throw ParseError(lineno, "expected header 'dim=<d>'");
      try {
        std::size_t used = 0;
        const long d = std::stol(line.substr(4), &used);
        if (used != line.size() - 4 || d < 2) throw std::invalid_argument("bad dim");
        out.dimension = static_cast<std::size_t>(d);
      } catch (const std::exception&) {
        throw ParseError(lineno, "invalid dimension in header");
      }
      have_header = true;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(lineno, "expected '<id>\\t<values>'");
    std::string id = line.substr(0, tab);
    std::istringstream vs(line.substr(tab + 1));
    std::vector<double> values;
    std::string tok;
    while (vs >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
        throw ParseError(lineno, "invalid number '" + tok + "'");
      }
      values.push_back(v);
    }
    if (values.size() != out.dimension) {
      throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(lineno) + ": expected " +
                                                    std::to_string(out.dimension) + " values, got " +
                                                    std::to_string(values.size()));
    }
    Embedding e;
    try {
      e = Embedding::normalized(std::move(values));
    } catch (const Error&) {
      throw ParseError(lineno, "zero vector for id '" + id + "'");
    }
    if (!out.vectors.emplace(id, std::move(e)).second) {
      throw ParseError(lineno, "duplicate id '" + id + "'");
    }
  }
  if (!have_header) throw ParseError(lineno + 1, "missing 'dim=<d>' header");
  return out;
}

}  // namespace memshield
