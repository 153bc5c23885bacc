#include "memshield/corpus.hpp"

#include <set>

#include "memshield/error.hpp"

namespace memshield {

namespace {

constexpr std::uint64_t kVictimStream = 0xA11CE;
constexpr std::uint64_t kBenignStream = 0xB0B;
constexpr std::size_t kHoldoutBase = 1'000'000;

std::string pad_index(std::size_t i) {
  std::string s = std::to_string(i);
  if (s.size() < 6) s.insert(0, 6 - s.size(), '0');
  return s;
}

}  // namespace

void CorpusSpec::validate() const {
  if (categories.empty()) throw Error(ErrorCode::ConfigError, "no categories");
  if (size < categories.size()) {
    throw Error(ErrorCode::ConfigError, "corpus size must be at least the number of categories (" +
                                            std::to_string(categories.size()) + ")");
  }
  if (victim_category >= categories.size()) throw Error(ErrorCode::ConfigError, "victim category out of range");
  if (k == 0) throw Error(ErrorCode::ConfigError, "k must be >= 1");
  for (const auto& c : categories) {
    if (c.templates.empty()) throw Error(ErrorCode::ConfigError, "category '" + c.name + "' has no templates");
  }
}

const std::vector<std::string>& QuerySet::victims(bool use_triggered) const {
  if (use_triggered) {
    if (!trigger) throw Error(ErrorCode::ConfigError, "triggered protocol needs an attack trigger");
    return triggered;
  }
  return victim;
}

std::string fill_template(const std::string& tpl, Rng& rng) {
  std::string out;
  out.reserve(tpl.size() + 32);
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const auto open = tpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tpl, pos);
      break;
    }
    const auto close = tpl.find('}', open);
    if (close == std::string::npos) throw Error(ErrorCode::ConfigError, "unterminated slot in '" + tpl + "'");
    out.append(tpl, pos, open - pos);
    out += pick(fixtures::pool(tpl.substr(open + 1, close - open - 1)), rng);
    pos = close + 1;
  }
  return out;
}

MemoryEntry generate_entry(const CorpusSpec& spec, std::size_t index, const Embedder& embedder,
                           const std::string& id_prefix) {
  const auto& cat = spec.categories[index % spec.categories.size()];
  Rng rng = make_rng(spec.seed, hash_combine(0xC0FFEE, index));
  const auto& tpl = pick(cat.templates, rng);
  MemoryEntry e;
  e.id = id_prefix + pad_index(index);
  e.text = fill_template(tpl, rng);
  e.embedding = embedder.embed(e.text);
  e.provenance = Provenance::benign();
  e.category = cat.name;
  return e;
}

MemoryStore generate_corpus(const CorpusSpec& spec, const Embedder& embedder) {
  spec.validate();
  MemoryStore store(spec.k);
  for (std::size_t i = 0; i < spec.size; ++i) store.insert(generate_entry(spec, i, embedder));
  return store;
}

std::vector<MemoryEntry> generate_holdout(const CorpusSpec& spec, std::size_t count, const Embedder& embedder,
                                          std::uint64_t stream) {
  spec.validate();
  std::vector<MemoryEntry> out;
  out.reserve(count);
  const std::size_t base = kHoldoutBase * (1 + stream % 1000);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_entry(spec, base + i, embedder, "h"));
  return out;
}

namespace {

std::vector<std::string> sample_distinct(const std::vector<std::string>& templates, std::size_t count, Rng& rng) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 50 * count + 100;
  while (out.size() < count && attempts < max_attempts) {
    ++attempts;
    std::string q = fill_template(pick(templates, rng), rng);
    if (seen.insert(q).second) out.push_back(std::move(q));
  }
  // Small template spaces may not have `count` distinct strings; allow repeats.
  while (out.size() < count) out.push_back(fill_template(pick(templates, rng), rng));
  return out;
}

}  // namespace

QuerySet generate_queries(const CorpusSpec& spec, const std::optional<std::string>& trigger) {
  spec.validate();
  QuerySet qs;
  Rng vrng = make_rng(spec.seed, kVictimStream);
  Rng brng = make_rng(spec.seed, kBenignStream);
  qs.victim = sample_distinct(fixtures::victim_query_templates(), spec.victim_queries, vrng);
  qs.benign = sample_distinct(fixtures::benign_query_templates(), spec.benign_queries, brng);
  if (trigger) {
    qs.trigger = *trigger;
    qs.triggered.reserve(qs.victim.size());
    for (const auto& q : qs.victim) qs.triggered.push_back(trigger->empty() ? q : q + " " + *trigger);
  }
  return qs;
}

MemoryStore ingest_corpus(const std::filesystem::path& path, std::optional<std::size_t> pad_to,
                          const CorpusSpec& spec, const Embedder& embedder) {
  MemoryStore store = read_snapshot(path, embedder, spec.k);
  if (pad_to) {
    std::size_t i = 0;
    while (store.size() < *pad_to) {
      auto e = generate_entry(spec, i++, embedder, "pad");
      if (!store.contains(e.id)) store.insert(std::move(e));
    }
  }
  return store;
}

std::vector<double> category_centroid(const MemoryStore& store, const std::string& category) {
  std::vector<double> c;
  std::size_t n = 0;
  for (const auto& e : store.entries()) {
    if (e.category != category) continue;
    if (c.empty()) c.assign(e.embedding.dim(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += e.embedding[i];
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NotFound, "no entries in category '" + category + "'");
  for (double& x : c) x /= static_cast<double>(n);
  return c;
}

}  // namespace memshield
