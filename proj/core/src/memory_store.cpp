#include "memshield/memory_store.hpp"

#include <algorithm>
#include <fstream>

#include "memshield/error.hpp"

namespace memshield {

std::string_view to_string(AttackFamily f) {
  switch (f) {
    case AttackFamily::AgentPoison: return "agentpoison";
    case AttackFamily::Minja: return "minja";
    case AttackFamily::InjecMem: return "injecmem";
  }
  return "unknown";
}

AttackFamily parse_attack_family(std::string_view s) {
  if (s == "agentpoison") return AttackFamily::AgentPoison;
  if (s == "minja") return AttackFamily::Minja;
  if (s == "injecmem") return AttackFamily::InjecMem;
  throw Error(ErrorCode::ConfigError, "unknown attack family '" + std::string(s) +
                                          "' (expected agentpoison, minja or injecmem)");
}

std::string Provenance::str() const {
  if (!poison) return "benign";
  return "poison(" + std::string(to_string(family)) + ")";
}

Provenance Provenance::parse(std::string_view s) {
  if (s == "benign") return benign();
  if (s.starts_with("poison(") && s.ends_with(")")) {
    return poisoned(parse_attack_family(s.substr(7, s.size() - 8)));
  }
  throw Error(ErrorCode::ConfigError, "bad provenance '" + std::string(s) + "'");
}

void MemoryStore::set_k(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::ConfigError, "k must be >= 1");
  k_ = k;
}

const MemoryEntry& MemoryStore::get(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorCode::NotFound, "no entry '" + std::string(id) + "'");
  return entries_[it->second];
}

bool MemoryStore::contains(std::string_view id) const { return index_.count(std::string(id)) > 0; }

void MemoryStore::insert(MemoryEntry entry) {
  if (index_.count(entry.id)) throw Error(ErrorCode::DuplicateId, "entry '" + entry.id + "' already stored");
  if (!entries_.empty() && entry.embedding.dim() != entries_.front().embedding.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "entry '" + entry.id + "' has a different dimension");
  }
  index_.emplace(entry.id, entries_.size());
  entries_.push_back(std::move(entry));
}

void MemoryStore::remove(std::string_view id) {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorCode::NotFound, "no entry '" + std::string(id) + "'");
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(it->second));
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].id, i);
}

std::vector<Hit> MemoryStore::retrieve(const Embedding& q, std::size_t k) const {
  if (entries_.empty()) throw Error(ErrorCode::EmptyStore, "retrieve on an empty store");
  if (k == 0 || k > entries_.size()) {
    throw Error(ErrorCode::ConfigError,
                "k=" + std::to_string(k) + " outside [1, " + std::to_string(entries_.size()) + "]");
  }
  std::vector<Hit> hits;
  hits.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) hits.push_back({i, cosim(q, entries_[i].embedding)});
  auto better = [this](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return entries_[a.index].id < entries_[b.index].id;
  };
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
  hits.resize(k);
  return hits;
}

std::size_t MemoryStore::rank(const Embedding& q, std::string_view id) const {
  const MemoryEntry& target = get(id);
  const double ts = cosim(q, target.embedding);
  std::size_t r = 1;
  for (const auto& e : entries_) {
    if (e.id == target.id) continue;
    const double s = cosim(q, e.embedding);
    if (s > ts || (s == ts && e.id < target.id)) ++r;
  }
  return r;
}

std::size_t MemoryStore::rank_of(const Embedding& q, std::string_view id, const Embedding& emb) const {
  const double ts = cosim(q, emb);
  std::size_t r = 1;
  for (const auto& e : entries_) {
    if (e.id == id) continue;
    const double s = cosim(q, e.embedding);
    if (s > ts || (s == ts && e.id < id)) ++r;
  }
  return r;
}

void write_snapshot(const MemoryStore& store, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::NotFound, "cannot write " + path.string());
  out << "# id\tcategory\tprovenance\ttext\n";
  for (const auto& e : store.entries()) {
    out << e.id << '\t' << (e.category.empty() ? "-" : e.category) << '\t' << e.provenance.str() << '\t' << e.text
        << '\n';
  }
}

MemoryStore read_snapshot(const std::filesystem::path& path, const Embedder& embedder, std::size_t k) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open corpus " + path.string());
  MemoryStore store(k);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int f = 0; f < 3; ++f) {
      const auto tab = line.find('\t', start);
      if (tab == std::string::npos) throw ParseError(lineno, "expected 4 tab-separated fields");
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fields.push_back(line.substr(start));
    if (fields[0].empty()) throw ParseError(lineno, "empty id");
    MemoryEntry e;
    e.id = fields[0];
    e.category = fields[1] == "-" ? "" : fields[1];
    try {
      e.provenance = Provenance::parse(fields[2]);
      e.embedding = embedder.embed(fields[3]);
    } catch (const Error& err) {
      throw ParseError(lineno, err.what());
    }
    e.text = fields[3];
    if (store.contains(e.id)) throw ParseError(lineno, "duplicate id '" + e.id + "'");
    store.insert(std::move(e));
  }
  return store;
}

}  // namespace memshield
