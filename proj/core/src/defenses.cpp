#include "memshield/defenses.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "memshield/error.hpp"
#include "memshield/random.hpp"
#include "memshield/stats.hpp"

namespace memshield {

DefenseVerdict DefenseVerdict::make(std::string defense, double score, double threshold) {
  return DefenseVerdict{std::move(defense), score, threshold, score > threshold};
}

std::string_view to_string(ScoreMode m) { return m == ScoreMode::Max ? "max" : "combined"; }

ScoreMode parse_score_mode(std::string_view s) {
  if (s == "max") return ScoreMode::Max;
  if (s == "combined") return ScoreMode::Combined;
  throw Error(ErrorCode::ConfigError, "unknown scoring mode '" + std::string(s) + "' (expected max or combined)");
}

double history_score(const Embedding& e, const std::deque<Embedding>& history, ScoreMode mode) {
  if (history.empty()) throw Error(ErrorCode::NotCalibrated, "query history is empty");
  double mx = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& q : history) {
    const double c = cosim(e, q);
    mx = std::max(mx, c);
    sum += c;
  }
  if (mode == ScoreMode::Max) return mx;
  return 0.5 * mx + 0.5 * sum / static_cast<double>(history.size());
}

// ---------------------------------------------------------------------------
// MemSad

MemSad::MemSad(Config cfg) : cfg_(cfg) {
  if (cfg_.capacity == 0) throw Error(ErrorCode::ConfigError, "history capacity must be >= 1");
  if (!(cfg_.kappa >= 0.0)) throw Error(ErrorCode::ConfigError, "kappa must be >= 0");
}

MemSad MemSad::calibrated(const std::vector<Embedding>& reference, const std::vector<Embedding>& queries) const {
  if (reference.size() < 2) {
    throw Error(ErrorCode::InsufficientCalibration,
                "need at least 2 reference entries, got " + std::to_string(reference.size()));
  }
  if (queries.empty()) throw Error(ErrorCode::NotCalibrated, "no calibration queries");
  MemSad out(cfg_);
  for (const auto& q : queries) {
    out.history_.push_back(q);
    if (out.history_.size() > cfg_.capacity) out.history_.pop_front();
  }
  out.reference_ = reference;
  out.recompute();
  return out;
}

MemSad MemSad::rolled(const Embedding& query) const {
  require_calibrated();
  MemSad out = *this;
  out.history_.push_back(query);
  while (out.history_.size() > out.cfg_.capacity) out.history_.pop_front();
  out.recompute();
  return out;
}

MemSad MemSad::with_capacity(std::size_t capacity) const {
  if (capacity == 0) throw Error(ErrorCode::ConfigError, "history capacity must be >= 1");
  MemSad out = *this;
  out.cfg_.capacity = capacity;
  while (out.history_.size() > capacity) out.history_.pop_front();
  if (out.calibrated_) out.recompute();
  return out;
}

MemSad MemSad::with_kappa(double kappa) const {
  if (!(kappa >= 0.0)) throw Error(ErrorCode::ConfigError, "kappa must be >= 0");
  MemSad out = *this;
  out.cfg_.kappa = kappa;
  return out;
}

void MemSad::recompute() {
  reference_scores_.clear();
  reference_scores_.reserve(reference_.size());
  for (const auto& r : reference_) reference_scores_.push_back(history_score(r, history_, cfg_.mode));
  mu_ = memshield::mean(reference_scores_);
  sigma_ = sample_stddev(reference_scores_);
  calibrated_ = true;
}

void MemSad::require_calibrated() const {
  if (!calibrated_) throw Error(ErrorCode::NotCalibrated, "MemSAD used before calibration");
}

double MemSad::score(const Embedding& e) const { return history_score(e, history_, cfg_.mode); }

DefenseVerdict MemSad::filter(const Embedding& e) const {
  require_calibrated();
  return DefenseVerdict::make("memsad", score(e), threshold());
}

double MemSad::mu() const {
  require_calibrated();
  return mu_;
}

double MemSad::sigma() const {
  require_calibrated();
  return sigma_;
}

double MemSad::threshold() const {
  require_calibrated();
  return mu_ + cfg_.kappa * sigma_;
}

// ---------------------------------------------------------------------------
// MemSAD+

namespace {

void add_ngrams(std::string_view text, std::size_t n, CharDistribution& counts, double& total) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lowered.size() < n) {
    if (!lowered.empty()) {
      counts[lowered] += 1.0;
      total += 1.0;
    }
    return;
  }
  for (std::size_t i = 0; i + n <= lowered.size(); ++i) {
    counts[lowered.substr(i, n)] += 1.0;
    total += 1.0;
  }
}

void normalize(CharDistribution& d, double total) {
  if (total <= 0.0) return;
  for (auto& [k, v] : d) v /= total;
}

}  // namespace

CharDistribution char_ngrams(std::string_view text, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::ConfigError, "n-gram order must be >= 1");
  CharDistribution d;
  double total = 0.0;
  add_ngrams(text, n, d, total);
  normalize(d, total);
  return d;
}

CharDistribution char_ngrams(const std::vector<std::string>& texts, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::ConfigError, "n-gram order must be >= 1");
  CharDistribution d;
  double total = 0.0;
  for (const auto& t : texts) add_ngrams(t, n, d, total);
  normalize(d, total);
  return d;
}

double jensen_shannon(const CharDistribution& p, const CharDistribution& q) {
  // Walk both sorted maps once; terms with zero mass vanish.
  auto term = [](double a, double m) { return a > 0.0 ? a * std::log2(a / m) : 0.0; };
  double js = 0.0;
  auto ip = p.begin();
  auto iq = q.begin();
  while (ip != p.end() || iq != q.end()) {
    double a = 0.0, b = 0.0;
    if (iq == q.end() || (ip != p.end() && ip->first < iq->first)) {
      a = (ip++)->second;
    } else if (ip == p.end() || iq->first < ip->first) {
      b = (iq++)->second;
    } else {
      a = (ip++)->second;
      b = (iq++)->second;
    }
    const double m = 0.5 * (a + b);
    js += 0.5 * term(a, m) + 0.5 * term(b, m);
  }
  return std::clamp(js, 0.0, 1.0);
}

MemSadPlus::MemSadPlus(MemSad semantic, const std::vector<std::string>& baseline_texts,
                       const std::vector<std::string>& calibration_texts, double q, std::size_t n)
    : semantic_(std::move(semantic)), baseline_(char_ngrams(baseline_texts, n)), n_(n) {
  if (baseline_.empty()) throw Error(ErrorCode::NotCalibrated, "empty baseline for character distribution");
  if (calibration_texts.size() < 2) throw Error(ErrorCode::InsufficientCalibration, "need >= 2 calibration texts");
  // Short texts diverge more from any corpus-wide distribution, so the
  // expected divergence is regressed on log length and only the excess is tested.
  std::vector<double> xs, ds;
  for (const auto& t : calibration_texts) {
    xs.push_back(log_length(t));
    ds.push_back(char_divergence(t));
  }
  const double mx = mean(xs), md = mean(ds);
  double sxx = 0.0, sxd = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxd += (xs[i] - mx) * (ds[i] - md);
  }
  slope_ = sxx > 0.0 ? sxd / sxx : 0.0;
  intercept_ = md - slope_ * mx;
  std::vector<double> excess;
  for (std::size_t i = 0; i < xs.size(); ++i) excess.push_back(ds[i] - intercept_ - slope_ * xs[i]);
  char_threshold_ = quantile(excess, q);
}

double MemSadPlus::log_length(std::string_view text) {
  return std::log(static_cast<double>(std::max<std::size_t>(text.size(), 1)));
}

double MemSadPlus::char_divergence(std::string_view text) const {
  return jensen_shannon(char_ngrams(text, n_), baseline_);
}

double MemSadPlus::char_excess(std::string_view text) const {
  return char_divergence(text) - intercept_ - slope_ * log_length(text);
}

MemSadPlusScore MemSadPlus::score(std::string_view text, const Embedding& e) const {
  const double d = char_divergence(text);
  return {semantic_.score(e), d, d - intercept_ - slope_ * log_length(text)};
}

DefenseVerdict MemSadPlus::filter(std::string_view text, const Embedding& e) const {
  const auto s = score(text, e);
  const double margin = std::max(s.semantic - semantic_.threshold(), s.char_excess - char_threshold_);
  return DefenseVerdict::make("memsad_plus", margin, 0.0);
}

// ---------------------------------------------------------------------------
// Watermark

void WatermarkConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::ConfigError, "gamma must lie in (0, 1)");
}

bool is_green(char prev, char c, const WatermarkConfig& cfg) {
  const std::uint64_t h = hash_combine(hash_combine(cfg.seed, static_cast<unsigned char>(prev)),
                                       static_cast<unsigned char>(c));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < cfg.gamma;
}

namespace {

bool printable(char c) { return c >= 32 && c <= 126; }

}  // namespace

GreenCount count_green(std::string_view text, const WatermarkConfig& cfg) {
  GreenCount gc;
  char prev = '\0';
  for (char c : text) {
    if (!printable(c)) continue;
    ++gc.total;
    if (is_green(prev, c, cfg)) ++gc.green;
    prev = c;
  }
  return gc;
}

double watermark_z(std::size_t green, std::size_t n, double gamma) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "watermark statistic needs at least one character");
  const double nn = static_cast<double>(n);
  return (static_cast<double>(green) - gamma * nn) / std::sqrt(gamma * (1.0 - gamma) * nn);
}

namespace {

std::vector<std::string> split_spaces(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string join_spaces(const std::vector<std::string>& words) { return join(words, " "); }

// Word core without trailing punctuation, lowercased.
std::pair<std::string, std::string> split_word(const std::string& w) {
  std::size_t end = w.size();
  while (end > 0 && std::ispunct(static_cast<unsigned char>(w[end - 1]))) --end;
  std::string core = w.substr(0, end);
  std::transform(core.begin(), core.end(), core.begin(), [](unsigned char c) { return std::tolower(c); });
  return {core, w.substr(end)};
}

double z_of(const std::string& text, const WatermarkConfig& cfg) {
  const auto gc = count_green(text, cfg);
  return gc.total == 0 ? 0.0 : watermark_z(gc.green, gc.total, cfg.gamma);
}

}  // namespace

WatermarkResult watermark_write(std::string_view text, const WatermarkConfig& cfg, const SynonymTable& table) {
  cfg.validate();
  auto words = split_spaces(text);
  std::string current = join_spaces(words);
  double z = z_of(current, cfg);
  std::size_t swaps = 0;
  while (z < cfg.z_write) {
    double best_z = z;
    std::size_t best_pos = words.size();
    std::string best_word;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto [core, tail] = split_word(words[i]);
      for (const auto& alt : table.alternatives(core)) {
        const std::string saved = words[i];
        words[i] = alt + tail;
        const double cand = z_of(join_spaces(words), cfg);
        words[i] = saved;
        if (cand > best_z) {
          best_z = cand;
          best_pos = i;
          best_word = alt + tail;
        }
      }
    }
    if (best_pos == words.size()) break;
    words[best_pos] = best_word;
    z = best_z;
    ++swaps;
  }
  std::string out = join_spaces(words);
  std::size_t flips = 0;
  if (z < cfg.z_write) {
    // Letter case is invisible to the embedder and to the char divergence
    // test; flip letters wherever that adds green pairs, pass after pass.
    auto gc = count_green(out, cfg);
    bool progress = true;
    while (progress && z < cfg.z_write) {
      progress = false;
      for (std::size_t i = 0; i < out.size() && z < cfg.z_write; ++i) {
        const char c = out[i];
        if (!std::isalpha(static_cast<unsigned char>(c))) continue;
        const char alt = std::islower(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(c))
                                                                    : static_cast<char>(std::tolower(c));
        const char prev = i == 0 ? '\0' : out[i - 1];
        const bool has_next = i + 1 < out.size();
        const auto greens = [&](char x) {
          int g = is_green(prev, x, cfg);
          if (has_next) g += is_green(x, out[i + 1], cfg);
          return g;
        };
        const int gain = greens(alt) - greens(c);
        if (gain <= 0) continue;
        out[i] = alt;
        gc.green += static_cast<std::size_t>(gain);
        z = watermark_z(gc.green, gc.total, cfg.gamma);
        ++flips;
        progress = true;
      }
    }
    z = z_of(out, cfg);
  }
  return {out, z, swaps, flips};
}

DefenseVerdict watermark_detect(std::string_view text, const WatermarkConfig& cfg) {
  cfg.validate();
  const auto gc = count_green(text, cfg);
  const double z = watermark_z(gc.green, gc.total, cfg.gamma);
  return DefenseVerdict::make("watermark", -z, -cfg.z_thr);
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> load_patterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open pattern file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    out.push_back(line.substr(first, last - first + 1));
  }
  return out;
}

DefenseVerdict validation_filter(std::string_view text, const std::vector<std::string>& patterns) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string hay = lower(text);
  std::size_t hits = 0;
  for (const auto& p : patterns) {
    if (!p.empty() && hay.find(lower(p)) != std::string::npos) ++hits;
  }
  return DefenseVerdict::make("validation", static_cast<double>(hits), 0.0);
}

// ---------------------------------------------------------------------------
// Proactive

Proactive::Proactive(std::vector<Embedding> probes, double tau) : probes_(std::move(probes)), tau_(tau) {
  if (probes_.empty()) throw Error(ErrorCode::ConfigError, "proactive defense needs at least one probe");
}

Proactive Proactive::auto_threshold(std::vector<Embedding> probes, const std::vector<Embedding>& benign,
                                    double q) {
  Proactive p(std::move(probes), 0.0);
  if (benign.empty()) throw Error(ErrorCode::InsufficientCalibration, "no benign entries for threshold");
  std::vector<double> s;
  s.reserve(benign.size());
  for (const auto& e : benign) s.push_back(p.score(e));
  p.tau_ = quantile(s, q);
  return p;
}

double Proactive::score(const Embedding& e) const {
  double sum = 0.0;
  for (const auto& p : probes_) sum += cosim(e, p);
  return sum / static_cast<double>(probes_.size());
}

DefenseVerdict Proactive::filter(const Embedding& e) const { return DefenseVerdict::make("proactive", score(e), tau_); }

std::vector<Embedding> embed_all(const std::vector<std::string>& texts, const Embedder& embedder) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embedder.embed(t));
  return out;
}

// ---------------------------------------------------------------------------
// Composite

DefenseVerdict composite_filter(const std::vector<DefenseVerdict>& sub) {
  bool have_wm = false, have_sad = false, have_pro = false;
  double fired = 0.0;
  for (const auto& v : sub) {
    const bool member = v.defense == "watermark" || v.defense == "memsad" || v.defense == "proactive";
    if (!member) continue;
    have_wm |= v.defense == "watermark";
    have_sad |= v.defense == "memsad";
    have_pro |= v.defense == "proactive";
    if (v.flagged) fired += 1.0;
  }
  if (!(have_wm && have_sad && have_pro)) {
    throw Error(ErrorCode::ConfigError, "composite needs watermark, memsad and proactive verdicts");
  }
  return DefenseVerdict::make("composite", fired, 0.0);
}

// ---------------------------------------------------------------------------
// OOD baselines

OodBaselines::OodBaselines(std::vector<Embedding> calibration_queries, const std::vector<Embedding>& benign,
                           double temperature, std::size_t knn_k)
    : queries_(std::move(calibration_queries)), benign_(benign), temperature_(temperature), knn_k_(knn_k) {
  if (queries_.empty()) throw Error(ErrorCode::NotCalibrated, "no calibration queries");
  if (benign_.size() < 2) throw Error(ErrorCode::InsufficientCalibration, "need at least 2 benign embeddings");
  if (!(temperature_ > 0.0)) throw Error(ErrorCode::ConfigError, "temperature must be > 0");
  if (knn_k_ == 0) throw Error(ErrorCode::ConfigError, "knn k must be >= 1");

  const std::size_t d = benign_.front().dim();
  const auto n = static_cast<Eigen::Index>(benign_.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = benign_[static_cast<std::size_t>(i)];
    if (e.dim() != d) throw Error(ErrorCode::DimensionMismatch, "benign embeddings differ in dimension");
    for (std::size_t j = 0; j < d; ++j) x(i, static_cast<Eigen::Index>(j)) = e[j];
  }
  const Eigen::VectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  const double reg = 1e-6 * cov.trace() / static_cast<double>(d);
  cov.diagonal().array() += reg;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || !(reg > 0.0)) {
    throw Error(ErrorCode::NumericalError, "covariance is singular after regularization");
  }
  const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  mean_.assign(mu.data(), mu.data() + d);
  precision_.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      precision_[i * d + j] = prec(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

double OodBaselines::energy(const Embedding& e) const {
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> z;
  z.reserve(queries_.size());
  for (const auto& q : queries_) {
    z.push_back(cosim(e, q) / temperature_);
    mx = std::max(mx, z.back());
  }
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return temperature_ * (mx + std::log(s));
}

double OodBaselines::mahalanobis(const Embedding& e) const {
  const std::size_t d = mean_.size();
  if (e.dim() != d) throw Error(ErrorCode::DimensionMismatch, "mahalanobis input dimension");
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < d; ++i) diff[i] = e[i] - mean_[i];
  double q = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += precision_[i * d + j] * diff[j];
    q += diff[i] * row;
  }
  return std::sqrt(std::max(0.0, q));
}

double OodBaselines::knn(const Embedding& e) const {
  if (benign_.size() < knn_k_) {
    throw Error(ErrorCode::InsufficientCalibration, "fewer benign embeddings than knn k");
  }
  std::vector<double> dist;
  dist.reserve(benign_.size());
  for (const auto& b : benign_) dist.push_back(distance(e, b));
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(knn_k_ - 1), dist.end());
  return dist[knn_k_ - 1];
}

OodScores OodBaselines::score(const Embedding& e) const { return {energy(e), mahalanobis(e), knn(e)}; }

}  // namespace memshield
