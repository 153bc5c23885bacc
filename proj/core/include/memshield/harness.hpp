#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memshield/attacks.hpp"
#include "memshield/corpus.hpp"
#include "memshield/defenses.hpp"
#include "memshield/embedding.hpp"
#include "memshield/metrics.hpp"
#include "memshield/theory.hpp"

namespace memshield {

enum class QueryProtocol { Plain, Triggered };
std::string_view to_string(QueryProtocol p);
QueryProtocol parse_query_protocol(std::string_view s);

/// Which history MemSAD is calibrated on. Auto uses triggered queries when the
/// attack produced a trigger and plain victim queries otherwise.
enum class CalibrationProtocol { Auto, Plain, Triggered };
std::string_view to_string(CalibrationProtocol p);
CalibrationProtocol parse_calibration_protocol(std::string_view s);

enum class DefenseKind { Watermark, Validation, Proactive, MemSad, MemSadPlus, Composite };
std::string_view to_string(DefenseKind d);
DefenseKind parse_defense_kind(std::string_view s);

struct DefenseParams {
  double kappa = 2.0;
  std::size_t history = 20;
  std::size_t calibration_n = 50;
  ScoreMode mode = ScoreMode::Combined;
  WatermarkConfig watermark;
  std::optional<double> proactive_tau;  // unset: pick the quantile on calibration entries
  double proactive_quantile = 0.99;
  double char_quantile = 0.99;
};

struct ScenarioConfig {
  CorpusSpec corpus;
  AttackConfig attack;
  EmbedderConfig embedder;
  std::vector<DefenseKind> roster = {DefenseKind::Watermark, DefenseKind::Validation, DefenseKind::Proactive,
                                     DefenseKind::MemSad, DefenseKind::Composite};
  DefenseParams defense;
  QueryProtocol protocol = QueryProtocol::Plain;
  CalibrationProtocol calibration = CalibrationProtocol::Auto;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t holdout = 1000;  // benign control stream size per trial
  double lambda = 1.0;         // leader's FPR weight

  void validate() const;
  /// key=value lines describing every field, sorted by key.
  std::map<std::string, std::string> describe() const;
};

/// Everything a trial builds before any defense decision. Exposed so that
/// sweeps and the CLI can reuse one build for several detector settings.
struct TrialSetup {
  std::uint64_t seed = 0;
  Embedder embedder;
  MemoryStore store;
  QuerySet queries;
  PoisonSet poison;
  std::vector<Embedding> victims;             // evaluation protocol
  std::vector<Embedding> calibration_history;  // MemSAD history protocol
  std::vector<Embedding> benign_queries;
  std::vector<MemoryEntry> reference;  // MemSAD calibration entries (from the store)
  std::vector<MemoryEntry> control;    // held-out benign write stream
  bool triggered_calibration = false;
};

TrialSetup build_trial(const ScenarioConfig& sc, std::uint64_t seed);

/// The defenders of one trial, all fitted on store-side data only.
struct DefenseSuite {
  std::vector<std::string> patterns;
  WatermarkConfig watermark;
  MemSad memsad;
  std::optional<MemSadPlus> memsad_plus;
  std::optional<Proactive> proactive;

  /// Verdicts for one candidate, keyed by defense name, for the roster.
  std::map<std::string, DefenseVerdict> judge(const MemoryEntry& e, const std::vector<DefenseKind>& roster) const;
};

DefenseSuite fit_defenses(const ScenarioConfig& sc, const TrialSetup& t);

TrialReport run_trial(const ScenarioConfig& sc, std::uint64_t seed);

/// Scores every poison and control entry under the roster and fills the report.
TrialReport evaluate_defenses(const ScenarioConfig& sc, const TrialSetup& t, const DefenseSuite& suite,
                              const std::vector<MemoryEntry>& poison_entries);

struct CellSummary {
  std::string family;
  std::string defense;
  double tpr = 0.0, fpr = 0.0, auroc = 0.0, post_filter_asr_r = 0.0, benign_accuracy = 0.0;
  Interval tpr_ci{0, 0}, fpr_ci{0, 0}, post_asr_ci{0, 0};
  std::size_t poison_flagged = 0, poison_total = 0, benign_flagged = 0, benign_total = 0;
  Interval fpr_exact{0, 0};  // Clopper-Pearson on pooled benign counts
  double p_value = 1.0;      // one-sided binomial, H0: TPR <= 0.05
  bool reject = false;       // at the Bonferroni level
  double power = 0.0;        // at the observed pooled TPR
};

struct AttackSummary {
  std::string family;
  double asr_r = 0.0, asr_a = 0.0, asr_t = 0.0;
  Interval asr_r_ci{0, 0};
};

struct MatrixReport {
  std::vector<TrialReport> trials;  // sorted by (family, seed)
  std::vector<AttackSummary> attacks;
  std::vector<CellSummary> cells;
  double alpha = 0.05;
  double alpha_corrected = 0.0;
  std::size_t comparisons = 0;
};

/// Runs every scenario over its seeds and aggregates per (family, defense).
MatrixReport run_matrix(const std::vector<ScenarioConfig>& scenarios);

/// One scenario per attack family, otherwise identical to `base`.
std::vector<ScenarioConfig> matrix_scenarios(const ScenarioConfig& base);

struct KappaPoint {
  double kappa;
  double post_filter_asr_r;  // after the adversary's best response
  double fpr;
  double objective;
};

struct KappaSweep {
  std::vector<KappaPoint> points;
  double kappa_star = 0.0;
  double lambda = 0.0;
  std::string leader;  // "memsad" or "composite"
};

/// Leader commits to kappa, follower best-responds with synonym_adapt, and
/// the objective post-filter ASR-R + lambda FPR is averaged over seeds.
/// Ties in the argmin go to the smallest kappa. Throws ConfigError on an empty grid.
KappaSweep kappa_sweep(const ScenarioConfig& sc, const std::vector<double>& grid, double lambda,
                       DefenseKind leader = DefenseKind::MemSad);

/// Picks the grid argmin of objective = asr + lambda fpr, ties to the smallest kappa.
double leader_argmin(const std::vector<KappaPoint>& points, double lambda);

enum class AblationAxis { Kappa, CorpusSize, NBase, CalibrationN, SynonymJitter };
std::string_view to_string(AblationAxis a);
AblationAxis parse_ablation_axis(std::string_view s);

struct AblationPoint {
  double value;
  std::vector<TrialReport> trials;
  std::optional<CalibrationCheck> calibration;  // CalibrationN axis only
};

struct AblationTable {
  AblationAxis axis;
  std::vector<AblationPoint> points;
};

ScenarioConfig with_axis_value(const ScenarioConfig& sc, AblationAxis axis, double value);
AblationTable ablation_sweep(const ScenarioConfig& sc, AblationAxis axis, const std::vector<double>& grid);

struct AdaptiveRow {
  std::uint64_t seed = 0;
  std::string family;
  std::size_t entries = 0;
  double tpr_before = 0.0;
  double tpr_after = 0.0;
  double evasion = 0.0;  // 1 - tpr_after
  double asr_r_before = 0.0;
  double asr_r_after = 0.0;
  double delta_asr_r = 0.0;
  double subs_per_entry = 0.0;
  double score_delta = 0.0;  // mean detector score change
  double max_abs_shift = 0.0;
  bool shift_bound_holds = true;  // |delta| <= subs * jitter + 1e-9 for every entry
  double plus_tpr_after = 0.0;    // MemSAD+ on the adapted entries
};

std::vector<AdaptiveRow> adaptive_run(const ScenarioConfig& sc);

}  // namespace memshield
