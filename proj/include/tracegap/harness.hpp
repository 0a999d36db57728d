#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tracegap/impute.hpp"

namespace tracegap {

/// One contiguous set: the trajectory slice and its discretized bundle.
struct DataSet {
  Trajectory traj;
  SeriesBundle bundle;
};

struct Dataset {
  std::vector<DataSet> sets;

  /// Number of sets belonging to the given person.
  std::size_t own_set_count(const std::string& person_id) const;
};

enum class TimeOfDay { Any, NightOnly, DayOnly };

struct Scenario {
  std::int64_t gap_length_s = kSecondsPerHour;
  std::size_t n_affected = 100;
  std::uint64_t seed = 0;
  TimeOfDay time_of_day = TimeOfDay::Any;
};

/// One induced gap: which set was masked and where.
struct GapCase {
  std::size_t set_index = 0;
  GapSpec gap;
};

enum class MethodKind { LI, MI, TWI, DTWBI, DTWBMI_HI, DTWBMI_LO, DTWBMI };

struct MethodSpec {
  MethodKind kind = MethodKind::LI;
  std::string name;                 // label used in reports
  DtwbmiParams params;              // DTWBMI* methods
  std::int64_t twi_window_s = kSecondsPerHour;
  std::size_t twi_m = 10;
};

MethodSpec method_from_name(const std::string& name);

struct HarnessConfig {
  double movement_threshold_km = 0.1;  // per interval; defines travel periods
  std::int64_t utc_offset_s = 0;
  std::uint64_t master_seed = 0;
  unsigned jobs = 1;
};

/// Per-gap scoring record for one method. Travel-period counts are
/// averaged across the m imputations.
struct GapScore {
  double signed_bias_km = 0.0;  // imputed total - true total over the gap
  double tp_over_num = 0.0;     // imputed-travel periods not travel in truth
  double tp_over_den = 0.0;     // truth non-travel periods in the gap
  double tp_under_num = 0.0;    // truth-travel periods missed
  double tp_under_den = 0.0;    // truth travel periods in the gap
  double tp_agree = 0.0;
  double tp_total = 0.0;
};

/// Aggregate cell across gaps (the paper's per-method table row).
struct MetricsCell {
  double abs_bias_km = 0.0;
  double med_bias_km = 0.0;
  double dist_over_km = 0.0;
  double dist_under_km = 0.0;
  double rmse = 0.0;
  double tp_acc_pct = 0.0;
  double tp_over_pct = 0.0;
  double tp_under_pct = 0.0;
  std::size_t n_gaps = 0;
  std::size_t skipped = 0;
};

struct ReportRow {
  std::string section;  // overall | gap_length | time_of_day | own_sets
  std::string stratum;
  std::string method;
  MetricsCell cell;
};

/// Per-gap raw record kept for JSONL export.
struct RawGapRecord {
  std::string scenario;
  std::string method;
  std::string person_id;
  std::string set_id;
  std::size_t gap_start_index = 0;
  std::size_t gap_length = 0;
  bool skipped = false;
  std::string skip_reason;
  GapScore score;
};

/// Selects n_affected eligible sets and masks one contiguous gap in each
/// (uniform over feasible starts, seeded). Returns the masked dataset
/// copy plus the gap cases; `dataset` itself is the retained truth.
std::pair<Dataset, std::vector<GapCase>> induce_missingness(
    const Dataset& dataset, const Scenario& scenario,
    const HarnessConfig& config);

/// Scores one imputed gap against the truth series.
GapScore score(const MetricSeries& truth, const ImputationResult& imputed,
               const GapSpec& gap, double movement_threshold_km);

MetricsCell aggregate(const std::vector<GapScore>& scores,
                      std::size_t skipped);

struct ComparisonResult {
  std::vector<ReportRow> rows;
  std::vector<RawGapRecord> raw;
};

/// Runs every method on every scenario; all methods within a scenario see
/// the identical masked data. Emits overall, per-gap-length, night/day and
/// own-set-count strata.
ComparisonResult run_comparison(const Dataset& dataset,
                                const std::vector<MethodSpec>& methods,
                                const std::vector<Scenario>& scenarios,
                                const HarnessConfig& config);

struct GridCell {
  Specificity specificity = Specificity::Low;
  int buffer_h = 1;                      // 1 | 4 | 8
  std::string window_label;              // "<1 hour" | "<3 hours" | "No Window"
  std::size_t imputations = 1;           // 1 | 3 | 5 | 10
  MetricsCell cell;
};

struct GridResult {
  std::vector<GridCell> cells;  // 3 x 3 x 3 x 4 = 108
  std::vector<ReportRow> marginals;
};

/// Full DTWBMI parameter grid; marginal rows are means of the cell
/// aggregates sharing each level.
GridResult run_parameter_grid(const Dataset& dataset,
                              const std::vector<Scenario>& scenarios,
                              const HarnessConfig& config);

struct OwnSetsConfig {
  std::vector<std::size_t> levels{0, 1, 2, 3};
  std::size_t base_pool = 48;
  std::size_t min_own_sets = 4;
  std::size_t repetitions = 10;
  std::vector<std::int64_t> gap_lengths_s{
      kSecondsPerHour, 3 * kSecondsPerHour, 6 * kSecondsPerHour,
      8 * kSecondsPerHour, 12 * kSecondsPerHour};
};

/// Varies the number of a person's own sets in the donor pool while
/// holding the pool size constant; DTWBI and both DTWBMI presets scored.
std::vector<ReportRow> run_own_sets_experiment(const Dataset& dataset,
                                               const OwnSetsConfig& own,
                                               const HarnessConfig& config);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows,
                      std::uint64_t master_seed);
void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows,
                       std::uint64_t master_seed);
void write_raw_jsonl(std::ostream& out, const std::vector<RawGapRecord>& raw);
std::vector<ReportRow> read_report_csv(std::istream& in);

}  // namespace tracegap
