#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "tracegap/dtw.hpp"
#include "tracegap/rng.hpp"

namespace tracegap {

enum class Specificity { Low, Medium, High };

/// Exponent of the donor-selection law p_v proportional to
/// (1/(d_v + eps))^kappa. Low 1, medium 3, high 8.
double specificity_kappa(Specificity s);

constexpr double kSelectionEpsilon = 1e-6;

/// The four DTWBMI parameters plus sampling controls. kappa = 0 selects
/// donors uniformly; deterministic_best bypasses sampling and always takes
/// the best-fitting donor (the DTWBI behavior).
struct DtwbmiParams {
  std::int64_t match_buffer_s = 8 * kSecondsPerHour;
  std::optional<std::int64_t> time_window_s = kSecondsPerHour;
  double kappa = specificity_kappa(Specificity::High);
  std::size_t n_imputations = 1;
  bool deterministic_best = false;
  bool collapsed_gap = false;  // match on a single interpolated gap element
  std::uint64_t rng_seed = 0;
};

DtwbmiParams preset_dtwbi();
DtwbmiParams preset_dtwbmi_hi();
DtwbmiParams preset_dtwbmi_lo();

struct PooledStats {
  std::vector<double> element_mean;
  std::vector<double> element_variance;  // between-imputation, sample
  double total_mean = 0.0;
  double total_variance = 0.0;
};

/// m completed series plus per-imputation donor provenance (empty for
/// methods without donors) and pooled statistics.
struct ImputationResult {
  std::vector<MetricSeries> completed;
  std::vector<std::optional<AlignmentResult>> donors;
  PooledStats pooled;
};

/// Linear interpolation: the haversine distance between the last pre-gap
/// and first post-gap fix, split equally over the missing intervals.
ImputationResult impute_li(const MetricSeries& series, const GapSpec& gap,
                           const Trajectory& traj);

/// Hourly-mean imputation from the observed portion of the series.
ImputationResult impute_mean(const MetricSeries& series, const GapSpec& gap);

/// Time Window imputation: m placements drawn uniformly from all feasible
/// (donor, offset) placements within the wall-clock window; similarity is
/// not assessed.
ImputationResult impute_twi(const MetricSeries& series, const GapSpec& gap,
                            const ReferenceCollection& refs,
                            std::int64_t window_s, std::size_t m,
                            std::uint64_t seed);

/// DTW-based (multiple) imputation: candidates scored by score_candidates
/// under a one-to-one concordance, then m donors sampled by the
/// specificity-weighted selection law (without replacement when the pool
/// allows).
ImputationResult impute_dtwbmi(const MetricSeries& series, const GapSpec& gap,
                               const ReferenceCollection& refs,
                               const DtwbmiParams& params);

/// Element-wise mean and between-imputation variance, plus the same for
/// per-series totals.
PooledStats pool(const std::vector<MetricSeries>& completed);

/// Provenance export: one JSON object per imputation.
void write_provenance_jsonl(std::ostream& out, const std::string& method,
                            const MetricSeries& series, const GapSpec& gap,
                            const ImputationResult& result);

}  // namespace tracegap
