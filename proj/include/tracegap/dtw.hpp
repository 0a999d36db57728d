#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracegap/series.hpp"

namespace tracegap {

/// Raised when constraints leave no traversable path.
struct InfeasibleAlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Path constraints for the warping engine. time_window_s bounds the
/// circular time-of-day difference between matched elements, independent
/// of index offset.
struct AlignmentConstraints {
  std::optional<int> sakoe_chiba;
  bool one_to_one = false;
  bool open_begin_end = false;
  std::optional<std::int64_t> time_window_s;
};

/// Donor-pool restrictions (the function phi): person filters, a
/// wall-clock offset limit on gap placements, and day-of-week matching.
struct PhiRestrictions {
  bool exclude_self = false;
  bool only_self = false;
  std::optional<std::int64_t> time_window_s;
  enum class DayMatch { None, WeekdayWeekend, SameDayOfWeek };
  DayMatch day_match = DayMatch::None;
  std::int64_t utc_offset_s = 0;  // for weekday/weekend classification
};

struct DonorSeries {
  std::string person_id;
  std::string set_id;
  MetricSeries series;
};

/// The candidate pool: donor series plus the restrictions under which
/// placements may be offered. Only fully observed donor windows are ever
/// offered for matching.
struct ReferenceCollection {
  std::vector<DonorSeries> donors;
  PhiRestrictions restrictions;
};

/// One donor's best placement of the artificial gap.
struct AlignmentResult {
  std::string donor_person;
  std::string donor_set;
  std::size_t gap_position = 0;  // donor index of the first gap element
  double dissimilarity = 0.0;
  std::vector<double> donor_gap_values;
};

struct DtwResult {
  double dissimilarity = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> path;  // (t, j) pairs
};

/// Circular time-of-day difference in seconds, in [0, 43200].
std::int64_t time_of_day_offset(EpochSeconds a, EpochSeconds b);

/// Elementwise |q_t - rho_j| cost matrix (q indexes rows).
std::vector<std::vector<double>> cost_matrix(const std::vector<double>& q,
                                             const std::vector<double>& rho);

/// Minimum accumulated cost under the three-move recurrence
/// D(t,j) = dist(t,j) + min{D(t-1,j-1), D(t-1,j), D(t,j-1)}.
/// Under open_begin_end the path may start/end anywhere in rho but must
/// cover all of q. Throws InfeasibleAlignmentError when the constraints
/// exclude every path.
DtwResult dtw_distance(const TimedValues& q, const TimedValues& rho,
                       const AlignmentConstraints& c);

/// Tries every permissible placement of an artificial gap of length
/// gap_length in each donor, with buffers matching q_pre/q_post in length;
/// returns the minimum-dissimilarity placement per donor. Donors with no
/// feasible placement are omitted. Throws std::invalid_argument on an
/// empty reference collection.
std::vector<AlignmentResult> score_candidates(
    const TimedValues& q_pre, const TimedValues& q_post,
    std::size_t gap_length, EpochSeconds gap_start_time,
    const ReferenceCollection& refs, const AlignmentConstraints& c);

/// Person and day-of-week filtering; the placement-level time window is
/// carried through on the returned collection.
ReferenceCollection apply_phi(const ReferenceCollection& refs,
                              const std::string& query_person,
                              EpochSeconds query_time,
                              const PhiRestrictions& phi);

}  // namespace tracegap
