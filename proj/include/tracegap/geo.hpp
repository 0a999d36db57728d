#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tracegap/timeutil.hpp"

namespace tracegap {

constexpr double kEarthRadiusMeters = 6371000.0;

/// A single timestamped fix. lat/lon in degrees, timestamp in UTC epoch
/// seconds.
struct GeoPoint {
  EpochSeconds timestamp = 0;
  double lat = 0.0;
  double lon = 0.0;
};

/// All fixes for one person, strictly increasing in timestamp.
struct Trajectory {
  std::string person_id;
  std::vector<GeoPoint> points;
};

struct CoverageStats {
  std::int64_t covered_time_s = 0;
  double coverage_fraction = 0.0;
  std::size_t gap_count = 0;
  double mean_gap_length_s = 0.0;
};

enum class InputFormat { Csv, Jsonl };

/// Great-circle distance in meters on a sphere of radius 6,371,000 m.
double haversine(const GeoPoint& a, const GeoPoint& b);

/// Parses `person_id,timestamp,lat,lon` rows (csv with header, or jsonl
/// with the same keys) into one trajectory per person, sorted by time.
/// Throws std::runtime_error citing the line number on malformed rows,
/// out-of-range coordinates, or duplicate (person, timestamp) pairs.
std::vector<Trajectory> parse_trajectories(std::istream& stream,
                                           InputFormat format);

/// Writes trajectories back out in the csv input format.
void write_trajectories_csv(std::ostream& out,
                            const std::vector<Trajectory>& trajs);

/// Coverage over [window_start, window_end): covered spans are maximal
/// runs of fixes whose successive gaps are <= max_gap_s; gap_count counts
/// the inter-fix gaps > max_gap_s inside the window.
CoverageStats coverage_stats(const Trajectory& traj, std::int64_t max_gap_s,
                             EpochSeconds window_start,
                             EpochSeconds window_end);

/// Maximal contiguous slices spanning >= min_span_s with no inter-fix gap
/// exceeding max_gap_s. One person may yield several slices; slice
/// person_ids stay the person's id.
std::vector<Trajectory> select_contiguous_sets(
    const std::vector<Trajectory>& trajs, std::int64_t min_span_s,
    std::int64_t max_gap_s);

/// Drops fixes implying a speed above max_speed_mps to both temporal
/// neighbors. Mechanized stand-in for manual inspection of implausible
/// jumps.
Trajectory filter_implausible_speeds(const Trajectory& traj,
                                     double max_speed_mps);

}  // namespace tracegap
