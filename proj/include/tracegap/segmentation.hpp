#pragma once

#include <iosfwd>
#include <vector>

#include "tracegap/geo.hpp"

namespace tracegap {

/// A dwell cluster: fixes staying within `radius` of the running centroid
/// for at least the minimum duration.
struct StayPoint {
  double lat = 0.0;
  double lon = 0.0;
  EpochSeconds arrive = 0;
  EpochSeconds depart = 0;
  std::vector<GeoPoint> members;

  std::size_t member_count() const { return members.size(); }
};

/// Stops and connecting tracks for one contiguous set. Stays and tracks
/// alternate in time; together they partition the input fixes.
struct SegmentedDay {
  std::string person_id;
  std::vector<StayPoint> stays;
  std::vector<std::vector<GeoPoint>> tracks;
  // Timestamps of every original fix, kept even after tracks are
  // simplified; the response mask is derived from these.
  std::vector<EpochSeconds> fix_times;
};

struct SegmentationParams {
  double stay_radius_m = 200.0;
  std::int64_t stay_min_duration_s = 10 * kSecondsPerMinute;
  double tdtr_tolerance_m = 30.0;
};

/// Greedy forward stay-point scan: grow a candidate cluster while each new
/// fix is within `radius_m` of the cluster centroid; emit a StayPoint when
/// the cluster's time span reaches `min_duration_s`. Remaining fixes form
/// the tracks between stays.
SegmentedDay detect_stay_points(const Trajectory& traj, double radius_m,
                                std::int64_t min_duration_s);

/// Top-Down Time Ratio simplification. Deviation is the haversine distance
/// between a point and the chord position interpolated by elapsed-time
/// ratio; splits recursively at the maximum deviation until all deviations
/// are <= tolerance_m. Output is a subsequence keeping both endpoints.
std::vector<GeoPoint> tdtr_simplify(const std::vector<GeoPoint>& track,
                                    double tolerance_m);

/// Sum of haversine distances over consecutive points, meters.
double track_distance(const std::vector<GeoPoint>& track);

/// Root-mean-square haversine distance of points from their coordinate
/// centroid, meters. Throws on empty input.
double radius_of_gyration(const std::vector<GeoPoint>& points);

/// detect_stay_points followed by TDTR simplification of every track.
SegmentedDay segment_trajectory(const Trajectory& traj,
                                const SegmentationParams& params);

/// Debug export: one JSON object per stay/track.
void write_segmented_jsonl(std::ostream& out, const SegmentedDay& seg);

}  // namespace tracegap
