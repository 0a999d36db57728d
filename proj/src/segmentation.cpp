#include "tracegap/segmentation.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace tracegap {

namespace {

StayPoint make_stay(std::vector<GeoPoint> members) {
  StayPoint stay;
  double lat = 0.0, lon = 0.0;
  for (const auto& p : members) {
    lat += p.lat;
    lon += p.lon;
  }
  stay.lat = lat / static_cast<double>(members.size());
  stay.lon = lon / static_cast<double>(members.size());
  stay.arrive = members.front().timestamp;
  stay.depart = members.back().timestamp;
  stay.members = std::move(members);
  return stay;
}

// Chord position at time-ratio between the endpoints of a track segment.
GeoPoint interpolate_by_time(const GeoPoint& a, const GeoPoint& b,
                             EpochSeconds t) {
  const double span = static_cast<double>(b.timestamp - a.timestamp);
  const double f =
      span > 0 ? static_cast<double>(t - a.timestamp) / span : 0.0;
  return {t, a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)};
}

void tdtr_recurse(const std::vector<GeoPoint>& track, std::size_t lo,
                  std::size_t hi, double tolerance_m,
                  std::vector<bool>& keep) {
  if (hi - lo < 2) return;
  double max_dev = -1.0;
  std::size_t split = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const GeoPoint chord =
        interpolate_by_time(track[lo], track[hi], track[i].timestamp);
    const double dev = haversine(track[i], chord);
    if (dev > max_dev) {
      max_dev = dev;
      split = i;
    }
  }
  if (max_dev <= tolerance_m) return;
  keep[split] = true;
  tdtr_recurse(track, lo, split, tolerance_m, keep);
  tdtr_recurse(track, split, hi, tolerance_m, keep);
}

}  // namespace

SegmentedDay detect_stay_points(const Trajectory& traj, double radius_m,
                                std::int64_t min_duration_s) {
  if (radius_m <= 0) throw std::invalid_argument("radius must be positive");
  if (min_duration_s <= 0) {
    throw std::invalid_argument("min_duration must be positive");
  }
  SegmentedDay seg;
  seg.person_id = traj.person_id;
  for (const auto& p : traj.points) seg.fix_times.push_back(p.timestamp);

  const auto& pts = traj.points;
  std::vector<GeoPoint> track;
  auto flush_track = [&] {
    if (!track.empty()) {
      seg.tracks.push_back(std::move(track));
      track.clear();
    }
  };

  std::size_t i = 0;
  while (i < pts.size()) {
    std::vector<GeoPoint> cluster{pts[i]};
    double clat = pts[i].lat, clon = pts[i].lon;
    std::size_t j = i + 1;
    while (j < pts.size()) {
      const GeoPoint centroid{0, clat / cluster.size(), clon / cluster.size()};
      if (haversine(centroid, pts[j]) > radius_m) break;
      clat += pts[j].lat;
      clon += pts[j].lon;
      cluster.push_back(pts[j]);
      ++j;
    }
    if (cluster.back().timestamp - cluster.front().timestamp >=
        min_duration_s) {
      flush_track();
      seg.stays.push_back(make_stay(std::move(cluster)));
      i = j;
    } else {
      track.push_back(pts[i]);
      ++i;
    }
  }
  flush_track();
  return seg;
}

std::vector<GeoPoint> tdtr_simplify(const std::vector<GeoPoint>& track,
                                    double tolerance_m) {
  if (tolerance_m <= 0) {
    throw std::invalid_argument("tolerance must be positive");
  }
  if (track.size() <= 2) return track;
  std::vector<bool> keep(track.size(), false);
  keep.front() = keep.back() = true;
  tdtr_recurse(track, 0, track.size() - 1, tolerance_m, keep);
  std::vector<GeoPoint> out;
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (keep[i]) out.push_back(track[i]);
  }
  return out;
}

double track_distance(const std::vector<GeoPoint>& track) {
  double total = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    total += haversine(track[i - 1], track[i]);
  }
  return total;
}

double radius_of_gyration(const std::vector<GeoPoint>& points) {
  if (points.empty()) {
    throw std::invalid_argument("radius_of_gyration on empty input");
  }
  double clat = 0.0, clon = 0.0;
  for (const auto& p : points) {
    clat += p.lat;
    clon += p.lon;
  }
  const GeoPoint centroid{0, clat / points.size(), clon / points.size()};
  double sum_sq = 0.0;
  for (const auto& p : points) {
    const double d = haversine(p, centroid);
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / static_cast<double>(points.size()));
}

SegmentedDay segment_trajectory(const Trajectory& traj,
                                const SegmentationParams& params) {
  SegmentedDay seg =
      detect_stay_points(traj, params.stay_radius_m, params.stay_min_duration_s);
  for (auto& track : seg.tracks) {
    track = tdtr_simplify(track, params.tdtr_tolerance_m);
  }
  return seg;
}

void write_segmented_jsonl(std::ostream& out, const SegmentedDay& seg) {
  for (const auto& stay : seg.stays) {
    nlohmann::json obj{{"type", "stay"},
                       {"person_id", seg.person_id},
                       {"lat", stay.lat},
                       {"lon", stay.lon},
                       {"arrive", format_iso8601(stay.arrive)},
                       {"depart", format_iso8601(stay.depart)},
                       {"member_count", stay.member_count()}};
    out << obj.dump() << '\n';
  }
  for (const auto& track : seg.tracks) {
    nlohmann::json obj{{"type", "track"},
                       {"person_id", seg.person_id},
                       {"start", format_iso8601(track.front().timestamp)},
                       {"end", format_iso8601(track.back().timestamp)},
                       {"points", track.size()},
                       {"distance_m", track_distance(track)}};
    out << obj.dump() << '\n';
  }
}

}  // namespace tracegap
