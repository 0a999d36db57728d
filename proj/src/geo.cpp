#include "tracegap/geo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace tracegap {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

void check_coords(double lat, double lon, std::size_t line_no) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": coordinate out of range");
  }
}

// Split a csv row on commas; the input format forbids quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(',', pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

}  // namespace

double haversine(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

std::vector<Trajectory> parse_trajectories(std::istream& stream,
                                           InputFormat format) {
  // map keeps person order deterministic (sorted by id)
  std::map<std::string, Trajectory> by_person;
  std::set<std::pair<std::string, EpochSeconds>> seen;

  std::string line;
  std::size_t line_no = 0;
  bool header_done = false;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::string person;
    EpochSeconds ts = 0;
    double lat = 0.0, lon = 0.0;
    if (format == InputFormat::Csv) {
      if (!header_done) {
        header_done = true;
        if (line == "person_id,timestamp,lat,lon") continue;
        // headerless input is accepted; fall through and parse the row
      }
      const auto fields = split_csv(line);
      if (fields.size() != 4) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": expected 4 fields, got " +
                                 std::to_string(fields.size()));
      }
      person = fields[0];
      try {
        ts = parse_iso8601(fields[1]);
        lat = std::stod(fields[2]);
        lon = std::stod(fields[3]);
      } catch (const std::exception& e) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": " +
                                 e.what());
      }
    } else {
      try {
        const auto obj = nlohmann::json::parse(line);
        person = obj.at("person_id").get<std::string>();
        ts = parse_iso8601(obj.at("timestamp").get<std::string>());
        lat = obj.at("lat").get<double>();
        lon = obj.at("lon").get<double>();
      } catch (const std::exception& e) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": " +
                                 e.what());
      }
    }
    check_coords(lat, lon, line_no);
    if (!seen.insert({person, ts}).second) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": duplicate timestamp for person " + person);
    }
    auto& traj = by_person[person];
    traj.person_id = person;
    traj.points.push_back({ts, lat, lon});
  }

  std::vector<Trajectory> out;
  out.reserve(by_person.size());
  for (auto& [id, traj] : by_person) {
    std::sort(traj.points.begin(), traj.points.end(),
              [](const GeoPoint& a, const GeoPoint& b) {
                return a.timestamp < b.timestamp;
              });
    out.push_back(std::move(traj));
  }
  return out;
}

void write_trajectories_csv(std::ostream& out,
                            const std::vector<Trajectory>& trajs) {
  out << "person_id,timestamp,lat,lon\n";
  char buf[64];
  for (const auto& traj : trajs) {
    for (const auto& p : traj.points) {
      std::snprintf(buf, sizeof(buf), ",%.7f,%.7f\n", p.lat, p.lon);
      out << traj.person_id << ',' << format_iso8601(p.timestamp) << buf;
    }
  }
}

CoverageStats coverage_stats(const Trajectory& traj, std::int64_t max_gap_s,
                             EpochSeconds window_start,
                             EpochSeconds window_end) {
  if (max_gap_s <= 0) throw std::invalid_argument("max_gap must be positive");
  if (window_end < window_start) {
    throw std::invalid_argument("window must be well-ordered");
  }
  CoverageStats stats;
  const std::int64_t window_len = window_end - window_start;

  // Fixes clipped to the window; covered time accumulates per run.
  std::vector<EpochSeconds> ts;
  for (const auto& p : traj.points) {
    if (p.timestamp >= window_start && p.timestamp <= window_end) {
      ts.push_back(p.timestamp);
    }
  }
  std::int64_t total_gap = 0;
  if (!ts.empty()) {
    EpochSeconds run_start = ts[0];
    for (std::size_t i = 1; i < ts.size(); ++i) {
      const std::int64_t dt = ts[i] - ts[i - 1];
      if (dt > max_gap_s) {
        stats.covered_time_s += ts[i - 1] - run_start;
        stats.gap_count += 1;
        total_gap += dt;
        run_start = ts[i];
      }
    }
    stats.covered_time_s += ts.back() - run_start;
  }
  stats.coverage_fraction =
      window_len > 0
          ? static_cast<double>(stats.covered_time_s) / window_len
          : 0.0;
  stats.mean_gap_length_s =
      stats.gap_count > 0 ? static_cast<double>(total_gap) / stats.gap_count
                          : 0.0;
  return stats;
}

std::vector<Trajectory> select_contiguous_sets(
    const std::vector<Trajectory>& trajs, std::int64_t min_span_s,
    std::int64_t max_gap_s) {
  if (min_span_s <= 0) throw std::invalid_argument("min_span must be positive");
  std::vector<Trajectory> sets;
  for (const auto& traj : trajs) {
    std::size_t run_begin = 0;
    for (std::size_t i = 1; i <= traj.points.size(); ++i) {
      const bool run_ends =
          i == traj.points.size() ||
          traj.points[i].timestamp - traj.points[i - 1].timestamp > max_gap_s;
      if (!run_ends) continue;
      const std::int64_t span =
          traj.points[i - 1].timestamp - traj.points[run_begin].timestamp;
      if (span >= min_span_s) {
        Trajectory slice;
        slice.person_id = traj.person_id;
        slice.points.assign(traj.points.begin() + run_begin,
                            traj.points.begin() + i);
        sets.push_back(std::move(slice));
      }
      run_begin = i;
    }
  }
  return sets;
}

Trajectory filter_implausible_speeds(const Trajectory& traj,
                                     double max_speed_mps) {
  Trajectory out;
  out.person_id = traj.person_id;
  const auto& pts = traj.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool fast_to_prev = false, fast_to_next = false;
    if (i > 0) {
      const double dt = static_cast<double>(pts[i].timestamp -
                                            pts[i - 1].timestamp);
      fast_to_prev = dt > 0 && haversine(pts[i - 1], pts[i]) / dt >
                                   max_speed_mps;
    }
    if (i + 1 < pts.size()) {
      const double dt = static_cast<double>(pts[i + 1].timestamp -
                                            pts[i].timestamp);
      fast_to_next = dt > 0 && haversine(pts[i], pts[i + 1]) / dt >
                                   max_speed_mps;
    }
    // Only interior fixes can be confirmed implausible against both sides.
    if (fast_to_prev && fast_to_next) continue;
    out.points.push_back(pts[i]);
  }
  return out;
}

}  // namespace tracegap
