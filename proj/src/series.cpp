#include "tracegap/series.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tracegap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Consecutive-point segments of the full segmented timeline: simplified
// track legs plus within-stay micro-movement between member fixes.
struct Segment {
  GeoPoint a;
  GeoPoint b;
};

std::vector<Segment> collect_segments(const SegmentedDay& seg) {
  std::vector<Segment> out;
  for (const auto& track : seg.tracks) {
    for (std::size_t i = 1; i < track.size(); ++i) {
      out.push_back({track[i - 1], track[i]});
    }
  }
  for (const auto& stay : seg.stays) {
    for (std::size_t i = 1; i < stay.members.size(); ++i) {
      out.push_back({stay.members[i - 1], stay.members[i]});
    }
  }
  return out;
}

std::vector<GeoPoint> collect_points(const SegmentedDay& seg) {
  std::vector<GeoPoint> out;
  for (const auto& track : seg.tracks) {
    out.insert(out.end(), track.begin(), track.end());
  }
  for (const auto& stay : seg.stays) {
    out.insert(out.end(), stay.members.begin(), stay.members.end());
  }
  return out;
}

std::vector<bool> response_mask(const std::vector<EpochSeconds>& fix_times,
                                EpochSeconds start, std::int64_t interval_s,
                                std::size_t n, std::int64_t max_gap_s) {
  std::vector<bool> observed(n, true);
  auto mark_span = [&](EpochSeconds a, EpochSeconds b) {
    // uncovered open span (a, b): an interval is missing when more than
    // max_gap_s of it is uncovered
    if (b <= a) return;
    const std::int64_t first =
        std::max<std::int64_t>(0, (a - start) / interval_s);
    for (std::int64_t t = first; t < static_cast<std::int64_t>(n); ++t) {
      const EpochSeconds lo = start + t * interval_s;
      const EpochSeconds hi = lo + interval_s;
      if (lo >= b) break;
      const std::int64_t overlap = std::min(b, hi) - std::max(a, lo);
      if (overlap > max_gap_s) observed[static_cast<std::size_t>(t)] = false;
    }
  };
  mark_span(start, fix_times.front());
  for (std::size_t i = 1; i < fix_times.size(); ++i) {
    mark_span(fix_times[i - 1], fix_times[i]);
  }
  mark_span(fix_times.back(), start + static_cast<std::int64_t>(n) * interval_s);
  return observed;
}

}  // namespace

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::TravelDistanceKm: return "travel_distance_km";
    case Metric::TripCount: return "trip_count";
    case Metric::RadiusOfGyrationKm: return "radius_of_gyration_km";
  }
  throw std::logic_error("unknown metric");
}

Metric metric_from_name(const std::string& name) {
  if (name == "travel_distance_km") return Metric::TravelDistanceKm;
  if (name == "trip_count") return Metric::TripCount;
  if (name == "radius_of_gyration_km") return Metric::RadiusOfGyrationKm;
  throw std::invalid_argument("unknown metric: " + name);
}

const MetricSeries& SeriesBundle::get(Metric m) const {
  for (const auto& s : series) {
    if (s.metric == m) return s;
  }
  throw std::out_of_range("metric not in bundle: " + metric_name(m));
}

MetricSeries& SeriesBundle::get(Metric m) {
  return const_cast<MetricSeries&>(
      static_cast<const SeriesBundle&>(*this).get(m));
}

MetricSeries discretize(const SegmentedDay& seg, const DiscretizeParams& params,
                        Metric metric, const std::string& set_id) {
  if (seg.fix_times.empty()) {
    throw std::invalid_argument("discretize: segmented input is empty");
  }
  if (params.interval_s <= 0 || kSecondsPerDay % params.interval_s != 0) {
    throw std::invalid_argument("interval must divide 24 h evenly");
  }
  const std::int64_t interval = params.interval_s;
  const EpochSeconds t0 = seg.fix_times.front();
  const EpochSeconds t1 = seg.fix_times.back();
  // Grid aligned to the local day so wall-clock strata land on element
  // boundaries.
  const EpochSeconds local0 = t0 + params.utc_offset_s;
  EpochSeconds local_start = (local0 / interval) * interval;
  if (local0 < 0 && local0 % interval != 0) local_start -= interval;
  const EpochSeconds start = local_start - params.utc_offset_s;
  const std::size_t n =
      static_cast<std::size_t>((t1 - start) / interval) + 1;

  MetricSeries out;
  out.person_id = seg.person_id;
  out.set_id = set_id;
  out.metric = metric;
  out.interval_s = interval;
  out.start = start;
  out.response =
      response_mask(seg.fix_times, start, interval, n, params.max_gap_s);
  out.values.assign(n, 0.0);

  switch (metric) {
    case Metric::TravelDistanceKm: {
      for (const auto& s : collect_segments(seg)) {
        const double km = haversine(s.a, s.b) / 1000.0;
        const EpochSeconds a = s.a.timestamp, b = s.b.timestamp;
        if (b <= a) {
          const std::int64_t t = (a - start) / interval;
          out.values[static_cast<std::size_t>(t)] += km;
          continue;
        }
        const std::int64_t first = (a - start) / interval;
        for (std::int64_t t = first; t < static_cast<std::int64_t>(n); ++t) {
          const EpochSeconds lo = start + t * interval;
          const EpochSeconds hi = lo + interval;
          if (lo >= b) break;
          const std::int64_t overlap = std::min(b, hi) - std::max(a, lo);
          if (overlap > 0) {
            out.values[static_cast<std::size_t>(t)] +=
                km * static_cast<double>(overlap) / static_cast<double>(b - a);
          }
        }
      }
      break;
    }
    case Metric::TripCount: {
      // A track counts in every interval it touches.
      for (const auto& track : seg.tracks) {
        if (track.empty()) continue;
        const std::int64_t first = (track.front().timestamp - start) / interval;
        const std::int64_t last = (track.back().timestamp - start) / interval;
        for (std::int64_t t = first;
             t <= last && t < static_cast<std::int64_t>(n); ++t) {
          out.values[static_cast<std::size_t>(t)] += 1.0;
        }
      }
      break;
    }
    case Metric::RadiusOfGyrationKm: {
      auto points = collect_points(seg);
      std::sort(points.begin(), points.end(),
                [](const GeoPoint& a, const GeoPoint& b) {
                  return a.timestamp < b.timestamp;
                });
      std::size_t i = 0;
      for (std::size_t t = 0; t < n; ++t) {
        const EpochSeconds hi = start + static_cast<std::int64_t>(t + 1) * interval;
        std::vector<GeoPoint> in_interval;
        while (i < points.size() && points[i].timestamp < hi) {
          in_interval.push_back(points[i]);
          ++i;
        }
        out.values[t] =
            in_interval.empty() ? 0.0
                                : radius_of_gyration(in_interval) / 1000.0;
      }
      break;
    }
  }

  for (std::size_t t = 0; t < n; ++t) {
    if (!out.response[t]) out.values[t] = kNaN;
  }
  return out;
}

SeriesBundle discretize_bundle(const SegmentedDay& seg,
                               const DiscretizeParams& params,
                               const std::string& set_id) {
  SeriesBundle bundle;
  for (Metric m : {Metric::TravelDistanceKm, Metric::TripCount,
                   Metric::RadiusOfGyrationKm}) {
    bundle.series.push_back(discretize(seg, params, m, set_id));
  }
  return bundle;
}

std::vector<GapSpec> find_gaps(const MetricSeries& series) {
  std::vector<GapSpec> gaps;
  const std::size_t n = series.size();
  std::size_t t = 0;
  while (t < n) {
    if (series.response[t]) {
      ++t;
      continue;
    }
    GapSpec gap;
    gap.start_index = t;
    while (t < n && !series.response[t]) ++t;
    gap.end_index = t;
    gap.has_pre_anchor = gap.start_index > 0;
    gap.has_post_anchor = gap.end_index < n;
    gaps.push_back(gap);
  }
  return gaps;
}

QuerySplit split_query(const MetricSeries& series, const GapSpec& gap,
                       std::int64_t match_buffer_s) {
  if (match_buffer_s < series.interval_s) {
    throw std::invalid_argument("match_buffer must be at least one interval");
  }
  const std::size_t n_buf =
      static_cast<std::size_t>(match_buffer_s / series.interval_s);
  QuerySplit split;
  // walk back over contiguous observed elements
  std::size_t i = gap.start_index;
  while (i > 0 && series.response[i - 1] && split.pre.size() < n_buf) --i;
  for (std::size_t t = i; t < gap.start_index; ++t) {
    split.pre.values.push_back(series.values[t]);
    split.pre.times.push_back(series.element_time(t));
  }
  for (std::size_t t = gap.end_index;
       t < series.size() && series.response[t] && split.post.size() < n_buf;
       ++t) {
    split.post.values.push_back(series.values[t]);
    split.post.times.push_back(series.element_time(t));
  }
  if (split.pre.empty() && split.post.empty()) {
    throw std::runtime_error(
        "split_query: nothing observed on either side of the gap");
  }
  return split;
}

void write_series_csv(std::ostream& out,
                      const std::vector<MetricSeries>& series) {
  out << "person_id,set_id,metric,interval_s,start_iso,index,value,observed\n";
  char buf[32];
  for (const auto& s : series) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      out << s.person_id << ',' << s.set_id << ',' << metric_name(s.metric)
          << ',' << s.interval_s << ',' << format_iso8601(s.start) << ',' << t
          << ',';
      if (s.response[t]) {
        std::snprintf(buf, sizeof(buf), "%.9g", s.values[t]);
        out << buf << ",1\n";
      } else {
        out << ",0\n";
      }
    }
  }
}

std::vector<MetricSeries> read_series_csv(std::istream& in) {
  std::vector<MetricSeries> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;
    std::stringstream row(line);
    std::string person, set_id, metric, interval, start, index, value, observed;
    if (!std::getline(row, person, ',') || !std::getline(row, set_id, ',') ||
        !std::getline(row, metric, ',') || !std::getline(row, interval, ',') ||
        !std::getline(row, start, ',') || !std::getline(row, index, ',') ||
        !std::getline(row, value, ',')) {
      throw std::runtime_error("series-csv line " + std::to_string(line_no) +
                               ": malformed row");
    }
    std::getline(row, observed, ',');
    if (out.empty() || out.back().person_id != person ||
        out.back().set_id != set_id ||
        out.back().metric != metric_from_name(metric)) {
      MetricSeries s;
      s.person_id = person;
      s.set_id = set_id;
      s.metric = metric_from_name(metric);
      s.interval_s = std::stoll(interval);
      s.start = parse_iso8601(start);
      out.push_back(std::move(s));
    }
    auto& s = out.back();
    const bool obs = observed == "1";
    s.values.push_back(obs ? std::stod(value) : kNaN);
    s.response.push_back(obs);
  }
  return out;
}

}  // namespace tracegap
