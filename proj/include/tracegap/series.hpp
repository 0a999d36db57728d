#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tracegap/segmentation.hpp"

namespace tracegap {

enum class Metric { TravelDistanceKm, TripCount, RadiusOfGyrationKm };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);

/// A fixed-interval metric time series with a response mask. Missing
/// elements hold NaN and response[t] == false. Element t covers the
/// wall-clock span [start + t*interval, start + (t+1)*interval).
struct MetricSeries {
  std::string person_id;
  std::string set_id;
  Metric metric = Metric::TravelDistanceKm;
  std::int64_t interval_s = 15 * kSecondsPerMinute;
  EpochSeconds start = 0;
  std::vector<double> values;
  std::vector<bool> response;

  std::size_t size() const { return values.size(); }
  EpochSeconds element_time(std::size_t t) const {
    return start + static_cast<std::int64_t>(t) * interval_s;
  }
};

/// A maximal run of missing elements: [start_index, end_index) missing,
/// end_index is the first observed element after (== size() when the run
/// touches the series end). Indices are zero-based.
struct GapSpec {
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  bool has_pre_anchor = true;   // an observed element exists before
  bool has_post_anchor = true;  // an observed element exists after

  std::size_t length() const { return end_index - start_index; }
};

/// Aligned per-person series for several metrics sharing one response
/// mask, interval, start and length.
struct SeriesBundle {
  std::vector<MetricSeries> series;

  const MetricSeries& get(Metric m) const;
  MetricSeries& get(Metric m);
};

/// A series slice paired with the wall-clock time of each element; the
/// unit handed to the DTW engine.
struct TimedValues {
  std::vector<double> values;
  std::vector<EpochSeconds> times;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

struct DiscretizeParams {
  std::int64_t interval_s = 15 * kSecondsPerMinute;
  std::int64_t max_gap_s = 6 * kSecondsPerMinute;  // six-minute rule
  std::int64_t utc_offset_s = 0;  // dataset timezone; grid aligns to local day
};

/// Discretizes a segmented set into one metric series. Travel distance
/// splits each segment across interval boundaries by time-ratio; trip
/// count counts tracks touching the interval; radius of gyration is the
/// RMS dispersion of the fixes inside the interval. An interval is missing
/// when an uncovered span longer than max_gap_s overlaps it.
MetricSeries discretize(const SegmentedDay& seg, const DiscretizeParams& params,
                        Metric metric, const std::string& set_id = "0");

/// All three metrics on one shared mask/grid.
SeriesBundle discretize_bundle(const SegmentedDay& seg,
                               const DiscretizeParams& params,
                               const std::string& set_id = "0");

/// Maximal missing runs, in order. Leading/trailing runs are included with
/// the corresponding anchor flag cleared.
std::vector<GapSpec> find_gaps(const MetricSeries& series);

struct QuerySplit {
  TimedValues pre;
  TimedValues post;
};

/// Up to floor(match_buffer/interval) contiguous observed elements on each
/// side of the gap. Shorter slices are returned when the series boundary
/// or another gap intrudes. Throws when nothing is observed on either
/// side.
QuerySplit split_query(const MetricSeries& series, const GapSpec& gap,
                       std::int64_t match_buffer_s);

/// `series-csv` export: one row per element, missing values serialized as
/// an empty field with observed=0.
void write_series_csv(std::ostream& out,
                      const std::vector<MetricSeries>& series);
std::vector<MetricSeries> read_series_csv(std::istream& in);

}  // namespace tracegap
