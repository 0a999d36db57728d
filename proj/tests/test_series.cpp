#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "tracegap/rng.hpp"
#include "tracegap/series.hpp"

using namespace tracegap;

namespace {

// exact metre-per-degree along a meridian for the library's sphere radius
constexpr double kMetersPerDegLat = kEarthRadiusMeters * M_PI / 180.0;

GeoPoint north(EpochSeconds ts, double meters) {
  return {ts, meters / kMetersPerDegLat, 5.0};
}

// one track A->B->C (2.5 km then 4.3 km, one leg per interval), then a
// stay with millimetre-scale jitter: ~{2.5, 4.3, .001, .0014}
SegmentedDay figure_fixture() {
  SegmentedDay seg;
  seg.person_id = "p1";
  seg.tracks.push_back(
      {north(0, 0), north(900, 2500), north(1800, 6800)});
  StayPoint stay;
  stay.arrive = 1800;
  stay.depart = 3600;
  stay.members = {north(1800, 6800), north(2000, 6801),   // 1 m in interval 2
                  north(2300, 6801), north(2600, 6801),
                  north(2750, 6801), north(2800, 6802.4),  // 1.4 m in interval 3
                  north(3100, 6802.4), north(3400, 6802.4),
                  north(3599, 6802.4)};
  stay.lat = stay.members[4].lat;
  stay.lon = 5.0;
  seg.stays.push_back(stay);
  // original sampling was dense; segments above are the simplified view
  for (EpochSeconds t = 0; t <= 3540; t += 60) seg.fix_times.push_back(t);
  return seg;
}

DiscretizeParams default_params() {
  DiscretizeParams p;
  p.interval_s = 900;
  p.max_gap_s = 360;
  return p;
}

}  // namespace

TEST_CASE("discretize reproduces the four-interval travel fixture") {
  const auto series =
      discretize(figure_fixture(), default_params(), Metric::TravelDistanceKm);
  REQUIRE(series.size() == 4);
  CHECK(series.values[0] == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(series.values[1] == doctest::Approx(4.3).epsilon(1e-9));
  CHECK(series.values[2] == doctest::Approx(0.001).epsilon(1e-6));
  CHECK(series.values[3] == doctest::Approx(0.0014).epsilon(1e-6));
  for (std::size_t t = 0; t < 4; ++t) CHECK(series.response[t]);
}

TEST_CASE("sixteen-minute silence marks exactly one interval missing") {
  SegmentedDay seg;
  seg.person_id = "p1";
  StayPoint stay;
  stay.arrive = 0;
  stay.depart = 3599;
  for (EpochSeconds t = 0; t <= 960; t += 60) {
    stay.members.push_back(north(t, 0));
  }
  // silence 960 -> 1920 (16 minutes): 14 min of interval 1 uncovered,
  // 2 min of interval 2 — only interval 1 crosses the six-minute rule
  for (EpochSeconds t = 1920; t < 3600; t += 60) {
    stay.members.push_back(north(t, 0));
  }
  seg.stays.push_back(stay);
  for (const auto& m : seg.stays[0].members) seg.fix_times.push_back(m.timestamp);

  const auto series =
      discretize(seg, default_params(), Metric::TravelDistanceKm);
  REQUIRE(series.size() == 4);
  CHECK(series.response == std::vector<bool>{true, false, true, true});
  CHECK(std::isnan(series.values[1]));

  const auto gaps = find_gaps(series);
  REQUIRE(gaps.size() == 1);
  CHECK(gaps[0].start_index == 1);  // paper's t=2 in its 1-based convention
  CHECK(gaps[0].end_index == 2);
  CHECK(gaps[0].length() == 1);
  CHECK(gaps[0].has_pre_anchor);
  CHECK(gaps[0].has_post_anchor);
}

TEST_CASE("stationary day is all zeros, all observed") {
  SegmentedDay seg;
  seg.person_id = "p1";
  StayPoint stay;
  stay.arrive = 0;
  stay.depart = kSecondsPerDay;
  for (EpochSeconds t = 0; t < kSecondsPerDay; t += 300) {
    stay.members.push_back(north(t, 0));
  }
  seg.stays.push_back(stay);
  for (const auto& m : stay.members) seg.fix_times.push_back(m.timestamp);
  const auto series =
      discretize(seg, default_params(), Metric::TravelDistanceKm);
  for (std::size_t t = 0; t < series.size(); ++t) {
    CHECK(series.response[t]);
    CHECK(series.values[t] == 0.0);
  }
}

TEST_CASE("travel-distance conservation under boundary splitting") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    SegmentedDay seg;
    seg.person_id = "p1";
    std::vector<GeoPoint> track;
    EpochSeconds now = static_cast<EpochSeconds>(rng.next_index(900));
    double pos = 0.0;
    for (int i = 0; i < 40; ++i) {
      track.push_back(north(now, pos));
      now += 60 + static_cast<EpochSeconds>(rng.next_index(240));
      pos += rng.next_double() * 800.0;
    }
    seg.tracks.push_back(track);
    // dense original sampling so every interval stays observed
    const EpochSeconds last =
        ((track.back().timestamp / 900) + 1) * 900 - 60;
    for (EpochSeconds t = 0; t <= last; t += 60) seg.fix_times.push_back(t);

    const auto series =
        discretize(seg, default_params(), Metric::TravelDistanceKm);
    double total = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
      REQUIRE(series.response[t]);
      total += series.values[t];
    }
    double expected = 0.0;
    for (std::size_t i = 1; i < track.size(); ++i) {
      expected += haversine(track[i - 1], track[i]) / 1000.0;
    }
    CHECK(total == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("discretize is deterministic") {
  const auto seg = figure_fixture();
  const auto a = discretize(seg, default_params(), Metric::TravelDistanceKm);
  const auto b = discretize(seg, default_params(), Metric::TravelDistanceKm);
  CHECK(a.values == b.values);
  CHECK(a.response == b.response);
  CHECK(a.start == b.start);
}

TEST_CASE("trip count touches every spanned interval") {
  SegmentedDay seg;
  seg.person_id = "p1";
  seg.tracks.push_back({north(100, 0), north(2000, 4000)});   // intervals 0-2
  seg.tracks.push_back({north(2750, 4000), north(2800, 4500)});  // interval 3
  for (EpochSeconds t = 0; t <= 3599; t += 300) seg.fix_times.push_back(t);
  const auto series = discretize(seg, default_params(), Metric::TripCount);
  REQUIRE(series.size() == 4);
  CHECK(series.values[0] == 1.0);
  CHECK(series.values[1] == 1.0);
  CHECK(series.values[2] == 1.0);
  CHECK(series.values[3] == 1.0);
}

TEST_CASE("radius of gyration per interval") {
  SegmentedDay seg;
  seg.person_id = "p1";
  StayPoint stay;
  stay.arrive = 0;
  stay.depart = 1800;
  // interval 0: two clusters 1000 m apart -> RoG 500 m; interval 1: single spot
  stay.members = {north(0, 0), north(300, 1000), north(600, 0),
                  north(880, 1000), north(900, 500), north(1200, 500),
                  north(1500, 500), north(1799, 500)};
  seg.stays.push_back(stay);
  for (const auto& m : stay.members) seg.fix_times.push_back(m.timestamp);
  const auto series =
      discretize(seg, default_params(), Metric::RadiusOfGyrationKm);
  REQUIRE(series.size() == 2);
  CHECK(series.values[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(series.values[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("find_gaps handles runs and boundaries") {
  MetricSeries s;
  s.interval_s = 900;
  SUBCASE("all observed") {
    s.values = {1, 2, 3};
    s.response = {true, true, true};
    CHECK(find_gaps(s).empty());
  }
  SUBCASE("interior run of three") {
    s.values = {1, NAN, NAN, NAN, 1};
    s.response = {true, false, false, false, true};
    const auto gaps = find_gaps(s);
    REQUIRE(gaps.size() == 1);
    CHECK(gaps[0].start_index == 1);
    CHECK(gaps[0].length() == 3);
  }
  SUBCASE("leading and trailing runs flagged") {
    s.values = {NAN, 1, NAN};
    s.response = {false, true, false};
    const auto gaps = find_gaps(s);
    REQUIRE(gaps.size() == 2);
    CHECK_FALSE(gaps[0].has_pre_anchor);
    CHECK(gaps[0].has_post_anchor);
    CHECK(gaps[1].has_pre_anchor);
    CHECK_FALSE(gaps[1].has_post_anchor);
  }
  SUBCASE("gap runs reconstruct the mask") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      MetricSeries r;
      r.interval_s = 900;
      for (int i = 0; i < 40; ++i) {
        const bool obs = rng.next_double() < 0.7;
        r.response.push_back(obs);
        r.values.push_back(obs ? 1.0 : NAN);
      }
      std::vector<bool> rebuilt(r.size(), true);
      for (const auto& gap : find_gaps(r)) {
        CHECK(gap.length() >= 1);
        for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
          rebuilt[t] = false;
        }
      }
      CHECK(rebuilt == r.response);
    }
  }
}

TEST_CASE("split_query buffers") {
  MetricSeries s;
  s.interval_s = 900;
  s.values = {2.5, NAN, 0.001, 0.0014};
  s.response = {true, false, true, true};
  GapSpec gap{1, 2};

  SUBCASE("buffer of one interval") {
    const auto split = split_query(s, gap, 900);
    CHECK(split.pre.values == std::vector<double>{2.5});
    CHECK(split.post.values == std::vector<double>{0.001});
  }
  SUBCASE("buffer of 30 minutes or more takes both trailing elements") {
    const auto split = split_query(s, gap, 1800);
    CHECK(split.pre.values == std::vector<double>{2.5});
    CHECK(split.post.values == std::vector<double>{0.001, 0.0014});
  }
  SUBCASE("gap at series start yields empty pre") {
    MetricSeries lead;
    lead.interval_s = 900;
    lead.values = {NAN, 1.0, 2.0};
    lead.response = {false, true, true};
    const auto split = split_query(lead, GapSpec{0, 1}, 1800);
    CHECK(split.pre.empty());
    CHECK(split.post.values == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("nothing observed on either side is an error") {
    MetricSeries hollow;
    hollow.interval_s = 900;
    hollow.values = {NAN, NAN};
    hollow.response = {false, false};
    CHECK_THROWS(split_query(hollow, GapSpec{0, 2}, 900));
  }
}

TEST_CASE("series csv round trip") {
  const auto seg = figure_fixture();
  DiscretizeParams params = default_params();
  const auto bundle = discretize_bundle(seg, params, "s3");
  std::ostringstream first;
  write_series_csv(first, bundle.series);
  std::istringstream reread(first.str());
  const auto parsed = read_series_csv(reread);
  std::ostringstream second;
  write_series_csv(second, parsed);
  CHECK(first.str() == second.str());
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[0].set_id == "s3");
  CHECK(parsed[0].interval_s == 900);
}

TEST_CASE("bundle series share mask and grid") {
  const auto bundle = discretize_bundle(figure_fixture(), default_params());
  REQUIRE(bundle.series.size() == 3);
  for (const auto& s : bundle.series) {
    CHECK(s.response == bundle.series[0].response);
    CHECK(s.start == bundle.series[0].start);
    CHECK(s.size() == bundle.series[0].size());
  }
  CHECK(&bundle.get(Metric::TripCount) == &bundle.series[1]);
}

TEST_CASE("discretize rejects bad input") {
  CHECK_THROWS(discretize(SegmentedDay{}, default_params(),
                          Metric::TravelDistanceKm));
  DiscretizeParams bad = default_params();
  bad.interval_s = 7000;  // does not divide a day
  CHECK_THROWS(discretize(figure_fixture(), bad, Metric::TravelDistanceKm));
}
