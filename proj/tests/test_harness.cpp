#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "tracegap/harness.hpp"
#include "tracegap/synth.hpp"

using namespace tracegap;

namespace {

Dataset build_dataset(const std::vector<Trajectory>& trajs) {
  Dataset dataset;
  SegmentationParams seg_params;
  DiscretizeParams disc_params;
  std::map<std::string, std::size_t> counter;
  for (const Trajectory& raw : trajs) {
    for (Trajectory& set : select_contiguous_sets(
             {raw}, 24 * kSecondsPerHour, 6 * kSecondsPerMinute)) {
      const std::string set_id = "s" + std::to_string(counter[set.person_id]++);
      const SegmentedDay seg = segment_trajectory(set, seg_params);
      DataSet ds;
      ds.bundle = discretize_bundle(seg, disc_params, set_id);
      ds.traj = std::move(set);
      dataset.sets.push_back(std::move(ds));
    }
  }
  return dataset;
}

Dataset small_dataset(std::size_t persons = 6, std::size_t days = 2,
                      std::uint64_t seed = 3) {
  SynthParams params;
  params.n_persons = persons;
  params.days = days;
  params.seed = seed;
  return build_dataset(synth_trajectories(params).trajectories);
}

MetricSeries pattern_series(const std::vector<double>& values) {
  MetricSeries s;
  s.person_id = "q";
  s.set_id = "s0";
  s.interval_s = 900;
  s.values = values;
  s.response.assign(values.size(), true);
  return s;
}

ImputationResult as_result(const MetricSeries& base,
                           const std::vector<std::vector<double>>& fills,
                           const GapSpec& gap) {
  ImputationResult r;
  for (const auto& fill : fills) {
    MetricSeries c = base;
    for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
      c.values[t] = fill[t - gap.start_index];
    }
    r.completed.push_back(std::move(c));
    r.donors.push_back(std::nullopt);
  }
  return r;
}

}  // namespace

TEST_CASE("induce_missingness") {
  const Dataset dataset = small_dataset();
  REQUIRE(dataset.sets.size() >= 4);
  HarnessConfig config;
  config.master_seed = 5;

  SUBCASE("n_affected zero leaves the data untouched") {
    Scenario s;
    s.n_affected = 0;
    const auto [masked, cases] = induce_missingness(dataset, s, config);
    CHECK(cases.empty());
    for (std::size_t i = 0; i < dataset.sets.size(); ++i) {
      CHECK(masked.sets[i].bundle.series[0].response ==
            dataset.sets[i].bundle.series[0].response);
    }
  }
  SUBCASE("a one-hour gap masks exactly four 15-minute elements") {
    Scenario s;
    s.gap_length_s = kSecondsPerHour;
    s.n_affected = 3;
    const auto [masked, cases] = induce_missingness(dataset, s, config);
    REQUIRE(cases.size() == 3);
    for (const auto& gap_case : cases) {
      CHECK(gap_case.gap.length() == 4);
      const auto& series = masked.sets[gap_case.set_index].bundle.series[0];
      for (std::size_t t = gap_case.gap.start_index;
           t < gap_case.gap.end_index; ++t) {
        CHECK_FALSE(series.response[t]);
        CHECK(std::isnan(series.values[t]));
      }
      // observed anchors on both sides
      CHECK(series.response[gap_case.gap.start_index - 1]);
      CHECK(series.response[gap_case.gap.end_index]);
    }
  }
  SUBCASE("night-only gaps sit inside the night window") {
    Scenario s;
    s.gap_length_s = kSecondsPerHour;
    s.n_affected = 2;
    s.time_of_day = TimeOfDay::NightOnly;
    const auto [masked, cases] = induce_missingness(dataset, s, config);
    for (const auto& gap_case : cases) {
      const auto& series = masked.sets[gap_case.set_index].bundle.series[0];
      for (std::size_t t = gap_case.gap.start_index;
           t < gap_case.gap.end_index; ++t) {
        CHECK(is_night(series.element_time(t), 0));
        CHECK(is_night(series.element_time(t) + series.interval_s - 1, 0));
      }
    }
  }
  SUBCASE("same seed gives identical cases") {
    Scenario s;
    s.n_affected = 3;
    const auto a = induce_missingness(dataset, s, config);
    const auto b = induce_missingness(dataset, s, config);
    REQUIRE(a.second.size() == b.second.size());
    for (std::size_t i = 0; i < a.second.size(); ++i) {
      CHECK(a.second[i].set_index == b.second[i].set_index);
      CHECK(a.second[i].gap.start_index == b.second[i].gap.start_index);
    }
  }
  SUBCASE("insufficient eligible sets is an error") {
    Scenario s;
    s.n_affected = 1000;
    CHECK_THROWS_AS(induce_missingness(dataset, s, config),
                    std::runtime_error);
  }
}

TEST_CASE("score") {
  const GapSpec gap{2, 6};
  SUBCASE("perfect imputation") {
    const auto truth =
        pattern_series({0, 0.5, 0.2, 0, 0.3, 0.05, 0.9, 0});
    const auto result = as_result(truth, {{0.2, 0, 0.3, 0.05}}, gap);
    const auto s = score(truth, result, gap, 0.1);
    CHECK(s.signed_bias_km == 0.0);
    CHECK(s.tp_over_num == 0.0);
    CHECK(s.tp_under_num == 0.0);
    CHECK(s.tp_agree == s.tp_total);
  }
  SUBCASE("all travel imputed as stationary") {
    const auto truth = pattern_series({0, 0, 1, 1, 1, 1, 0, 0});
    const auto result = as_result(truth, {{0, 0, 0, 0}}, gap);
    const auto s = score(truth, result, gap, 0.1);
    CHECK(s.tp_under_num == s.tp_under_den);
    CHECK(s.tp_over_num == 0.0);
    CHECK(s.tp_under_den == 4.0);
  }
  SUBCASE("brute-force confusion oracle on random length-8 patterns") {
    Rng rng(41);
    const GapSpec full{0, 8};
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> truth_vals(8), imp_vals(8);
      for (int i = 0; i < 8; ++i) {
        truth_vals[i] = rng.next_double() < 0.5 ? 0.0 : 0.5;
        imp_vals[i] = rng.next_double() < 0.5 ? 0.0 : 0.5;
      }
      const auto truth = pattern_series(truth_vals);
      const auto result = as_result(truth, {imp_vals}, full);
      const auto s = score(truth, result, full, 0.1);

      int fp = 0, fn = 0, tp = 0, tn = 0;
      for (int i = 0; i < 8; ++i) {
        const bool tt = truth_vals[i] >= 0.1;
        const bool ti = imp_vals[i] >= 0.1;
        if (tt && ti) ++tp;
        if (tt && !ti) ++fn;
        if (!tt && ti) ++fp;
        if (!tt && !ti) ++tn;
      }
      CHECK(s.tp_over_num == doctest::Approx(fp));
      CHECK(s.tp_over_den == doctest::Approx(fp + tn));
      CHECK(s.tp_under_num == doctest::Approx(fn));
      CHECK(s.tp_under_den == doctest::Approx(tp + fn));
      CHECK(s.tp_agree == doctest::Approx(tp + tn));
      CHECK(s.tp_total == doctest::Approx(8));
    }
  }
  SUBCASE("multiple imputations average the counts") {
    const auto truth = pattern_series({0, 0, 0, 0, 0, 0, 0, 0});
    const GapSpec g{0, 2};
    // one imputation says travel, one says not: half a count each element
    const auto result = as_result(truth, {{0.5, 0.5}, {0.0, 0.0}}, g);
    const auto s = score(truth, result, g, 0.1);
    CHECK(s.tp_over_num == doctest::Approx(1.0));  // 2 elements x 0.5
    CHECK(s.tp_over_den == doctest::Approx(2.0));
    CHECK(s.signed_bias_km == doctest::Approx(0.5));
  }
}

TEST_CASE("aggregate") {
  GapScore a;
  a.signed_bias_km = 2.0;
  a.tp_over_num = 1;
  a.tp_over_den = 2;
  a.tp_agree = 3;
  a.tp_total = 4;
  GapScore b;
  b.signed_bias_km = -1.0;
  b.tp_under_num = 1;
  b.tp_under_den = 4;
  b.tp_agree = 4;
  b.tp_total = 4;
  const auto cell = aggregate({a, b}, 1);
  CHECK(cell.n_gaps == 2);
  CHECK(cell.skipped == 1);
  CHECK(cell.abs_bias_km == doctest::Approx(0.5));
  CHECK(cell.med_bias_km == doctest::Approx(0.5));
  CHECK(cell.dist_over_km == doctest::Approx(1.0));
  CHECK(cell.dist_under_km == doctest::Approx(0.5));
  // decomposition identity: dist_over - dist_under = mean signed bias
  CHECK(cell.dist_over_km - cell.dist_under_km == doctest::Approx(0.5));
  CHECK(cell.rmse == doctest::Approx(std::sqrt((4.0 + 1.0) / 2.0)));
  CHECK(cell.tp_over_pct == doctest::Approx(50.0));
  CHECK(cell.tp_under_pct == doctest::Approx(25.0));
  CHECK(cell.tp_acc_pct == doctest::Approx(100.0 * 7.0 / 8.0));
}

TEST_CASE("run_comparison basics") {
  const Dataset dataset = small_dataset();
  HarnessConfig config;
  config.master_seed = 9;
  Scenario s;
  s.gap_length_s = kSecondsPerHour;
  s.n_affected = 3;
  const std::vector<MethodSpec> methods{method_from_name("li"),
                                        method_from_name("mi")};
  const auto result = run_comparison(dataset, methods, {s}, config);
  CHECK_FALSE(result.rows.empty());
  CHECK(result.raw.size() == methods.size() * 3);

  SUBCASE("decomposition identity holds per cell") {
    for (const auto& row : result.rows) {
      if (row.cell.n_gaps == 0) continue;
      // |dist_over - dist_under| equals |mean signed bias| = abs_bias
      CHECK(std::abs(row.cell.dist_over_km - row.cell.dist_under_km) ==
            doctest::Approx(row.cell.abs_bias_km).epsilon(1e-9));
    }
  }
  SUBCASE("byte-identical reports for the same seed, any job count") {
    auto render = [&](unsigned jobs) {
      HarnessConfig c = config;
      c.jobs = jobs;
      const auto r = run_comparison(dataset, methods, {s}, c);
      std::ostringstream out;
      write_report_csv(out, r.rows, c.master_seed);
      return out.str();
    };
    const std::string one = render(1);
    CHECK(one == render(1));
    CHECK(one == render(4));
  }
}

TEST_CASE("method_from_name") {
  CHECK(method_from_name("li").kind == MethodKind::LI);
  CHECK(method_from_name("dtwbmi-hi").params.n_imputations == 3);
  CHECK(method_from_name("dtwbmi-lo").params.n_imputations == 10);
  CHECK(method_from_name("dtwbi").params.deterministic_best);
  CHECK_THROWS_AS(method_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("parameter grid shape and marginals") {
  const Dataset dataset = small_dataset(5, 2, 8);
  HarnessConfig config;
  config.master_seed = 2;
  Scenario s;
  s.gap_length_s = kSecondsPerHour;
  s.n_affected = 2;
  const auto grid = run_parameter_grid(dataset, {s}, config);
  CHECK(grid.cells.size() == 108);

  // exact marginal row labels
  std::vector<std::pair<std::string, std::string>> expected = {
      {"Candidate Specificity", "Low"},
      {"Candidate Specificity", "Medium"},
      {"Candidate Specificity", "High"},
      {"Match Buffer", "1 hour"},
      {"Match Buffer", "4 hours"},
      {"Match Buffer", "8 hours"},
      {"Time Window", "<1 hour"},
      {"Time Window", "<3 hours"},
      {"Time Window", "No Window"},
      {"Imputations", "1"},
      {"Imputations", "3"},
      {"Imputations", "5"},
      {"Imputations", "10"}};
  REQUIRE(grid.marginals.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(grid.marginals[i].section == expected[i].first);
    CHECK(grid.marginals[i].stratum == expected[i].second);
  }

  // marginal mean equals the mean of cell aggregates sharing the level
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& cell : grid.cells) {
    if (cell.buffer_h == 4) {
      sum += cell.cell.rmse;
      ++count;
    }
  }
  CHECK(count == 36);
  CHECK(grid.marginals[4].cell.rmse == doctest::Approx(sum / count));
}

TEST_CASE("own-sets experiment holds the pool constant") {
  SynthParams params;
  params.n_persons = 12;
  params.days = 2;
  params.sets_per_person = 1;
  params.seed = 19;
  auto trajs = synth_trajectories(params).trajectories;
  // two subjects with four sets each (separate trajectories share the id)
  SynthParams multi = params;
  multi.n_persons = 2;
  multi.sets_per_person = 4;
  multi.seed = 23;
  for (auto& t : synth_trajectories(multi).trajectories) {
    t.person_id = "m" + t.person_id;
    trajs.push_back(std::move(t));
  }
  const Dataset dataset = build_dataset(trajs);
  REQUIRE(dataset.own_set_count("mp000") == 4);

  HarnessConfig config;
  config.master_seed = 31;
  OwnSetsConfig own;
  own.levels = {0, 1};
  own.base_pool = 6;
  own.repetitions = 2;
  own.gap_lengths_s = {kSecondsPerHour};
  const auto rows = run_own_sets_experiment(dataset, own, config);
  // 2 levels x 3 methods overall + 1 gap x 3 methods x 2 levels
  CHECK(rows.size() == 2 * 3 + 1 * 3 * 2);
  for (const auto& row : rows) {
    CHECK((row.section == "own_sets_overall" ||
           row.section == "own_sets_by_gap"));
  }
}

TEST_CASE("report csv round trip") {
  ReportRow row;
  row.section = "overall";
  row.stratum = "all";
  row.method = "li";
  row.cell.abs_bias_km = 1.25;
  row.cell.rmse = 2.5;
  row.cell.n_gaps = 7;
  std::ostringstream out;
  write_report_csv(out, {row}, 99);
  CHECK(out.str().find("# seed=99") == 0);
  std::istringstream in(out.str());
  const auto parsed = read_report_csv(in);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].section == "overall");
  CHECK(parsed[0].cell.abs_bias_km == 1.25);
  CHECK(parsed[0].cell.n_gaps == 7);
}
