#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "tracegap/dtw.hpp"
#include "tracegap/rng.hpp"

using namespace tracegap;

namespace {

TimedValues tv(std::vector<double> values, std::int64_t step = 900,
               EpochSeconds t0 = 0) {
  TimedValues out;
  out.values = std::move(values);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.times.push_back(t0 + static_cast<std::int64_t>(i) * step);
  }
  return out;
}

// Exhaustive enumeration over all monotone warping paths (diagonal,
// vertical, horizontal moves), honoring the same constraints as the
// engine. Infinity means no feasible path. Only for tiny inputs.
double oracle_dtw(const TimedValues& q, const TimedValues& rho,
                  const AlignmentConstraints& c) {
  const std::size_t n = q.size(), m = rho.size();
  const auto passable = [&](std::size_t t, std::size_t j) {
    if (c.one_to_one && t != j) return false;
    if (c.sakoe_chiba &&
        std::llabs(static_cast<long long>(t) - static_cast<long long>(j)) >
            *c.sakoe_chiba) {
      return false;
    }
    if (c.time_window_s &&
        time_of_day_offset(q.times[t], rho.times[j]) > *c.time_window_s) {
      return false;
    }
    return true;
  };
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> dfs =
      [&](std::size_t t, std::size_t j, double acc) {
        if (!passable(t, j)) return;
        acc += std::abs(q.values[t] - rho.values[j]);
        if (acc >= best) return;
        if (t == n - 1 && (c.open_begin_end || j == m - 1)) {
          best = std::min(best, acc);
        }
        if (t + 1 < n && j + 1 < m) dfs(t + 1, j + 1, acc);
        if (t + 1 < n) dfs(t + 1, j, acc);
        if (j + 1 < m) dfs(t, j + 1, acc);
      };
  if (c.open_begin_end) {
    for (std::size_t j = 0; j < m; ++j) dfs(0, j, 0.0);
  } else {
    dfs(0, 0, 0.0);
  }
  return best;
}

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next_double() * 5.0;
  return v;
}

}  // namespace

TEST_CASE("cost_matrix") {
  CHECK(cost_matrix({1}, {1}) == std::vector<std::vector<double>>{{0.0}});
  const auto d = cost_matrix({2.5}, {2, 5});
  REQUIRE(d.size() == 1);
  CHECK(d[0][0] == 0.5);
  CHECK(d[0][1] == 2.5);
  CHECK_THROWS_AS(cost_matrix({}, {1}), std::invalid_argument);
  Rng rng(1);
  const auto rd = cost_matrix(random_values(rng, 4), random_values(rng, 5));
  for (const auto& row : rd) {
    for (const double x : row) CHECK(x >= 0.0);
  }
}

TEST_CASE("dtw_distance basics") {
  SUBCASE("identical series align on the diagonal at zero cost") {
    const auto q = tv({1.0, 2.0, 3.0, 4.0});
    const auto r = dtw_distance(q, q, {});
    CHECK(r.dissimilarity == 0.0);
    REQUIRE(r.path.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r.path[i] == std::pair<std::size_t, std::size_t>{i, i});
    }
  }
  SUBCASE("worked one-to-one slice") {
    AlignmentConstraints c;
    c.one_to_one = true;
    const auto r =
        dtw_distance(tv({2.5, 0.001, 0.0014}), tv({2, 0, 2}), c);
    CHECK(r.dissimilarity == 0.5 + 0.001 + 1.9986);  // 2.4996 exactly
  }
  SUBCASE("one_to_one rejects unequal lengths") {
    AlignmentConstraints c;
    c.one_to_one = true;
    CHECK_THROWS_AS(dtw_distance(tv({1, 2}), tv({1, 2, 3}), c),
                    std::invalid_argument);
  }
  SUBCASE("symmetric when unconstrained") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      const auto a = tv(random_values(rng, 5));
      const auto b = tv(random_values(rng, 5));
      CHECK(dtw_distance(a, b, {}).dissimilarity ==
            dtw_distance(b, a, {}).dissimilarity);
    }
  }
  SUBCASE("infeasible constraints raise, never return infinity") {
    AlignmentConstraints c;
    c.time_window_s = 0;  // only identical wall-clock matches allowed
    const auto q = tv({1.0, 2.0}, 900, 0);
    const auto rho = tv({1.0, 2.0}, 900, 450);  // everything offset 450 s
    CHECK_THROWS_AS(dtw_distance(q, rho, c), InfeasibleAlignmentError);
  }
}

TEST_CASE("dtw_distance equals exhaustive path enumeration") {
  Rng rng(17);
  int feasible_windowed = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.next_index(6);
    const std::size_t m = 1 + rng.next_index(6);
    const auto q = tv(random_values(rng, n));
    const auto rho = tv(random_values(rng, m));

    std::vector<AlignmentConstraints> combos;
    combos.push_back({});
    AlignmentConstraints sc;
    sc.sakoe_chiba = static_cast<int>(rng.next_index(3));
    combos.push_back(sc);
    AlignmentConstraints ob;
    ob.open_begin_end = true;
    combos.push_back(ob);
    AlignmentConstraints both = sc;
    both.open_begin_end = true;
    combos.push_back(both);
    AlignmentConstraints tw;
    tw.time_window_s = 1800;
    combos.push_back(tw);
    if (n == m) {
      AlignmentConstraints oo;
      oo.one_to_one = true;
      combos.push_back(oo);
    }

    for (const auto& c : combos) {
      const double expected = oracle_dtw(q, rho, c);
      if (std::isinf(expected)) {
        CHECK_THROWS_AS(dtw_distance(q, rho, c), InfeasibleAlignmentError);
      } else {
        CHECK(dtw_distance(q, rho, c).dissimilarity == expected);
        ++feasible_windowed;
      }
    }
  }
  CHECK(feasible_windowed > 500);  // the combos actually exercised paths
}

TEST_CASE("tightening constraints never lowers the optimum") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_index(5);
    const auto q = tv(random_values(rng, n));
    const auto rho = tv(random_values(rng, n));
    const double unconstrained = dtw_distance(q, rho, {}).dissimilarity;
    for (int w = 3; w >= 0; --w) {
      AlignmentConstraints c;
      c.sakoe_chiba = w;
      try {
        CHECK(dtw_distance(q, rho, c).dissimilarity >= unconstrained - 1e-12);
      } catch (const InfeasibleAlignmentError&) {
      }
    }
  }
}

TEST_CASE("one_to_one equals the L1 distance") {
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next_index(8);
    const auto q = tv(random_values(rng, n));
    const auto rho = tv(random_values(rng, n));
    AlignmentConstraints c;
    c.one_to_one = true;
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      l1 += std::abs(q.values[i] - rho.values[i]);
    }
    const auto r = dtw_distance(q, rho, c);
    CHECK(r.dissimilarity == l1);
    REQUIRE(r.path.size() == n);  // only one path exists
  }
}

TEST_CASE("no matched pair violates the time window") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = tv(random_values(rng, 5), 900, 0);
    const auto rho = tv(random_values(rng, 8), 900,
                        static_cast<EpochSeconds>(rng.next_index(4)) * 900);
    AlignmentConstraints c;
    c.time_window_s = 3600;
    c.open_begin_end = true;
    try {
      const auto r = dtw_distance(q, rho, c);
      for (const auto& [t, j] : r.path) {
        CHECK(time_of_day_offset(q.times[t], rho.times[j]) <= 3600);
      }
    } catch (const InfeasibleAlignmentError&) {
    }
  }
}

namespace {

ReferenceCollection worked_example_pool() {
  ReferenceCollection refs;
  auto add = [&](const std::string& name, std::vector<double> values) {
    MetricSeries s;
    s.person_id = name;
    s.set_id = "s0";
    s.interval_s = 900;
    s.start = 0;
    s.values = std::move(values);
    s.response.assign(s.values.size(), true);
    refs.donors.push_back({name, "s0", std::move(s)});
  };
  add("r1", {2, 5, 0, 2, 5});
  add("r2", {0, 0, 0, 1});
  add("r3", {1, 0, 2});
  return refs;
}

AlignmentConstraints one_to_one_constraints() {
  AlignmentConstraints c;
  c.one_to_one = true;
  c.sakoe_chiba = 0;
  return c;
}

}  // namespace

TEST_CASE("score_candidates reproduces the worked pool") {
  const auto refs = worked_example_pool();
  const auto q_pre = tv({2.5}, 900, 0);
  const auto q_post = tv({0.001, 0.0014}, 900, 1800);
  const auto results =
      score_candidates(q_pre, q_post, 1, 900, refs, one_to_one_constraints());
  REQUIRE(results.size() == 2);  // r3 is too short and must be omitted
  CHECK(results[0].donor_person == "r1");
  CHECK(results[0].dissimilarity == doctest::Approx(2.4996).epsilon(1e-12));
  CHECK(results[0].donor_gap_values == std::vector<double>{5.0});
  CHECK(results[1].donor_person == "r2");
  CHECK(results[1].dissimilarity == doctest::Approx(3.4996).epsilon(1e-12));
}

TEST_CASE("score_candidates rejects an empty pool distinctly") {
  const auto q_pre = tv({1.0});
  CHECK_THROWS_AS(score_candidates(q_pre, {}, 1, 0, ReferenceCollection{},
                                   one_to_one_constraints()),
                  std::invalid_argument);
}

TEST_CASE("score_candidates equals a brute-force placement loop") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    ReferenceCollection refs;
    const std::size_t n_donors = 1 + rng.next_index(6);
    for (std::size_t d = 0; d < n_donors; ++d) {
      MetricSeries s;
      s.person_id = "d" + std::to_string(d);
      s.set_id = "s0";
      s.interval_s = 900;
      s.start = 0;
      const std::size_t len = 4 + rng.next_index(45);
      s.values = random_values(rng, len);
      for (std::size_t i = 0; i < len; ++i) {
        s.response.push_back(rng.next_double() < 0.9);
      }
      refs.donors.push_back({s.person_id, s.set_id, std::move(s)});
    }
    const std::size_t len_pre = rng.next_index(3);
    const std::size_t len_post = 1 + rng.next_index(2);
    const std::size_t gap_len = 1 + rng.next_index(4);
    const auto q_pre = tv(random_values(rng, len_pre), 900, 0);
    const auto q_post =
        tv(random_values(rng, len_post), 900,
           static_cast<std::int64_t>(len_pre + gap_len) * 900);
    const EpochSeconds gap_start = static_cast<std::int64_t>(len_pre) * 900;

    const auto results = score_candidates(q_pre, q_post, gap_len, gap_start,
                                          refs, one_to_one_constraints());

    // direct L1 loop over every placement
    std::vector<AlignmentResult> expected;
    for (const auto& donor : refs.donors) {
      const auto& rho = donor.series;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_pos = 0;
      for (std::size_t p = len_pre;
           p + gap_len + len_post <= rho.size(); ++p) {
        bool ok = true;
        for (std::size_t t = p - len_pre; t < p + gap_len + len_post; ++t) {
          ok = ok && rho.response[t];
        }
        if (!ok) continue;
        // same accumulation order as the engine: each buffer summed
        // separately, then added
        double cost_pre = 0.0, cost_post = 0.0;
        for (std::size_t i = 0; i < len_pre; ++i) {
          cost_pre += std::abs(q_pre.values[i] - rho.values[p - len_pre + i]);
        }
        for (std::size_t i = 0; i < len_post; ++i) {
          cost_post += std::abs(q_post.values[i] - rho.values[p + gap_len + i]);
        }
        const double cost = cost_pre + cost_post;
        if (cost < best) {
          best = cost;
          best_pos = p;
        }
      }
      if (!std::isinf(best)) {
        AlignmentResult r;
        r.donor_person = donor.person_id;
        r.dissimilarity = best;
        r.gap_position = best_pos;
        expected.push_back(r);
      }
    }
    REQUIRE(results.size() == expected.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(results[i].donor_person == expected[i].donor_person);
      CHECK(results[i].dissimilarity == expected[i].dissimilarity);
      CHECK(results[i].gap_position == expected[i].gap_position);
    }
  }
}

TEST_CASE("score_candidates honors the wall-clock window") {
  ReferenceCollection refs;
  MetricSeries s;
  s.person_id = "d";
  s.set_id = "s0";
  s.interval_s = 900;
  s.start = 0;
  s.values.assign(96, 1.0);  // one full day
  s.response.assign(96, true);
  refs.donors.push_back({"d", "s0", s});
  refs.restrictions.time_window_s = 3600;

  AlignmentConstraints c = one_to_one_constraints();
  c.time_window_s = 3600;
  const auto q_pre = tv({1.0}, 900, 8 * kSecondsPerHour - 900);
  const auto results = score_candidates(q_pre, {}, 2,
                                        8 * kSecondsPerHour, refs, c);
  REQUIRE(results.size() == 1);
  // placements limited to gap start within +-1 h of 08:00
  const EpochSeconds placed =
      s.start + static_cast<std::int64_t>(results[0].gap_position) * 900;
  CHECK(time_of_day_offset(placed, 8 * kSecondsPerHour) <= 3600);
}

TEST_CASE("apply_phi person filters") {
  const auto refs = worked_example_pool();
  PhiRestrictions phi;
  SUBCASE("no restrictions is identity") {
    CHECK(apply_phi(refs, "r1", 0, phi).donors.size() == 3);
  }
  SUBCASE("exclude self") {
    phi.exclude_self = true;
    const auto out = apply_phi(refs, "r1", 0, phi);
    REQUIRE(out.donors.size() == 2);
    CHECK(out.donors[0].person_id == "r2");
  }
  SUBCASE("only self on a pool holding only self") {
    phi.only_self = true;
    const auto out = apply_phi(refs, "r2", 0, phi);
    REQUIRE(out.donors.size() == 1);
    CHECK(out.donors[0].person_id == "r2");
  }
  SUBCASE("exclude self on a self-only pool is empty") {
    ReferenceCollection self_only;
    self_only.donors.push_back(refs.donors[0]);
    phi.exclude_self = true;
    CHECK(apply_phi(self_only, "r1", 0, phi).donors.empty());
  }
}
