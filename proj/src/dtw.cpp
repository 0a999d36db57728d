#include "tracegap/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tracegap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_weekend(EpochSeconds t, std::int64_t utc_offset_s) {
  return local_day_of_week(t, utc_offset_s) >= 5;
}

// One-to-one L1 cost over equal-length contiguous buffers. The pairwise
// time offsets all equal the placement offset, which the caller has
// already checked.
double l1_cost(const std::vector<double>& q, const double* buf) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    total += std::abs(q[i] - buf[i]);
  }
  return total;
}

}  // namespace

std::int64_t time_of_day_offset(EpochSeconds a, EpochSeconds b) {
  std::int64_t d = (a - b) % kSecondsPerDay;
  if (d < 0) d += kSecondsPerDay;
  return std::min(d, kSecondsPerDay - d);
}

std::vector<std::vector<double>> cost_matrix(const std::vector<double>& q,
                                             const std::vector<double>& rho) {
  if (q.empty() || rho.empty()) {
    throw std::invalid_argument("cost_matrix: empty slice");
  }
  std::vector<std::vector<double>> d(q.size(),
                                     std::vector<double>(rho.size()));
  for (std::size_t t = 0; t < q.size(); ++t) {
    for (std::size_t j = 0; j < rho.size(); ++j) {
      d[t][j] = std::abs(q[t] - rho[j]);
    }
  }
  return d;
}

DtwResult dtw_distance(const TimedValues& q, const TimedValues& rho,
                       const AlignmentConstraints& c) {
  const std::size_t n = q.size();
  const std::size_t m = rho.size();
  if (n == 0 || m == 0) {
    throw std::invalid_argument("dtw_distance: empty slice");
  }
  if (c.one_to_one && n != m) {
    throw std::invalid_argument(
        "dtw_distance: one_to_one requires equal lengths");
  }
  if (c.time_window_s &&
      (q.times.size() != n || rho.times.size() != m)) {
    throw std::invalid_argument(
        "dtw_distance: time_window requires element times");
  }

  auto passable = [&](std::size_t t, std::size_t j) {
    if (c.one_to_one && t != j) return false;
    if (c.sakoe_chiba) {
      const auto diff = static_cast<std::int64_t>(t) -
                        static_cast<std::int64_t>(j);
      if (std::abs(diff) > *c.sakoe_chiba) return false;
    }
    if (c.time_window_s &&
        time_of_day_offset(q.times[t], rho.times[j]) > *c.time_window_s) {
      return false;
    }
    return true;
  };

  std::vector<std::vector<double>> acc(n, std::vector<double>(m, kInf));
  // -1 start, 0 diagonal, 1 vertical (t-1,j), 2 horizontal (t,j-1)
  std::vector<std::vector<signed char>> move(n,
                                             std::vector<signed char>(m, -1));

  for (std::size_t j = 0; j < m; ++j) {
    if (!passable(0, j)) continue;
    const double cost = std::abs(q.values[0] - rho.values[j]);
    if (c.open_begin_end || j == 0) {
      acc[0][j] = cost;
      move[0][j] = -1;
    }
    if (!c.open_begin_end && j > 0 && acc[0][j - 1] < kInf) {
      acc[0][j] = acc[0][j - 1] + cost;
      move[0][j] = 2;
    }
  }
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!passable(t, j)) continue;
      double best = kInf;
      signed char from = -1;
      if (j > 0 && acc[t - 1][j - 1] < best) {
        best = acc[t - 1][j - 1];
        from = 0;
      }
      if (acc[t - 1][j] < best) {
        best = acc[t - 1][j];
        from = 1;
      }
      if (j > 0 && acc[t][j - 1] < best) {
        best = acc[t][j - 1];
        from = 2;
      }
      if (from == -1) continue;
      acc[t][j] = best + std::abs(q.values[t] - rho.values[j]);
      move[t][j] = from;
    }
  }

  std::size_t end_j = m - 1;
  if (c.open_begin_end) {
    double best = kInf;
    for (std::size_t j = 0; j < m; ++j) {
      if (acc[n - 1][j] < best) {
        best = acc[n - 1][j];
        end_j = j;
      }
    }
  }
  if (!(acc[n - 1][end_j] < kInf)) {
    throw InfeasibleAlignmentError(
        "dtw_distance: constraints exclude every path");
  }

  DtwResult result;
  result.dissimilarity = acc[n - 1][end_j];
  std::size_t t = n - 1, j = end_j;
  while (true) {
    result.path.emplace_back(t, j);
    const signed char from = move[t][j];
    if (from == -1) break;
    if (from == 0) {
      --t;
      --j;
    } else if (from == 1) {
      --t;
    } else {
      --j;
    }
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

std::vector<AlignmentResult> score_candidates(
    const TimedValues& q_pre, const TimedValues& q_post,
    std::size_t gap_length, EpochSeconds gap_start_time,
    const ReferenceCollection& refs, const AlignmentConstraints& c) {
  if (refs.donors.empty()) {
    throw std::invalid_argument("score_candidates: empty reference collection");
  }
  if (q_pre.empty() && q_post.empty()) {
    throw std::invalid_argument(
        "score_candidates: both query slices are empty");
  }
  const std::size_t len_pre = q_pre.size();
  const std::size_t len_post = q_post.size();
  const auto& phi = refs.restrictions;

  std::vector<AlignmentResult> results;
  for (const auto& donor : refs.donors) {
    const auto& rho = donor.series;
    const std::size_t m = rho.size();
    const std::size_t needed = len_pre + gap_length + len_post;
    if (m < needed) continue;  // too short, no placement fits

    double best = kInf;
    std::size_t best_pos = 0;
    for (std::size_t p = len_pre; p + gap_length + len_post <= m; ++p) {
      const std::size_t w0 = p - len_pre;
      const std::size_t w1 = p + gap_length + len_post;
      bool observed = true;
      for (std::size_t t = w0; t < w1 && observed; ++t) {
        observed = rho.response[t];
      }
      if (!observed) continue;

      const EpochSeconds donor_gap_time = rho.element_time(p);
      if (phi.time_window_s &&
          time_of_day_offset(gap_start_time, donor_gap_time) >
              *phi.time_window_s) {
        continue;
      }
      if (phi.day_match == PhiRestrictions::DayMatch::WeekdayWeekend &&
          is_weekend(gap_start_time, phi.utc_offset_s) !=
              is_weekend(donor_gap_time, phi.utc_offset_s)) {
        continue;
      }
      if (phi.day_match == PhiRestrictions::DayMatch::SameDayOfWeek &&
          local_day_of_week(gap_start_time, phi.utc_offset_s) !=
              local_day_of_week(donor_gap_time, phi.utc_offset_s)) {
        continue;
      }

      // Under one_to_one all matched pairs share the placement offset, so
      // the pairwise time window reduces to one check here.
      if (c.one_to_one && c.time_window_s &&
          time_of_day_offset(gap_start_time, donor_gap_time) >
              *c.time_window_s) {
        continue;
      }
      double dissimilarity = 0.0;
      if (c.one_to_one) {
        if (len_pre > 0) dissimilarity += l1_cost(q_pre.values, &rho.values[w0]);
        if (len_post > 0) {
          dissimilarity += l1_cost(q_post.values, &rho.values[p + gap_length]);
        }
      } else {
        try {
          if (len_pre > 0) {
            TimedValues buf;
            for (std::size_t t = w0; t < p; ++t) {
              buf.values.push_back(rho.values[t]);
              buf.times.push_back(rho.element_time(t));
            }
            dissimilarity += dtw_distance(q_pre, buf, c).dissimilarity;
          }
          if (len_post > 0) {
            TimedValues buf;
            for (std::size_t t = p + gap_length; t < w1; ++t) {
              buf.values.push_back(rho.values[t]);
              buf.times.push_back(rho.element_time(t));
            }
            dissimilarity += dtw_distance(q_post, buf, c).dissimilarity;
          }
        } catch (const InfeasibleAlignmentError&) {
          continue;
        }
      }
      if (dissimilarity < best) {  // earliest placement wins ties
        best = dissimilarity;
        best_pos = p;
      }
    }
    if (best < kInf) {
      AlignmentResult r;
      r.donor_person = donor.person_id;
      r.donor_set = donor.set_id;
      r.gap_position = best_pos;
      r.dissimilarity = best;
      r.donor_gap_values.assign(rho.values.begin() + best_pos,
                                rho.values.begin() + best_pos + gap_length);
      results.push_back(std::move(r));
    }
  }
  return results;
}

ReferenceCollection apply_phi(const ReferenceCollection& refs,
                              const std::string& query_person,
                              EpochSeconds /*query_time*/,
                              const PhiRestrictions& phi) {
  ReferenceCollection out;
  out.restrictions = phi;
  for (const auto& donor : refs.donors) {
    if (phi.only_self && donor.person_id != query_person) continue;
    if (phi.exclude_self && donor.person_id == query_person) continue;
    out.donors.push_back(donor);
  }
  return out;
}

}  // namespace tracegap
