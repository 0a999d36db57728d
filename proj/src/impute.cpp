#include "tracegap/impute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace tracegap {

namespace {

MetricSeries fill_gap(const MetricSeries& series, const GapSpec& gap,
                      const std::vector<double>& values) {
  MetricSeries out = series;
  for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
    out.values[t] = values[t - gap.start_index];
    out.response[t] = true;
  }
  return out;
}

ImputationResult single_fill(const MetricSeries& series, const GapSpec& gap,
                             const std::vector<double>& values) {
  ImputationResult result;
  result.completed.push_back(fill_gap(series, gap, values));
  result.donors.push_back(std::nullopt);
  result.pooled = pool(result.completed);
  return result;
}

// Sequential weighted draws; chosen donors are removed when drawing
// without replacement.
std::vector<std::size_t> sample_donors(std::vector<double> weights,
                                       std::size_t m, Rng& rng) {
  const bool without_replacement = weights.size() >= m;
  std::vector<std::size_t> index(weights.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  std::vector<std::size_t> chosen;
  for (std::size_t draw = 0; draw < m; ++draw) {
    const std::size_t k = rng.weighted_index(weights);
    chosen.push_back(index[k]);
    if (without_replacement) {
      weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(k));
      index.erase(index.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }
  return chosen;
}

}  // namespace

double specificity_kappa(Specificity s) {
  switch (s) {
    case Specificity::Low: return 1.0;
    case Specificity::Medium: return 3.0;
    case Specificity::High: return 8.0;
  }
  throw std::logic_error("unknown specificity");
}

DtwbmiParams preset_dtwbi() {
  DtwbmiParams p;
  p.match_buffer_s = 8 * kSecondsPerHour;
  p.time_window_s = kSecondsPerHour;
  p.n_imputations = 1;
  p.deterministic_best = true;
  return p;
}

DtwbmiParams preset_dtwbmi_hi() {
  DtwbmiParams p;
  p.match_buffer_s = 8 * kSecondsPerHour;
  p.time_window_s = 12 * kSecondsPerHour;  // unrestricted within the day
  p.kappa = specificity_kappa(Specificity::High);
  p.n_imputations = 3;
  return p;
}

DtwbmiParams preset_dtwbmi_lo() {
  DtwbmiParams p;
  p.match_buffer_s = kSecondsPerHour;
  p.time_window_s = 3 * kSecondsPerHour;
  p.kappa = specificity_kappa(Specificity::Medium);
  p.n_imputations = 10;
  return p;
}

ImputationResult impute_li(const MetricSeries& series, const GapSpec& gap,
                           const Trajectory& traj) {
  if (series.metric != Metric::TravelDistanceKm) {
    throw std::invalid_argument("impute_li applies to travel distance");
  }
  const EpochSeconds gap_start = series.element_time(gap.start_index);
  const EpochSeconds gap_end = series.element_time(gap.end_index);
  const GeoPoint* pre = nullptr;
  const GeoPoint* post = nullptr;
  for (const auto& p : traj.points) {
    if (p.timestamp < gap_start) pre = &p;
    if (p.timestamp >= gap_end && post == nullptr) post = &p;
  }
  if (pre == nullptr || post == nullptr) {
    throw std::runtime_error("impute_li: gap has no anchor fix on both sides");
  }
  const double total_km = haversine(*pre, *post) / 1000.0;
  const std::vector<double> values(gap.length(),
                                   total_km / static_cast<double>(gap.length()));
  return single_fill(series, gap, values);
}

ImputationResult impute_mean(const MetricSeries& series, const GapSpec& gap) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (series.response[t]) {
      total += series.values[t];
      ++count;
    }
  }
  if (count == 0) {
    throw std::runtime_error("impute_mean: series is fully missing");
  }
  const std::vector<double> values(gap.length(), total / count);
  return single_fill(series, gap, values);
}

ImputationResult impute_twi(const MetricSeries& series, const GapSpec& gap,
                            const ReferenceCollection& refs,
                            std::int64_t window_s, std::size_t m,
                            std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("impute_twi: m must be positive");
  const std::size_t gap_len = gap.length();
  const EpochSeconds gap_time = series.element_time(gap.start_index);

  struct Placement {
    const DonorSeries* donor;
    std::size_t position;
  };
  std::vector<Placement> pool_;
  for (const auto& donor : refs.donors) {
    const auto& rho = donor.series;
    for (std::size_t p = 0; p + gap_len <= rho.size(); ++p) {
      bool observed = true;
      for (std::size_t t = p; t < p + gap_len && observed; ++t) {
        observed = rho.response[t];
      }
      if (!observed) continue;
      if (time_of_day_offset(gap_time, rho.element_time(p)) > window_s) {
        continue;
      }
      pool_.push_back({&donor, p});
    }
  }
  if (pool_.empty()) {
    throw std::runtime_error("impute_twi: no feasible placement in window");
  }

  Rng rng = Rng(seed).derive("twi/" + series.person_id + "/" + series.set_id +
                             "/" + std::to_string(gap.start_index));
  // uniform draws: without replacement when the pool allows
  std::vector<std::size_t> chosen =
      sample_donors(std::vector<double>(pool_.size(), 1.0), m, rng);

  ImputationResult result;
  for (const std::size_t k : chosen) {
    const auto& [donor, p] = pool_[k];
    std::vector<double> values(donor->series.values.begin() + p,
                               donor->series.values.begin() + p + gap_len);
    result.completed.push_back(fill_gap(series, gap, values));
    AlignmentResult prov;
    prov.donor_person = donor->person_id;
    prov.donor_set = donor->set_id;
    prov.gap_position = p;
    prov.dissimilarity = 0.0;
    prov.donor_gap_values = std::move(values);
    result.donors.emplace_back(std::move(prov));
  }
  result.pooled = pool(result.completed);
  return result;
}

namespace {

// Collapsed-gap scoring: the query gap is represented by one element
// interpolated between its anchors, and each donor placement excises the
// full gap span and is represented the same way. One-to-one L1 comparison
// across pre-buffer, collapsed element, post-buffer.
std::vector<AlignmentResult> score_collapsed(
    const QuerySplit& split, std::size_t gap_len, EpochSeconds gap_time,
    const ReferenceCollection& refs,
    const std::optional<std::int64_t>& time_window_s) {
  std::vector<double> query = split.pre.values;
  query.push_back((split.pre.values.back() + split.post.values.front()) / 2.0);
  query.insert(query.end(), split.post.values.begin(),
               split.post.values.end());
  const std::size_t len_pre = split.pre.size();
  const std::size_t len_post = split.post.size();

  std::vector<AlignmentResult> results;
  for (const auto& donor : refs.donors) {
    const auto& rho = donor.series;
    const std::size_t m = rho.size();
    if (m < len_pre + gap_len + len_post) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_pos = 0;
    for (std::size_t p = len_pre; p + gap_len + len_post <= m; ++p) {
      bool observed = true;
      for (std::size_t t = p - len_pre; t < p + gap_len + len_post && observed;
           ++t) {
        observed = rho.response[t];
      }
      if (!observed) continue;
      if (time_window_s &&
          time_of_day_offset(gap_time, rho.element_time(p)) > *time_window_s) {
        continue;
      }
      double d = 0.0;
      for (std::size_t i = 0; i < len_pre; ++i) {
        d += std::abs(query[i] - rho.values[p - len_pre + i]);
      }
      d += std::abs(query[len_pre] -
                    (rho.values[p - 1] + rho.values[p + gap_len]) / 2.0);
      for (std::size_t i = 0; i < len_post; ++i) {
        d += std::abs(query[len_pre + 1 + i] - rho.values[p + gap_len + i]);
      }
      if (d < best) {
        best = d;
        best_pos = p;
      }
    }
    if (best < std::numeric_limits<double>::infinity()) {
      AlignmentResult r;
      r.donor_person = donor.person_id;
      r.donor_set = donor.set_id;
      r.gap_position = best_pos;
      r.dissimilarity = best;
      r.donor_gap_values.assign(rho.values.begin() + best_pos,
                                rho.values.begin() + best_pos + gap_len);
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace

ImputationResult impute_dtwbmi(const MetricSeries& series, const GapSpec& gap,
                               const ReferenceCollection& refs,
                               const DtwbmiParams& params) {
  if (params.n_imputations == 0) {
    throw std::invalid_argument("impute_dtwbmi: m must be positive");
  }
  QuerySplit split = split_query(series, gap, params.match_buffer_s);
  const std::size_t gap_len = gap.length();
  const EpochSeconds gap_time = series.element_time(gap.start_index);

  ReferenceCollection pool_refs = refs;
  pool_refs.restrictions.time_window_s = params.time_window_s;

  AlignmentConstraints constraints;
  constraints.one_to_one = true;
  constraints.sakoe_chiba = 0;
  constraints.time_window_s = params.time_window_s;

  std::vector<AlignmentResult> candidates;
  if (params.collapsed_gap && !split.pre.empty() && !split.post.empty()) {
    candidates = score_collapsed(split, gap_len, gap_time, pool_refs,
                                 params.time_window_s);
  } else {
    candidates = score_candidates(split.pre, split.post, gap_len, gap_time,
                                  pool_refs, constraints);
  }
  if (candidates.empty()) {
    std::string reason = "impute_dtwbmi: no feasible donor (pool of " +
                         std::to_string(pool_refs.donors.size()) + " donors";
    if (params.time_window_s) {
      reason += ", time window " + std::to_string(*params.time_window_s) + " s";
    }
    throw std::runtime_error(reason + ")");
  }

  std::vector<std::size_t> chosen;
  if (params.deterministic_best) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      if (candidates[i].dissimilarity < candidates[best].dissimilarity) {
        best = i;
      }
    }
    chosen.assign(params.n_imputations, best);
  } else {
    std::vector<double> weights(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      weights[i] = std::pow(
          1.0 / (candidates[i].dissimilarity + kSelectionEpsilon),
          params.kappa);
    }
    Rng rng = Rng(params.rng_seed)
                  .derive("dtwbmi/" + series.person_id + "/" + series.set_id +
                          "/" + std::to_string(gap.start_index));
    chosen = sample_donors(std::move(weights), params.n_imputations, rng);
  }

  ImputationResult result;
  for (const std::size_t k : chosen) {
    const AlignmentResult& cand = candidates[k];
    result.completed.push_back(fill_gap(series, gap, cand.donor_gap_values));
    result.donors.emplace_back(cand);
  }
  result.pooled = pool(result.completed);
  return result;
}

PooledStats pool(const std::vector<MetricSeries>& completed) {
  if (completed.empty()) {
    throw std::invalid_argument("pool: no completed series");
  }
  const std::size_t n = completed.front().size();
  const std::size_t m = completed.size();
  for (const auto& s : completed) {
    if (s.size() != n) throw std::invalid_argument("pool: shape mismatch");
  }
  PooledStats stats;
  stats.element_mean.assign(n, 0.0);
  stats.element_variance.assign(n, 0.0);
  std::vector<double> totals(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < n; ++t) {
      stats.element_mean[t] += completed[i].values[t];
      totals[i] += completed[i].values[t];
    }
  }
  for (double& v : stats.element_mean) v /= static_cast<double>(m);
  stats.total_mean = 0.0;
  for (const double t : totals) stats.total_mean += t;
  stats.total_mean /= static_cast<double>(m);
  if (m > 1) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t t = 0; t < n; ++t) {
        const double d = completed[i].values[t] - stats.element_mean[t];
        stats.element_variance[t] += d * d;
      }
      const double dt = totals[i] - stats.total_mean;
      stats.total_variance += dt * dt;
    }
    for (double& v : stats.element_variance) v /= static_cast<double>(m - 1);
    stats.total_variance /= static_cast<double>(m - 1);
  }
  return stats;
}

void write_provenance_jsonl(std::ostream& out, const std::string& method,
                            const MetricSeries& series, const GapSpec& gap,
                            const ImputationResult& result) {
  for (std::size_t i = 0; i < result.completed.size(); ++i) {
    nlohmann::json obj{{"method", method},
                       {"person_id", series.person_id},
                       {"set_id", series.set_id},
                       {"gap_start_index", gap.start_index},
                       {"gap_length", gap.length()},
                       {"imputation", i}};
    if (result.donors[i]) {
      const auto& d = *result.donors[i];
      obj["donor_person"] = d.donor_person;
      obj["donor_set"] = d.donor_set;
      obj["placement"] = d.gap_position;
      obj["dissimilarity"] = d.dissimilarity;
    }
    out << obj.dump() << '\n';
  }
}

}  // namespace tracegap
