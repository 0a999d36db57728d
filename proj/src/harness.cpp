#include "tracegap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace tracegap {

namespace {

bool element_in_stratum(EpochSeconds ts, std::int64_t interval_s,
                        std::int64_t utc_offset_s, TimeOfDay tod) {
  switch (tod) {
    case TimeOfDay::Any:
      return true;
    case TimeOfDay::NightOnly:
      return is_night(ts, utc_offset_s) &&
             is_night(ts + interval_s - 1, utc_offset_s);
    case TimeOfDay::DayOnly:
      return !is_night(ts, utc_offset_s) &&
             !is_night(ts + interval_s - 1, utc_offset_s);
  }
  return false;
}

std::vector<std::size_t> feasible_starts(const MetricSeries& series,
                                         std::size_t gap_len,
                                         std::int64_t utc_offset_s,
                                         TimeOfDay tod) {
  std::vector<std::size_t> starts;
  const std::size_t n = series.size();
  if (n < gap_len + 2) return starts;
  for (std::size_t a = 1; a + gap_len + 1 <= n; ++a) {
    if (!series.response[a - 1] || !series.response[a + gap_len]) continue;
    bool ok = true;
    for (std::size_t t = a; t < a + gap_len && ok; ++t) {
      ok = series.response[t] &&
           element_in_stratum(series.element_time(t), series.interval_s,
                              utc_offset_s, tod);
    }
    if (ok) starts.push_back(a);
  }
  return starts;
}

void mask_bundle(SeriesBundle& bundle, const GapSpec& gap) {
  for (auto& series : bundle.series) {
    for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
      series.values[t] = std::numeric_limits<double>::quiet_NaN();
      series.response[t] = false;
    }
  }
}

ReferenceCollection build_refs(const Dataset& dataset) {
  ReferenceCollection refs;
  for (const auto& set : dataset.sets) {
    const auto& s = set.bundle.get(Metric::TravelDistanceKm);
    refs.donors.push_back({s.person_id, s.set_id, s});
  }
  return refs;
}

ImputationResult run_method(const MethodSpec& method,
                            const MetricSeries& masked, const GapSpec& gap,
                            const Trajectory& traj,
                            const ReferenceCollection& refs,
                            std::uint64_t seed) {
  switch (method.kind) {
    case MethodKind::LI:
      return impute_li(masked, gap, traj);
    case MethodKind::MI:
      return impute_mean(masked, gap);
    case MethodKind::TWI:
      return impute_twi(masked, gap, refs, method.twi_window_s, method.twi_m,
                        seed);
    case MethodKind::DTWBI:
    case MethodKind::DTWBMI_HI:
    case MethodKind::DTWBMI_LO:
    case MethodKind::DTWBMI: {
      DtwbmiParams params = method.params;
      params.rng_seed = seed;
      return impute_dtwbmi(masked, gap, refs, params);
    }
  }
  throw std::logic_error("unknown method kind");
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::string gap_length_label(std::int64_t gap_length_s) {
  std::ostringstream label;
  const double hours = static_cast<double>(gap_length_s) / kSecondsPerHour;
  if (hours == static_cast<std::int64_t>(hours)) {
    label << static_cast<std::int64_t>(hours) << " h";
  } else {
    label << hours << " h";
  }
  return label.str();
}

std::string time_of_day_label(TimeOfDay tod) {
  switch (tod) {
    case TimeOfDay::Any: return "Any";
    case TimeOfDay::NightOnly: return "Night Only";
    case TimeOfDay::DayOnly: return "Daytime";
  }
  return "?";
}

std::string own_sets_bucket(std::size_t count) {
  if (count <= 1) return "No extra data";
  if (count <= 3) return "2-3 sets";
  return "4+ sets";
}

struct TaggedScore {
  std::string method;
  std::string gap_label;
  std::string tod_label;
  std::string own_bucket;
  bool skipped = false;
  GapScore score;
};

// Runs f(i) for i in [0, n) across `jobs` threads; f must only touch its
// own output slot.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& f) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> workers;
  std::size_t stride = std::min<std::size_t>(jobs, n);
  for (std::size_t w = 0; w < stride; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += stride) f(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace

std::size_t Dataset::own_set_count(const std::string& person_id) const {
  std::size_t count = 0;
  for (const auto& set : sets) {
    if (set.traj.person_id == person_id) ++count;
  }
  return count;
}

MethodSpec method_from_name(const std::string& name) {
  MethodSpec spec;
  spec.name = name;
  if (name == "li") {
    spec.kind = MethodKind::LI;
  } else if (name == "mi") {
    spec.kind = MethodKind::MI;
  } else if (name == "twi") {
    spec.kind = MethodKind::TWI;
  } else if (name == "dtwbi") {
    spec.kind = MethodKind::DTWBI;
    spec.params = preset_dtwbi();
  } else if (name == "dtwbmi-hi") {
    spec.kind = MethodKind::DTWBMI_HI;
    spec.params = preset_dtwbmi_hi();
  } else if (name == "dtwbmi-lo") {
    spec.kind = MethodKind::DTWBMI_LO;
    spec.params = preset_dtwbmi_lo();
  } else {
    throw std::invalid_argument("unknown method: " + name);
  }
  return spec;
}

std::pair<Dataset, std::vector<GapCase>> induce_missingness(
    const Dataset& dataset, const Scenario& scenario,
    const HarnessConfig& config) {
  Dataset masked = dataset;
  std::vector<GapCase> cases;
  if (scenario.n_affected == 0) return {std::move(masked), cases};

  const std::int64_t interval =
      dataset.sets.empty()
          ? 15 * kSecondsPerMinute
          : dataset.sets.front().bundle.series.front().interval_s;
  const std::size_t gap_len = static_cast<std::size_t>(
      (scenario.gap_length_s + interval - 1) / interval);

  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> eligible;
  for (std::size_t i = 0; i < dataset.sets.size(); ++i) {
    auto starts = feasible_starts(
        dataset.sets[i].bundle.get(Metric::TravelDistanceKm), gap_len,
        config.utc_offset_s, scenario.time_of_day);
    if (!starts.empty()) eligible.emplace_back(i, std::move(starts));
  }
  if (eligible.size() < scenario.n_affected) {
    throw std::runtime_error(
        "induce_missingness: only " + std::to_string(eligible.size()) +
        " eligible sets for n_affected=" + std::to_string(scenario.n_affected));
  }

  Rng rng = Rng(config.master_seed)
                .derive("induce/" + std::to_string(scenario.seed) + "/" +
                        std::to_string(scenario.gap_length_s) + "/" +
                        time_of_day_label(scenario.time_of_day));
  // uniform choice of affected sets without replacement
  for (std::size_t draw = 0; draw < scenario.n_affected; ++draw) {
    const std::size_t k = rng.next_index(eligible.size());
    const auto [set_index, starts] = eligible[k];
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(k));

    const std::size_t a = starts[rng.next_index(starts.size())];
    GapCase gap_case;
    gap_case.set_index = set_index;
    gap_case.gap.start_index = a;
    gap_case.gap.end_index = a + gap_len;
    mask_bundle(masked.sets[set_index].bundle, gap_case.gap);
    cases.push_back(gap_case);
  }
  std::sort(cases.begin(), cases.end(),
            [](const GapCase& a, const GapCase& b) {
              return a.set_index < b.set_index;
            });
  return {std::move(masked), cases};
}

GapScore score(const MetricSeries& truth, const ImputationResult& imputed,
               const GapSpec& gap, double movement_threshold_km) {
  GapScore s;
  double true_total = 0.0;
  for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
    true_total += truth.values[t];
  }
  const std::size_t m = imputed.completed.size();
  double imputed_total = 0.0;
  for (const auto& completed : imputed.completed) {
    for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
      imputed_total += completed.values[t];
    }
  }
  s.signed_bias_km = imputed_total / static_cast<double>(m) - true_total;

  for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
    const bool true_travel = truth.values[t] >= movement_threshold_km;
    for (const auto& completed : imputed.completed) {
      const bool imp_travel = completed.values[t] >= movement_threshold_km;
      const double w = 1.0 / static_cast<double>(m);
      if (!true_travel) {
        s.tp_over_den += w;
        if (imp_travel) s.tp_over_num += w;
      } else {
        s.tp_under_den += w;
        if (!imp_travel) s.tp_under_num += w;
      }
      if (imp_travel == true_travel) s.tp_agree += w;
      s.tp_total += w;
    }
  }
  return s;
}

MetricsCell aggregate(const std::vector<GapScore>& scores,
                      std::size_t skipped) {
  MetricsCell cell;
  cell.n_gaps = scores.size();
  cell.skipped = skipped;
  if (scores.empty()) return cell;
  double sum = 0.0, sum_sq = 0.0, over = 0.0, under = 0.0;
  double over_num = 0.0, over_den = 0.0, under_num = 0.0, under_den = 0.0;
  double agree = 0.0, total = 0.0;
  std::vector<double> biases;
  biases.reserve(scores.size());
  for (const auto& s : scores) {
    sum += s.signed_bias_km;
    sum_sq += s.signed_bias_km * s.signed_bias_km;
    over += std::max(s.signed_bias_km, 0.0);
    under += std::max(-s.signed_bias_km, 0.0);
    biases.push_back(s.signed_bias_km);
    over_num += s.tp_over_num;
    over_den += s.tp_over_den;
    under_num += s.tp_under_num;
    under_den += s.tp_under_den;
    agree += s.tp_agree;
    total += s.tp_total;
  }
  const double n = static_cast<double>(scores.size());
  cell.abs_bias_km = std::abs(sum / n);
  cell.med_bias_km = median(std::move(biases));
  cell.dist_over_km = over / n;
  cell.dist_under_km = under / n;
  cell.rmse = std::sqrt(sum_sq / n);
  cell.tp_over_pct = over_den > 0.0 ? 100.0 * over_num / over_den : 0.0;
  cell.tp_under_pct = under_den > 0.0 ? 100.0 * under_num / under_den : 0.0;
  cell.tp_acc_pct = total > 0.0 ? 100.0 * agree / total : 0.0;
  return cell;
}

namespace {

// Shared by run_comparison and the grid: run one method over the induced
// cases of one scenario, producing tagged per-gap scores.
std::vector<TaggedScore> run_cases(const Dataset& truth, const Dataset& masked,
                                   const std::vector<GapCase>& cases,
                                   const ReferenceCollection& refs,
                                   const MethodSpec& method,
                                   const Scenario& scenario,
                                   const HarnessConfig& config,
                                   std::vector<RawGapRecord>* raw_out) {
  const std::string scenario_label =
      gap_length_label(scenario.gap_length_s) + "/" +
      time_of_day_label(scenario.time_of_day) + "/" +
      std::to_string(scenario.seed);
  const std::uint64_t method_seed = derive_seed(
      config.master_seed, scenario_label + "/" + method.name);

  std::vector<TaggedScore> results(cases.size());
  parallel_for(cases.size(), config.jobs, [&](std::size_t i) {
    const GapCase& gap_case = cases[i];
    const auto& truth_set = truth.sets[gap_case.set_index];
    const auto& masked_set = masked.sets[gap_case.set_index];
    const auto& truth_series = truth_set.bundle.get(Metric::TravelDistanceKm);
    const auto& masked_series =
        masked_set.bundle.get(Metric::TravelDistanceKm);

    TaggedScore& tagged = results[i];
    tagged.method = method.name;
    tagged.gap_label = gap_length_label(scenario.gap_length_s);
    tagged.tod_label = time_of_day_label(scenario.time_of_day);
    tagged.own_bucket =
        own_sets_bucket(truth.own_set_count(truth_set.traj.person_id));
    try {
      const ImputationResult result =
          run_method(method, masked_series, gap_case.gap, truth_set.traj,
                     refs, method_seed);
      tagged.score = score(truth_series, result, gap_case.gap,
                           config.movement_threshold_km);
    } catch (const std::exception& e) {
      tagged.skipped = true;
      tagged.score = GapScore{};
      if (raw_out != nullptr) {
        // reason recorded below from the raw record slot
        (*raw_out)[i].skip_reason = e.what();
      }
    }
    if (raw_out != nullptr) {
      RawGapRecord& rec = (*raw_out)[i];
      rec.scenario = scenario_label;
      rec.method = method.name;
      rec.person_id = truth_set.traj.person_id;
      rec.set_id = truth_series.set_id;
      rec.gap_start_index = gap_case.gap.start_index;
      rec.gap_length = gap_case.gap.length();
      rec.skipped = tagged.skipped;
      rec.score = tagged.score;
    }
  });
  return results;
}

MetricsCell cell_from_tagged(const std::vector<const TaggedScore*>& group) {
  std::vector<GapScore> scores;
  std::size_t skipped = 0;
  for (const TaggedScore* t : group) {
    if (t->skipped) {
      ++skipped;
    } else {
      scores.push_back(t->score);
    }
  }
  return aggregate(scores, skipped);
}

}  // namespace

ComparisonResult run_comparison(const Dataset& dataset,
                                const std::vector<MethodSpec>& methods,
                                const std::vector<Scenario>& scenarios,
                                const HarnessConfig& config) {
  if (methods.empty() || scenarios.empty()) {
    throw std::invalid_argument("run_comparison: need >= 1 method, scenario");
  }
  ComparisonResult out;
  std::vector<TaggedScore> all;
  for (const auto& scenario : scenarios) {
    auto [masked, cases] = induce_missingness(dataset, scenario, config);
    const ReferenceCollection refs = build_refs(masked);
    for (const auto& method : methods) {
      std::vector<RawGapRecord> raw(cases.size());
      auto tagged =
          run_cases(dataset, masked, cases, refs, method, scenario, config,
                    &raw);
      all.insert(all.end(), tagged.begin(), tagged.end());
      out.raw.insert(out.raw.end(), raw.begin(), raw.end());
    }
  }

  auto emit = [&](const std::string& section, const std::string& stratum,
                  const std::string& method,
                  const std::vector<const TaggedScore*>& group) {
    if (group.empty()) return;
    out.rows.push_back({section, stratum, method, cell_from_tagged(group)});
  };

  // overall, then per gap length, time of day, own-set bucket; method order
  // follows the input list
  auto group_by = [&](const std::string& section,
                      auto key_fn) {
    std::vector<std::string> keys;
    for (const auto& t : all) {
      const std::string k = key_fn(t);
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        keys.push_back(k);
      }
    }
    for (const auto& k : keys) {
      for (const auto& method : methods) {
        std::vector<const TaggedScore*> group;
        for (const auto& t : all) {
          if (t.method == method.name && key_fn(t) == k) group.push_back(&t);
        }
        emit(section, k, method.name, group);
      }
    }
  };

  for (const auto& method : methods) {
    std::vector<const TaggedScore*> group;
    for (const auto& t : all) {
      if (t.method == method.name) group.push_back(&t);
    }
    emit("overall", "all", method.name, group);
  }
  group_by("gap_length", [](const TaggedScore& t) { return t.gap_label; });
  group_by("time_of_day", [](const TaggedScore& t) { return t.tod_label; });
  group_by("own_sets", [](const TaggedScore& t) { return t.own_bucket; });
  return out;
}

GridResult run_parameter_grid(const Dataset& dataset,
                              const std::vector<Scenario>& scenarios,
                              const HarnessConfig& config) {
  struct Level {
    std::string label;
    std::optional<std::int64_t> window_s;
  };
  const std::vector<Specificity> specs{Specificity::Low, Specificity::Medium,
                                       Specificity::High};
  const std::vector<int> buffers_h{1, 4, 8};
  const std::vector<Level> windows{
      {"<1 hour", kSecondsPerHour},
      {"<3 hours", 3 * kSecondsPerHour},
      {"No Window", std::nullopt}};
  const std::vector<std::size_t> imputation_counts{1, 3, 5, 10};

  // induce once per scenario; every cell sees identical masked data
  std::vector<std::pair<Dataset, std::vector<GapCase>>> induced;
  std::vector<ReferenceCollection> refs;
  for (const auto& scenario : scenarios) {
    induced.push_back(induce_missingness(dataset, scenario, config));
    refs.push_back(build_refs(induced.back().first));
  }

  GridResult result;
  for (const Specificity spec : specs) {
    for (const int buffer_h : buffers_h) {
      for (const Level& window : windows) {
        for (const std::size_t m : imputation_counts) {
          MethodSpec method;
          method.kind = MethodKind::DTWBMI;
          std::ostringstream name;
          name << "dtwbmi[s=" << specificity_kappa(spec) << ",b=" << buffer_h
               << ",w=" << window.label << ",m=" << m << "]";
          method.name = name.str();
          method.params.match_buffer_s = buffer_h * kSecondsPerHour;
          method.params.time_window_s = window.window_s;
          method.params.kappa = specificity_kappa(spec);
          method.params.n_imputations = m;
          method.params.deterministic_best = false;

          std::vector<GapScore> scores;
          std::size_t skipped = 0;
          for (std::size_t i = 0; i < scenarios.size(); ++i) {
            auto tagged = run_cases(dataset, induced[i].first,
                                    induced[i].second, refs[i], method,
                                    scenarios[i], config, nullptr);
            for (const auto& t : tagged) {
              if (t.skipped) {
                ++skipped;
              } else {
                scores.push_back(t.score);
              }
            }
          }
          GridCell cell;
          cell.specificity = spec;
          cell.buffer_h = buffer_h;
          cell.window_label = window.label;
          cell.imputations = m;
          cell.cell = aggregate(scores, skipped);
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }

  // marginal rows: mean of cell aggregates sharing each level
  auto marginal = [&](const std::string& section, const std::string& label,
                      auto pred) {
    MetricsCell mean;
    std::size_t count = 0;
    for (const auto& cell : result.cells) {
      if (!pred(cell)) continue;
      mean.abs_bias_km += cell.cell.abs_bias_km;
      mean.med_bias_km += cell.cell.med_bias_km;
      mean.dist_over_km += cell.cell.dist_over_km;
      mean.dist_under_km += cell.cell.dist_under_km;
      mean.rmse += cell.cell.rmse;
      mean.tp_acc_pct += cell.cell.tp_acc_pct;
      mean.tp_over_pct += cell.cell.tp_over_pct;
      mean.tp_under_pct += cell.cell.tp_under_pct;
      mean.n_gaps += cell.cell.n_gaps;
      mean.skipped += cell.cell.skipped;
      ++count;
    }
    if (count == 0) return;
    const double n = static_cast<double>(count);
    mean.abs_bias_km /= n;
    mean.med_bias_km /= n;
    mean.dist_over_km /= n;
    mean.dist_under_km /= n;
    mean.rmse /= n;
    mean.tp_acc_pct /= n;
    mean.tp_over_pct /= n;
    mean.tp_under_pct /= n;
    result.marginals.push_back({section, label, "dtwbmi", mean});
  };

  const char* spec_labels[] = {"Low", "Medium", "High"};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    marginal("Candidate Specificity", spec_labels[i],
             [&](const GridCell& c) { return c.specificity == specs[i]; });
  }
  for (const int b : buffers_h) {
    marginal("Match Buffer",
             b == 1 ? "1 hour" : std::to_string(b) + " hours",
             [&](const GridCell& c) { return c.buffer_h == b; });
  }
  for (const auto& w : windows) {
    marginal("Time Window", w.label,
             [&](const GridCell& c) { return c.window_label == w.label; });
  }
  for (const std::size_t m : imputation_counts) {
    marginal("Imputations", std::to_string(m),
             [&](const GridCell& c) { return c.imputations == m; });
  }
  return result;
}

std::vector<ReportRow> run_own_sets_experiment(const Dataset& dataset,
                                               const OwnSetsConfig& own,
                                               const HarnessConfig& config) {
  // split persons into multi-set subjects and stranger donors
  std::vector<std::string> multi_persons;
  std::vector<std::size_t> stranger_sets;
  for (std::size_t i = 0; i < dataset.sets.size(); ++i) {
    const std::string& person = dataset.sets[i].traj.person_id;
    if (dataset.own_set_count(person) >= own.min_own_sets) {
      if (std::find(multi_persons.begin(), multi_persons.end(), person) ==
          multi_persons.end()) {
        multi_persons.push_back(person);
      }
    } else {
      stranger_sets.push_back(i);
    }
  }
  if (multi_persons.empty()) {
    throw std::runtime_error(
        "own-sets experiment: no person has enough own sets");
  }
  if (stranger_sets.size() < own.base_pool + own.levels.size()) {
    throw std::runtime_error("own-sets experiment: not enough stranger sets");
  }
  const std::size_t max_level =
      *std::max_element(own.levels.begin(), own.levels.end());

  struct Key {
    std::size_t level;
    std::string gap_label;
    std::string method;
    bool operator<(const Key& o) const {
      return std::tie(level, gap_label, method) <
             std::tie(o.level, o.gap_label, o.method);
    }
  };
  std::map<Key, std::vector<GapScore>> scores;
  std::map<Key, std::size_t> skipped;

  const std::vector<MethodSpec> methods{method_from_name("dtwbi"),
                                        method_from_name("dtwbmi-hi"),
                                        method_from_name("dtwbmi-lo")};

  for (std::size_t rep = 0; rep < own.repetitions; ++rep) {
    Rng rep_rng = Rng(config.master_seed)
                      .derive("own_sets/rep" + std::to_string(rep));
    // fixed base pool of stranger sets for this repetition
    std::vector<std::size_t> strangers = stranger_sets;
    std::vector<std::size_t> base;
    for (std::size_t i = 0; i < own.base_pool; ++i) {
      const std::size_t k = rep_rng.next_index(strangers.size());
      base.push_back(strangers[k]);
      strangers.erase(strangers.begin() + static_cast<std::ptrdiff_t>(k));
    }

    for (const std::string& person : multi_persons) {
      std::vector<std::size_t> own_sets;
      for (std::size_t i = 0; i < dataset.sets.size(); ++i) {
        if (dataset.sets[i].traj.person_id == person) own_sets.push_back(i);
      }
      Rng person_rng = rep_rng.derive("person/" + person);
      const std::size_t query_pos = person_rng.next_index(own_sets.size());
      const std::size_t query_set = own_sets[query_pos];
      own_sets.erase(own_sets.begin() +
                     static_cast<std::ptrdiff_t>(query_pos));
      // shuffle remaining own sets; level L uses the first L
      for (std::size_t i = own_sets.size(); i > 1; --i) {
        std::swap(own_sets[i - 1], own_sets[person_rng.next_index(i)]);
      }
      // replacement strangers keep the pool size constant across levels
      std::vector<std::size_t> replacements;
      {
        std::vector<std::size_t> remaining = strangers;
        for (std::size_t i = 0; i < max_level; ++i) {
          const std::size_t k = person_rng.next_index(remaining.size());
          replacements.push_back(remaining[k]);
          remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
        }
      }

      for (const std::int64_t gap_length_s : own.gap_lengths_s) {
        const auto& truth_series =
            dataset.sets[query_set].bundle.get(Metric::TravelDistanceKm);
        const std::size_t gap_len = static_cast<std::size_t>(
            (gap_length_s + truth_series.interval_s - 1) /
            truth_series.interval_s);
        const auto starts = feasible_starts(truth_series, gap_len,
                                            config.utc_offset_s,
                                            TimeOfDay::Any);
        if (starts.empty()) continue;
        Rng gap_rng =
            person_rng.derive("gap/" + std::to_string(gap_length_s));
        GapSpec gap;
        gap.start_index = starts[gap_rng.next_index(starts.size())];
        gap.end_index = gap.start_index + gap_len;

        MetricSeries masked = truth_series;
        for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
          masked.values[t] = std::numeric_limits<double>::quiet_NaN();
          masked.response[t] = false;
        }

        for (const std::size_t level : own.levels) {
          ReferenceCollection refs;
          auto add_donor = [&](std::size_t set_index) {
            const auto& s =
                dataset.sets[set_index].bundle.get(Metric::TravelDistanceKm);
            refs.donors.push_back({s.person_id, s.set_id, s});
          };
          for (const std::size_t i : base) add_donor(i);
          for (std::size_t i = 0; i < level && i < own_sets.size(); ++i) {
            add_donor(own_sets[i]);
          }
          for (std::size_t i = level; i < max_level; ++i) {
            add_donor(replacements[i]);
          }

          for (const auto& method : methods) {
            const Key key{level, gap_length_label(gap_length_s), method.name};
            const std::uint64_t seed = derive_seed(
                config.master_seed,
                "own/" + std::to_string(rep) + "/" + person + "/" +
                    std::to_string(gap_length_s) + "/" +
                    std::to_string(level) + "/" + method.name);
            try {
              DtwbmiParams params = method.params;
              params.rng_seed = seed;
              const ImputationResult result =
                  impute_dtwbmi(masked, gap, refs, params);
              scores[key].push_back(score(truth_series, result, gap,
                                          config.movement_threshold_km));
            } catch (const std::exception&) {
              skipped[key] += 1;
            }
          }
        }
      }
    }
  }

  std::vector<ReportRow> rows;
  // Table-8 shape: aggregate per own-set level
  for (const std::size_t level : own.levels) {
    for (const auto& method : methods) {
      std::vector<GapScore> pooled;
      std::size_t n_skipped = 0;
      for (const std::int64_t g : own.gap_lengths_s) {
        const Key key{level, gap_length_label(g), method.name};
        const auto it = scores.find(key);
        if (it != scores.end()) {
          pooled.insert(pooled.end(), it->second.begin(), it->second.end());
        }
        const auto sk = skipped.find(key);
        if (sk != skipped.end()) n_skipped += sk->second;
      }
      rows.push_back({"own_sets_overall", "own=" + std::to_string(level),
                      method.name, aggregate(pooled, n_skipped)});
    }
  }
  // Table-9 shape: per gap length x level
  for (const std::int64_t g : own.gap_lengths_s) {
    for (const auto& method : methods) {
      for (const std::size_t level : own.levels) {
        const Key key{level, gap_length_label(g), method.name};
        const auto it = scores.find(key);
        const auto sk = skipped.find(key);
        rows.push_back(
            {"own_sets_by_gap",
             gap_length_label(g) + " own=" + std::to_string(level),
             method.name,
             aggregate(it != scores.end() ? it->second
                                          : std::vector<GapScore>{},
                       sk != skipped.end() ? sk->second : 0)});
      }
    }
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows,
                      std::uint64_t master_seed) {
  out << "# seed=" << master_seed << "\n";
  out << "section,stratum,method,abs_bias_km,med_bias_km,dist_over_km,"
         "dist_under_km,rmse,tp_acc_pct,tp_over_pct,tp_under_pct,n_gaps,"
         "skipped\n";
  for (const auto& row : rows) {
    const auto& c = row.cell;
    out << row.section << ',' << row.stratum << ',' << row.method << ','
        << fmt(c.abs_bias_km) << ',' << fmt(c.med_bias_km) << ','
        << fmt(c.dist_over_km) << ',' << fmt(c.dist_under_km) << ','
        << fmt(c.rmse) << ',' << fmt(c.tp_acc_pct) << ','
        << fmt(c.tp_over_pct) << ',' << fmt(c.tp_under_pct) << ','
        << c.n_gaps << ',' << c.skipped << '\n';
  }
}

void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows,
                       std::uint64_t master_seed) {
  out << "seed: " << master_seed << "\n";
  std::string section;
  char buf[256];
  for (const auto& row : rows) {
    if (row.section != section) {
      section = row.section;
      out << "\n== " << section << " ==\n";
      std::snprintf(buf, sizeof(buf),
                    "%-22s %-12s %9s %9s %9s %9s %8s %8s %8s %8s %6s %7s\n",
                    "stratum", "method", "AbsBias", "MedBias", "DistOver",
                    "DistUnder", "RMSE", "TPAcc%", "TPOver%", "TPUndr%",
                    "gaps", "skipped");
      out << buf;
    }
    const auto& c = row.cell;
    std::snprintf(buf, sizeof(buf),
                  "%-22s %-12s %9.2f %9.2f %9.2f %9.2f %8.2f %8.1f %8.1f "
                  "%8.1f %6zu %7zu\n",
                  row.stratum.c_str(), row.method.c_str(), c.abs_bias_km,
                  c.med_bias_km, c.dist_over_km, c.dist_under_km, c.rmse,
                  c.tp_acc_pct, c.tp_over_pct, c.tp_under_pct, c.n_gaps,
                  c.skipped);
    out << buf;
  }
}

void write_raw_jsonl(std::ostream& out,
                     const std::vector<RawGapRecord>& raw) {
  for (const auto& rec : raw) {
    nlohmann::json obj{{"scenario", rec.scenario},
                       {"method", rec.method},
                       {"person_id", rec.person_id},
                       {"set_id", rec.set_id},
                       {"gap_start_index", rec.gap_start_index},
                       {"gap_length", rec.gap_length},
                       {"skipped", rec.skipped}};
    if (rec.skipped) {
      obj["skip_reason"] = rec.skip_reason;
    } else {
      obj["signed_bias_km"] = rec.score.signed_bias_km;
      obj["tp_over_num"] = rec.score.tp_over_num;
      obj["tp_over_den"] = rec.score.tp_over_den;
      obj["tp_under_num"] = rec.score.tp_under_num;
      obj["tp_under_den"] = rec.score.tp_under_den;
      obj["tp_agree"] = rec.score.tp_agree;
      obj["tp_total"] = rec.score.tp_total;
    }
    out << obj.dump() << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("section,", 0) == 0) {
      continue;
    }
    std::stringstream row(line);
    std::vector<std::string> fields;
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 13) {
      throw std::runtime_error("report csv: malformed row: " + line);
    }
    ReportRow r;
    r.section = fields[0];
    r.stratum = fields[1];
    r.method = fields[2];
    r.cell.abs_bias_km = std::stod(fields[3]);
    r.cell.med_bias_km = std::stod(fields[4]);
    r.cell.dist_over_km = std::stod(fields[5]);
    r.cell.dist_under_km = std::stod(fields[6]);
    r.cell.rmse = std::stod(fields[7]);
    r.cell.tp_acc_pct = std::stod(fields[8]);
    r.cell.tp_over_pct = std::stod(fields[9]);
    r.cell.tp_under_pct = std::stod(fields[10]);
    r.cell.n_gaps = static_cast<std::size_t>(std::stoull(fields[11]));
    r.cell.skipped = static_cast<std::size_t>(std::stoull(fields[12]));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tracegap
