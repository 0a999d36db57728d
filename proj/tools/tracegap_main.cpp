// Command-line front end: ingest -> segment -> impute/simulate, plus the
// synthetic data generator. Every command is a thin shell over the library.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "tracegap/geo.hpp"
#include "tracegap/harness.hpp"
#include "tracegap/impute.hpp"
#include "tracegap/segmentation.hpp"
#include "tracegap/series.hpp"
#include "tracegap/synth.hpp"

namespace fs = std::filesystem;
using namespace tracegap;

namespace {

// Durations accept plain seconds or h/m/s suffixes ("1h", "90m", "360s").
std::int64_t parse_duration(const std::string& text) {
  if (text.empty()) throw CLI::ValidationError("empty duration");
  char suffix = text.back();
  std::string number = text;
  std::int64_t mult = 1;
  if (suffix == 'h' || suffix == 'm' || suffix == 's') {
    number = text.substr(0, text.size() - 1);
    mult = suffix == 'h' ? 3600 : suffix == 'm' ? 60 : 1;
  }
  std::size_t used = 0;
  const double v = std::stod(number, &used);
  if (used != number.size() || v < 0) {
    throw CLI::ValidationError("bad duration: " + text);
  }
  return static_cast<std::int64_t>(v * static_cast<double>(mult));
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Trajectory> read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const InputFormat format = path.size() > 6 &&
                                     path.substr(path.size() - 6) == ".jsonl"
                                 ? InputFormat::Jsonl
                                 : InputFormat::Csv;
  return parse_trajectories(in, format);
}

struct PipelineParams {
  std::int64_t min_span_s = 24 * kSecondsPerHour;
  std::int64_t max_gap_s = 6 * kSecondsPerMinute;
  double max_speed_mps = 70.0;
  SegmentationParams seg;
  DiscretizeParams disc;
};

// Raw trajectories -> contiguous sets -> segmentation -> series bundles.
Dataset build_dataset(const std::vector<Trajectory>& trajs,
                      const PipelineParams& p) {
  Dataset dataset;
  std::map<std::string, std::size_t> set_counter;
  for (const Trajectory& raw : trajs) {
    const Trajectory filtered =
        filter_implausible_speeds(raw, p.max_speed_mps);
    for (Trajectory& set :
         select_contiguous_sets({filtered}, p.min_span_s, p.max_gap_s)) {
      const std::string set_id =
          "s" + std::to_string(set_counter[set.person_id]++);
      const SegmentedDay seg = segment_trajectory(set, p.seg);
      DataSet ds;
      ds.bundle = discretize_bundle(seg, p.disc, set_id);
      ds.traj = std::move(set);
      dataset.sets.push_back(std::move(ds));
    }
  }
  return dataset;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory gap-filling toolkit"};
  app.set_config("--config", "", "flat key=value config file");
  app.allow_config_extras(CLI::config_extras_mode::ignore_all);
  app.set_version_flag("--version", "tracegap 1.0.0");
  app.fallthrough();  // global flags may follow the subcommand
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "echo the effective configuration and exit");

  std::string out_dir = ".";
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::int64_t tz_offset = 0;
  app.add_option("--out", out_dir, "output directory")
      ->envname("TRACEGAP_OUT")
      ->capture_default_str();
  app.add_option("--seed", seed, "master seed; all randomness derives from it")
      ->envname("TRACEGAP_SEED")
      ->capture_default_str();
  app.add_option("--jobs", jobs, "worker count")
      ->envname("TRACEGAP_JOBS")
      ->capture_default_str();
  app.add_option("--tz-offset", tz_offset,
                 "dataset UTC offset in seconds (fixed, no DST)")
      ->envname("TRACEGAP_TZ_OFFSET")
      ->capture_default_str();

  PipelineParams pipe;
  std::string max_gap = "6m", min_span = "24h", interval = "15m";
  auto add_pipeline_opts = [&](CLI::App* cmd) {
    cmd->add_option("--max-gap", max_gap, "coverage gap threshold")
        ->capture_default_str();
    cmd->add_option("--min-span", min_span, "minimum contiguous set span")
        ->capture_default_str();
    cmd->add_option("--interval", interval, "discretization interval")
        ->capture_default_str();
    cmd->add_option("--stay-radius", pipe.seg.stay_radius_m,
                    "stay-point radius, meters")
        ->capture_default_str();
    cmd->add_option("--stay-duration", pipe.seg.stay_min_duration_s,
                    "stay-point minimum dwell, seconds")
        ->capture_default_str();
    cmd->add_option("--tolerance", pipe.seg.tdtr_tolerance_m,
                    "track simplification tolerance, meters")
        ->capture_default_str();
    cmd->add_option("--max-speed", pipe.max_speed_mps,
                    "implausible-speed filter, m/s")
        ->capture_default_str();
  };

  // ---- ingest ----
  auto* cmd_ingest = app.add_subcommand(
      "ingest", "parse raw fixes, report coverage, write canonical store");
  std::string ingest_input;
  cmd_ingest->add_option("--input", ingest_input, "csv or jsonl fixes")
      ->required();
  cmd_ingest->add_option("--max-gap", max_gap, "coverage gap threshold")
      ->capture_default_str();
  cmd_ingest->add_option("--min-span", min_span, "minimum contiguous set span")
      ->capture_default_str();

  // ---- segment ----
  auto* cmd_segment = app.add_subcommand(
      "segment", "stay points + tracks + discretized series per set");
  std::string segment_input;
  cmd_segment->add_option("--input", segment_input, "canonical store csv")
      ->required();
  add_pipeline_opts(cmd_segment);

  // ---- impute ----
  auto* cmd_impute =
      app.add_subcommand("impute", "fill every gap in a series file");
  std::string impute_series, impute_traj, impute_method = "dtwbmi-hi";
  std::string impute_buffer, impute_window = "";
  std::size_t impute_m = 0;
  cmd_impute->add_option("--series", impute_series, "series csv (from segment)")
      ->required();
  cmd_impute->add_option("--traj", impute_traj,
                         "canonical store csv (needed for method li)");
  cmd_impute->add_option("--method", impute_method,
                         "li|mi|twi|dtwbi|dtwbmi-hi|dtwbmi-lo")
      ->capture_default_str();
  cmd_impute->add_option("--buffer", impute_buffer, "match buffer override");
  cmd_impute->add_option("--window", impute_window,
                         "time window override; 'none' lifts it");
  cmd_impute->add_option("--m", impute_m, "imputation count override");

  // ---- simulate ----
  auto* cmd_simulate = app.add_subcommand(
      "simulate", "induce gaps, impute them and score the methods");
  std::string sim_input, sim_gaps = "1h,3h,6h,10h,12h";
  std::string sim_methods = "li,mi,twi,dtwbi,dtwbmi-hi,dtwbmi-lo";
  std::string sim_tod = "any";
  std::string sim_grid;
  bool sim_own_sets = false;
  std::size_t sim_affected = 100;
  cmd_simulate->add_option("--input", sim_input, "canonical store csv")
      ->required();
  cmd_simulate->add_option("--gaps", sim_gaps, "gap lengths, comma separated")
      ->capture_default_str();
  cmd_simulate->add_option("--methods", sim_methods, "methods to compare")
      ->capture_default_str();
  cmd_simulate
      ->add_option("--time-of-day", sim_tod,
                   "strata from any,night,day (comma separated)")
      ->capture_default_str();
  cmd_simulate->add_option("--n-affected", sim_affected,
                           "sets gapped per scenario")
      ->capture_default_str();
  cmd_simulate->add_option("--grid", sim_grid,
                           "'appendix-a' runs the full parameter grid");
  cmd_simulate->add_flag("--own-sets", sim_own_sets,
                         "run the own-sets donor-pool experiment");
  add_pipeline_opts(cmd_simulate);

  // ---- synth ----
  auto* cmd_synth =
      app.add_subcommand("synth", "generate a seeded synthetic dataset");
  SynthParams synth;
  cmd_synth->add_option("--persons", synth.n_persons)->capture_default_str();
  cmd_synth->add_option("--days", synth.days)->capture_default_str();
  cmd_synth->add_option("--sets", synth.sets_per_person)
      ->capture_default_str();
  cmd_synth->add_option("--routine-frac", synth.routine_frac)
      ->capture_default_str();
  cmd_synth->add_option("--variable-frac", synth.variable_frac)
      ->capture_default_str();
  cmd_synth->add_option("--fix-interval", synth.fix_interval_s,
                        "seconds between fixes")
      ->capture_default_str();

  // ---- report ----
  auto* cmd_report =
      app.add_subcommand("report", "re-render a report csv as a text table");
  std::string report_input;
  cmd_report->add_option("--input", report_input, "report csv")->required();

  app.require_subcommand(0, 1);
  CLI11_PARSE(app, argc, argv);

  if (print_config) {
    std::cout << app.config_to_str(true, false);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }

  try {
    pipe.max_gap_s = parse_duration(max_gap);
    pipe.min_span_s = parse_duration(min_span);
    pipe.disc.interval_s = parse_duration(interval);
    pipe.disc.max_gap_s = pipe.max_gap_s;
    pipe.disc.utc_offset_s = tz_offset;
    const fs::path out(out_dir);

    if (cmd_ingest->parsed()) {
      auto trajs = read_trajectory_file(ingest_input);
      auto store = open_out(out, "trajectories.csv");
      write_trajectories_csv(store, trajs);
      auto cov = open_out(out, "coverage.csv");
      cov << "person_id,covered_time_s,coverage_fraction,gap_count,"
             "mean_gap_length_s,sets\n";
      std::printf("%-12s %12s %9s %6s %12s %5s\n", "person", "covered_s",
                  "coverage", "gaps", "mean_gap_s", "sets");
      for (const auto& t : trajs) {
        if (t.points.empty()) continue;
        const auto stats =
            coverage_stats(t, pipe.max_gap_s, t.points.front().timestamp,
                           t.points.back().timestamp);
        const auto sets =
            select_contiguous_sets({t}, pipe.min_span_s, pipe.max_gap_s);
        cov << t.person_id << ',' << stats.covered_time_s << ','
            << stats.coverage_fraction << ',' << stats.gap_count << ','
            << stats.mean_gap_length_s << ',' << sets.size() << '\n';
        std::printf("%-12s %12lld %9.4f %6zu %12.1f %5zu\n",
                    t.person_id.c_str(),
                    static_cast<long long>(stats.covered_time_s),
                    stats.coverage_fraction, stats.gap_count,
                    stats.mean_gap_length_s, sets.size());
      }
    } else if (cmd_segment->parsed()) {
      const Dataset dataset =
          build_dataset(read_trajectory_file(segment_input), pipe);
      auto seg_out = open_out(out, "segmented.jsonl");
      std::vector<MetricSeries> all_series;
      for (const auto& set : dataset.sets) {
        const SegmentedDay seg = segment_trajectory(set.traj, pipe.seg);
        write_segmented_jsonl(seg_out, seg);
        for (const auto& s : set.bundle.series) all_series.push_back(s);
      }
      auto series_out = open_out(out, "series.csv");
      write_series_csv(series_out, all_series);
      std::cout << dataset.sets.size() << " sets, "
                << all_series.size() << " series written\n";
    } else if (cmd_impute->parsed()) {
      std::ifstream in(impute_series);
      if (!in) throw std::runtime_error("cannot open " + impute_series);
      auto all_series = read_series_csv(in);
      const MethodSpec method = method_from_name(impute_method);
      std::map<std::string, Trajectory> trajs;
      if (!impute_traj.empty()) {
        for (auto& t : read_trajectory_file(impute_traj)) {
          trajs[t.person_id] = std::move(t);
        }
      }
      ReferenceCollection refs;
      for (const auto& s : all_series) {
        if (s.metric == Metric::TravelDistanceKm) {
          refs.donors.push_back({s.person_id, s.set_id, s});
        }
      }
      auto completed_out = open_out(out, "completed.csv");
      auto prov_out = open_out(out, "provenance.jsonl");
      prov_out << nlohmann::json{{"seed", seed},
                                 {"method", method.name}}.dump()
               << '\n';
      std::vector<MetricSeries> completed_series;
      std::size_t infeasible = 0;
      for (const auto& s : all_series) {
        if (s.metric != Metric::TravelDistanceKm) continue;
        MetricSeries filled = s;
        for (const GapSpec& gap : find_gaps(s)) {
          try {
            DtwbmiParams params = method.params;
            if (!impute_buffer.empty()) {
              params.match_buffer_s = parse_duration(impute_buffer);
            }
            if (impute_window == "none") {
              params.time_window_s.reset();
            } else if (!impute_window.empty()) {
              params.time_window_s = parse_duration(impute_window);
            }
            if (impute_m > 0) params.n_imputations = impute_m;
            params.rng_seed = derive_seed(
                seed, s.person_id + "/" + s.set_id + "/" +
                          std::to_string(gap.start_index));
            ImputationResult result;
            if (method.kind == MethodKind::LI) {
              auto it = trajs.find(s.person_id);
              if (it == trajs.end()) {
                throw std::runtime_error(
                    "method li needs --traj with person " + s.person_id);
              }
              result = impute_li(s, gap, it->second);
            } else if (method.kind == MethodKind::MI) {
              result = impute_mean(s, gap);
            } else if (method.kind == MethodKind::TWI) {
              result = impute_twi(s, gap, refs, method.twi_window_s,
                                  method.twi_m, params.rng_seed);
            } else {
              result = impute_dtwbmi(s, gap, refs, params);
            }
            for (std::size_t t = gap.start_index; t < gap.end_index; ++t) {
              filled.values[t] = result.pooled.element_mean[t];
              filled.response[t] = true;
            }
            write_provenance_jsonl(prov_out, method.name, s, gap, result);
          } catch (const std::exception& e) {
            ++infeasible;
            std::cerr << "skip " << s.person_id << "/" << s.set_id
                      << " gap@" << gap.start_index << ": " << e.what()
                      << '\n';
          }
        }
        completed_series.push_back(std::move(filled));
      }
      write_series_csv(completed_out, completed_series);
      std::cout << completed_series.size() << " series completed, "
                << infeasible << " gaps skipped\n";
    } else if (cmd_simulate->parsed()) {
      const Dataset dataset =
          build_dataset(read_trajectory_file(sim_input), pipe);
      HarnessConfig config;
      config.utc_offset_s = tz_offset;
      config.master_seed = seed;
      config.jobs = jobs;

      std::vector<Scenario> scenarios;
      std::uint64_t scenario_seed = 0;
      for (const std::string& tod_name : split_csv_list(sim_tod)) {
        TimeOfDay tod = TimeOfDay::Any;
        if (tod_name == "night") tod = TimeOfDay::NightOnly;
        else if (tod_name == "day") tod = TimeOfDay::DayOnly;
        else if (tod_name != "any") {
          throw std::runtime_error("unknown time-of-day stratum: " + tod_name);
        }
        for (const std::string& g : split_csv_list(sim_gaps)) {
          Scenario s;
          s.gap_length_s = parse_duration(g);
          s.n_affected = sim_affected;
          s.seed = scenario_seed++;
          s.time_of_day = tod;
          // the night window is 7 h; longer gaps cannot fit inside it
          if (tod == TimeOfDay::NightOnly &&
              s.gap_length_s > 7 * kSecondsPerHour) {
            continue;
          }
          scenarios.push_back(s);
        }
      }

      if (!sim_grid.empty()) {
        if (sim_grid != "appendix-a") {
          throw std::runtime_error("unknown grid: " + sim_grid);
        }
        const GridResult grid =
            run_parameter_grid(dataset, scenarios, config);
        std::vector<ReportRow> rows;
        for (const auto& cell : grid.cells) {
          const char* spec_label =
              cell.specificity == Specificity::Low      ? "Low"
              : cell.specificity == Specificity::Medium ? "Medium"
                                                        : "High";
          std::ostringstream stratum;
          stratum << spec_label << " | " << cell.buffer_h
                  << (cell.buffer_h == 1 ? " hour" : " hours") << " | "
                  << cell.window_label << " | " << cell.imputations;
          rows.push_back({"grid_cell", stratum.str(), "dtwbmi", cell.cell});
        }
        rows.insert(rows.end(), grid.marginals.begin(), grid.marginals.end());
        auto csv = open_out(out, "grid.csv");
        write_report_csv(csv, rows, seed);
        auto txt = open_out(out, "grid.txt");
        write_report_text(txt, rows, seed);
        std::cout << grid.cells.size() << " grid cells written\n";
      } else if (sim_own_sets) {
        OwnSetsConfig own;
        const auto rows = run_own_sets_experiment(dataset, own, config);
        auto csv = open_out(out, "own_sets.csv");
        write_report_csv(csv, rows, seed);
        auto txt = open_out(out, "own_sets.txt");
        write_report_text(txt, rows, seed);
        std::cout << rows.size() << " own-set rows written\n";
      } else {
        std::vector<MethodSpec> methods;
        for (const std::string& m : split_csv_list(sim_methods)) {
          methods.push_back(method_from_name(m));
        }
        const ComparisonResult result =
            run_comparison(dataset, methods, scenarios, config);
        auto csv = open_out(out, "report.csv");
        write_report_csv(csv, result.rows, seed);
        auto txt = open_out(out, "report.txt");
        write_report_text(txt, result.rows, seed);
        auto raw = open_out(out, "raw.jsonl");
        write_raw_jsonl(raw, result.raw);
        std::cout << result.rows.size() << " report rows written\n";
      }
    } else if (cmd_synth->parsed()) {
      synth.seed = seed;
      synth.utc_offset_s = tz_offset;
      const SynthResult result = synth_trajectories(synth);
      auto store = open_out(out, "synth.csv");
      write_trajectories_csv(store, result.trajectories);
      auto ledger = open_out(out, "synth_truth.jsonl");
      for (const auto& person : result.truth) {
        nlohmann::json trips = nlohmann::json::array();
        for (const auto& t : person.trips) {
          trips.push_back({{"depart", t.depart},
                           {"arrive", t.arrive},
                           {"distance_km", t.distance_km}});
        }
        ledger << nlohmann::json{
                      {"person_id", person.person_id},
                      {"persona", person.persona == Persona::Routine
                                      ? "routine"
                                      : person.persona == Persona::Variable
                                            ? "variable"
                                            : "atypical"},
                      {"home_lat", person.home_lat},
                      {"home_lon", person.home_lon},
                      {"trips", trips}}
                      .dump()
               << '\n';
      }
      std::cout << result.trajectories.size() << " persons written\n";
    } else if (cmd_report->parsed()) {
      std::ifstream in(report_input);
      if (!in) throw std::runtime_error("cannot open " + report_input);
      const auto rows = read_report_csv(in);
      write_report_text(std::cout, rows, seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": " << nlohmann::json(std::string(e.what())).dump()
              << "}\n";
    return 1;
  }
  return 0;
}
