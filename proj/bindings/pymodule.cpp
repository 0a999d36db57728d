// Python bindings for the core operations: distance, warping, scoring and
// the imputation methods.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tracegap/dtw.hpp"
#include "tracegap/impute.hpp"
#include "tracegap/synth.hpp"

namespace py = pybind11;
using namespace tracegap;

namespace {

TimedValues make_timed(const std::vector<double>& values,
                       const std::vector<std::int64_t>& times) {
  TimedValues tv;
  tv.values = values;
  if (times.empty()) {
    tv.times.resize(values.size(), 0);
  } else {
    if (times.size() != values.size()) {
      throw std::invalid_argument("values and times differ in length");
    }
    tv.times = times;
  }
  return tv;
}

}  // namespace

PYBIND11_MODULE(_tracegap, m) {
  m.doc() = "trajectory gap-filling toolkit";

  m.def(
      "haversine",
      [](double lat1, double lon1, double lat2, double lon2) {
        return haversine({0, lat1, lon1}, {0, lat2, lon2});
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
      "great-circle distance in meters");

  m.def("cost_matrix", &cost_matrix, py::arg("q"), py::arg("rho"),
        "elementwise |q_t - rho_j| matrix");

  m.def(
      "dtw_distance",
      [](const std::vector<double>& q, const std::vector<double>& rho,
         std::optional<int> sakoe_chiba, bool one_to_one, bool open_begin_end,
         std::optional<std::int64_t> time_window_s,
         const std::vector<std::int64_t>& q_times,
         const std::vector<std::int64_t>& rho_times) {
        AlignmentConstraints c;
        c.sakoe_chiba = sakoe_chiba;
        c.one_to_one = one_to_one;
        c.open_begin_end = open_begin_end;
        c.time_window_s = time_window_s;
        const DtwResult r =
            dtw_distance(make_timed(q, q_times), make_timed(rho, rho_times), c);
        return py::make_tuple(r.dissimilarity, r.path);
      },
      py::arg("q"), py::arg("rho"), py::arg("sakoe_chiba") = py::none(),
      py::arg("one_to_one") = false, py::arg("open_begin_end") = false,
      py::arg("time_window_s") = py::none(),
      py::arg("q_times") = std::vector<std::int64_t>{},
      py::arg("rho_times") = std::vector<std::int64_t>{},
      "(dissimilarity, path) under the three-move recurrence");

  py::class_<MetricSeries>(m, "MetricSeries")
      .def(py::init([](const std::vector<double>& values,
                       const std::vector<bool>& response,
                       std::int64_t interval_s, std::int64_t start,
                       const std::string& person_id,
                       const std::string& set_id) {
             MetricSeries s;
             s.values = values;
             s.response = response.empty()
                              ? std::vector<bool>(values.size(), true)
                              : response;
             if (s.response.size() != s.values.size()) {
               throw std::invalid_argument("response length mismatch");
             }
             s.interval_s = interval_s;
             s.start = start;
             s.person_id = person_id;
             s.set_id = set_id;
             return s;
           }),
           py::arg("values"), py::arg("response") = std::vector<bool>{},
           py::arg("interval_s") = 900, py::arg("start") = 0,
           py::arg("person_id") = "p", py::arg("set_id") = "s0")
      .def_readwrite("values", &MetricSeries::values)
      .def_readwrite("response", &MetricSeries::response)
      .def_readwrite("interval_s", &MetricSeries::interval_s)
      .def_readwrite("start", &MetricSeries::start)
      .def_readwrite("person_id", &MetricSeries::person_id)
      .def_readwrite("set_id", &MetricSeries::set_id)
      .def("__len__", &MetricSeries::size);

  py::class_<GapSpec>(m, "GapSpec")
      .def(py::init([](std::size_t start, std::size_t end) {
             GapSpec g;
             g.start_index = start;
             g.end_index = end;
             return g;
           }),
           py::arg("start_index"), py::arg("end_index"))
      .def_readwrite("start_index", &GapSpec::start_index)
      .def_readwrite("end_index", &GapSpec::end_index)
      .def("__len__", &GapSpec::length);

  py::class_<AlignmentResult>(m, "AlignmentResult")
      .def_readonly("donor_person", &AlignmentResult::donor_person)
      .def_readonly("donor_set", &AlignmentResult::donor_set)
      .def_readonly("gap_position", &AlignmentResult::gap_position)
      .def_readonly("dissimilarity", &AlignmentResult::dissimilarity)
      .def_readonly("donor_gap_values", &AlignmentResult::donor_gap_values);

  m.def(
      "score_candidates",
      [](const std::vector<double>& q_pre, const std::vector<double>& q_post,
         std::size_t gap_length,
         const std::vector<std::pair<std::string, std::vector<double>>>&
             donors,
         std::optional<std::int64_t> time_window_s, bool one_to_one) {
        ReferenceCollection refs;
        for (const auto& [name, values] : donors) {
          MetricSeries s;
          s.person_id = name;
          s.values = values;
          s.response.assign(values.size(), true);
          s.interval_s = 900;
          refs.donors.push_back({name, "s0", std::move(s)});
        }
        refs.restrictions.time_window_s = time_window_s;
        AlignmentConstraints c;
        c.one_to_one = one_to_one;
        if (one_to_one) c.sakoe_chiba = 0;
        c.time_window_s = time_window_s;
        TimedValues pre, post;
        pre.values = q_pre;
        post.values = q_post;
        for (std::size_t i = 0; i < q_pre.size(); ++i) {
          pre.times.push_back(static_cast<std::int64_t>(i) * 900);
        }
        const std::int64_t gap_start =
            static_cast<std::int64_t>(q_pre.size()) * 900;
        for (std::size_t i = 0; i < q_post.size(); ++i) {
          post.times.push_back(gap_start +
                               static_cast<std::int64_t>(gap_length + i) *
                                   900);
        }
        return score_candidates(pre, post, gap_length, gap_start, refs, c);
      },
      py::arg("q_pre"), py::arg("q_post"), py::arg("gap_length"),
      py::arg("donors"), py::arg("time_window_s") = py::none(),
      py::arg("one_to_one") = true,
      "best gap placement per donor: [(donor, position, dissimilarity)]");

  py::class_<ImputationResult>(m, "ImputationResult")
      .def_property_readonly("completed",
                             [](const ImputationResult& r) {
                               std::vector<std::vector<double>> out;
                               for (const auto& s : r.completed) {
                                 out.push_back(s.values);
                               }
                               return out;
                             })
      .def_property_readonly(
          "element_mean",
          [](const ImputationResult& r) { return r.pooled.element_mean; })
      .def_property_readonly(
          "element_variance",
          [](const ImputationResult& r) { return r.pooled.element_variance; })
      .def_property_readonly(
          "total_mean",
          [](const ImputationResult& r) { return r.pooled.total_mean; });

  m.def("impute_mean", &impute_mean, py::arg("series"), py::arg("gap"));

  m.def(
      "impute_dtwbmi",
      [](const MetricSeries& series, const GapSpec& gap,
         const std::vector<MetricSeries>& donors, std::int64_t match_buffer_s,
         std::optional<std::int64_t> time_window_s, double kappa,
         std::size_t n_imputations, bool deterministic_best,
         std::uint64_t seed) {
        ReferenceCollection refs;
        for (const auto& d : donors) {
          refs.donors.push_back({d.person_id, d.set_id, d});
        }
        DtwbmiParams params;
        params.match_buffer_s = match_buffer_s;
        params.time_window_s = time_window_s;
        params.kappa = kappa;
        params.n_imputations = n_imputations;
        params.deterministic_best = deterministic_best;
        params.rng_seed = seed;
        return impute_dtwbmi(series, gap, refs, params);
      },
      py::arg("series"), py::arg("gap"), py::arg("donors"),
      py::arg("match_buffer_s") = 8 * kSecondsPerHour,
      py::arg("time_window_s") = py::none(), py::arg("kappa") = 8.0,
      py::arg("n_imputations") = 1, py::arg("deterministic_best") = false,
      py::arg("seed") = 0);

  py::register_exception<InfeasibleAlignmentError>(m, "InfeasibleAlignment",
                                                   PyExc_ValueError);
}
