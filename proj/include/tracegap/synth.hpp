#pragma once

#include <string>
#include <vector>

#include "tracegap/geo.hpp"
#include "tracegap/rng.hpp"
#include "tracegap/timeutil.hpp"

namespace tracegap {

enum class Persona { Routine, Variable, Atypical };

struct SynthParams {
  std::size_t n_persons = 50;
  std::size_t days = 7;            // days per set
  std::size_t sets_per_person = 1; // sets separated by an hour of silence
  double routine_frac = 0.5;       // remainder split variable, then atypical
  double variable_frac = 0.3;
  std::int64_t fix_interval_s = 60;
  std::int64_t utc_offset_s = 0;
  EpochSeconds start = 1735689600; // 2025-01-01T00:00:00Z, a Wednesday
  std::uint64_t seed = 0;
};

/// One planned trip, kept as ground truth alongside the generated fixes.
struct SynthTrip {
  EpochSeconds depart = 0;
  EpochSeconds arrive = 0;
  double distance_km = 0.0;  // along the actual (bent) route
};

struct SynthPersonTruth {
  std::string person_id;
  Persona persona = Persona::Routine;
  double home_lat = 0.0;
  double home_lon = 0.0;
  std::vector<SynthTrip> trips;
};

struct SynthResult {
  std::vector<Trajectory> trajectories;  // one per person, time-ordered
  std::vector<SynthPersonTruth> truth;
};

/// Seeded persona-based generator. Travel happens in daytime; nights are
/// stationary at home with metre-scale jitter. Routine personas commute on
/// a fixed schedule, variable personas run errands at varying hours,
/// atypical personas mix idle days with occasional long trips.
SynthResult synth_trajectories(const SynthParams& params);

}  // namespace tracegap
