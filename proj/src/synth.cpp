#include "tracegap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tracegap {

namespace {

constexpr double kBaseLat = 52.0;
constexpr double kBaseLon = 5.0;
constexpr double kMetersPerDegLat = 111320.0;
constexpr double kTravelSpeedMps = 8.0;

struct XY {
  double x = 0.0;  // meters east of base
  double y = 0.0;  // meters north of base
};

double dist(const XY& a, const XY& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

XY lerp(const XY& a, const XY& b, double f) {
  return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
}

GeoPoint to_fix(EpochSeconds ts, const XY& p) {
  GeoPoint g;
  g.timestamp = ts;
  g.lat = kBaseLat + p.y / kMetersPerDegLat;
  g.lon = kBaseLon + p.x / (kMetersPerDegLat *
                            std::cos(kBaseLat * M_PI / 180.0));
  return g;
}

/// A round-trip leg with a bent route (one via point), so the travelled
/// distance exceeds the straight line between its endpoints.
struct Movement {
  EpochSeconds depart = 0;
  EpochSeconds arrive = 0;
  XY from, via, to;
  double route_m = 0.0;

  XY at(EpochSeconds t) const {
    const double f = static_cast<double>(t - depart) /
                     static_cast<double>(arrive - depart);
    const double d = f * route_m;
    const double leg1 = dist(from, via);
    if (d <= leg1) return lerp(from, via, leg1 > 0 ? d / leg1 : 0.0);
    const double leg2 = dist(via, to);
    return lerp(via, to, leg2 > 0 ? (d - leg1) / leg2 : 1.0);
  }
};

Movement make_movement(EpochSeconds depart, const XY& from, const XY& to,
                       Rng& rng) {
  Movement m;
  m.depart = depart;
  m.from = from;
  m.to = to;
  // bend the route sideways at the midpoint by 15-30% of its length
  const XY mid = lerp(from, to, 0.5);
  const double dx = to.x - from.x, dy = to.y - from.y;
  const double len = std::hypot(dx, dy);
  const double off = (0.15 + 0.15 * rng.next_double()) * len;
  const double side = rng.next_double() < 0.5 ? 1.0 : -1.0;
  m.via = {mid.x - side * dy / len * off, mid.y + side * dx / len * off};
  m.route_m = dist(from, m.via) + dist(m.via, to);
  m.arrive = depart +
             static_cast<EpochSeconds>(std::ceil(m.route_m / kTravelSpeedMps));
  return m;
}

XY random_destination(const XY& home, double min_km, double max_km, Rng& rng) {
  const double r = (min_km + (max_km - min_km) * rng.next_double()) * 1000.0;
  const double a = 2.0 * M_PI * rng.next_double();
  return {home.x + r * std::cos(a), home.y + r * std::sin(a)};
}

}  // namespace

SynthResult synth_trajectories(const SynthParams& params) {
  if (params.n_persons == 0 || params.days == 0 ||
      params.sets_per_person == 0 || params.fix_interval_s <= 0) {
    throw std::invalid_argument("synth: persons, days, sets and fix interval "
                                "must be positive");
  }
  SynthResult out;
  const std::size_t n_routine = static_cast<std::size_t>(
      std::round(params.routine_frac * static_cast<double>(params.n_persons)));
  const std::size_t n_variable = static_cast<std::size_t>(std::round(
      params.variable_frac * static_cast<double>(params.n_persons)));

  const std::int64_t block = static_cast<std::int64_t>(params.days) *
                             kSecondsPerDay;
  Rng root(params.seed);

  for (std::size_t pi = 0; pi < params.n_persons; ++pi) {
    char id_buf[16];
    std::snprintf(id_buf, sizeof(id_buf), "p%03zu", pi);
    const std::string person_id = id_buf;
    Rng rng = root.derive("person/" + person_id);

    const Persona persona = pi < n_routine ? Persona::Routine
                            : pi < n_routine + n_variable ? Persona::Variable
                                                          : Persona::Atypical;
    const XY home = {(rng.next_double() - 0.5) * 40000.0,
                     (rng.next_double() - 0.5) * 40000.0};
    // routine personas keep one fixed workplace 5-15 km from home
    const XY work = random_destination(home, 5.0, 15.0, rng);

    SynthPersonTruth truth;
    truth.person_id = person_id;
    truth.persona = persona;
    const GeoPoint home_fix = to_fix(0, home);
    truth.home_lat = home_fix.lat;
    truth.home_lon = home_fix.lon;

    Trajectory traj;
    traj.person_id = person_id;

    for (std::size_t set = 0; set < params.sets_per_person; ++set) {
      const EpochSeconds t0 =
          params.start +
          static_cast<EpochSeconds>(set) * (block + kSecondsPerHour);

      std::vector<Movement> moves;
      for (std::size_t day = 0; day < params.days; ++day) {
        const EpochSeconds day0 =
            t0 + static_cast<EpochSeconds>(day) * kSecondsPerDay;
        const int dow = local_day_of_week(day0 + kSecondsPerHour * 12,
                                          params.utc_offset_s);
        auto jitter_min = [&](int spread) {
          return static_cast<EpochSeconds>(rng.next_index(
                     static_cast<std::size_t>(2 * spread + 1))) -
                 spread;
        };
        switch (persona) {
          case Persona::Routine: {
            if (dow < 5) {  // weekday commute
              const EpochSeconds out_t =
                  day0 + 8 * kSecondsPerHour + jitter_min(10) * 60;
              Movement go = make_movement(out_t, home, work, rng);
              const EpochSeconds back_t =
                  day0 + 17 * kSecondsPerHour + jitter_min(10) * 60;
              Movement back = make_movement(back_t, work, home, rng);
              moves.push_back(go);
              moves.push_back(back);
            } else if (dow == 5) {  // saturday errand
              const XY shop = random_destination(home, 1.0, 3.0, rng);
              const EpochSeconds out_t =
                  day0 + 11 * kSecondsPerHour + jitter_min(20) * 60;
              Movement go = make_movement(out_t, home, shop, rng);
              Movement back = make_movement(
                  go.arrive + 45 * kSecondsPerMinute, shop, home, rng);
              moves.push_back(go);
              moves.push_back(back);
            }
            break;
          }
          case Persona::Variable: {
            const std::size_t n_trips = 1 + rng.next_index(3);
            EpochSeconds earliest = day0 + 9 * kSecondsPerHour;
            for (std::size_t k = 0; k < n_trips; ++k) {
              const EpochSeconds latest = day0 + 19 * kSecondsPerHour;
              if (earliest >= latest) break;
              const EpochSeconds out_t =
                  earliest +
                  static_cast<EpochSeconds>(rng.next_index(
                      static_cast<std::size_t>(latest - earliest)));
              const XY dest = random_destination(home, 1.0, 8.0, rng);
              Movement go = make_movement(out_t, home, dest, rng);
              const EpochSeconds dwell =
                  30 * kSecondsPerMinute +
                  static_cast<EpochSeconds>(
                      rng.next_index(60) * kSecondsPerMinute);
              Movement back =
                  make_movement(go.arrive + dwell, dest, home, rng);
              moves.push_back(go);
              moves.push_back(back);
              earliest = back.arrive + 20 * kSecondsPerMinute;
            }
            break;
          }
          case Persona::Atypical: {
            if (rng.next_double() < 0.4) break;  // idle day
            const EpochSeconds out_t =
                day0 + 8 * kSecondsPerHour +
                static_cast<EpochSeconds>(
                    rng.next_index(6 * kSecondsPerHour));
            const XY dest = random_destination(home, 15.0, 40.0, rng);
            Movement go = make_movement(out_t, home, dest, rng);
            const EpochSeconds dwell =
                kSecondsPerHour +
                static_cast<EpochSeconds>(rng.next_index(3 * kSecondsPerHour));
            Movement back = make_movement(go.arrive + dwell, dest, home, rng);
            moves.push_back(go);
            moves.push_back(back);
            break;
          }
        }
      }
      std::sort(moves.begin(), moves.end(),
                [](const Movement& a, const Movement& b) {
                  return a.depart < b.depart;
                });
      // drop legs that would start before the previous one finished
      std::vector<Movement> kept;
      for (const Movement& m : moves) {
        if (!kept.empty() && m.depart < kept.back().arrive +
                                             10 * kSecondsPerMinute) {
          continue;
        }
        // never drop a return leg's start position assumption: each leg
        // starts where the previous one ended, so only keep legs whose
        // origin matches the current position
        if (!kept.empty() && dist(m.from, kept.back().to) > 1.0) continue;
        if (kept.empty() && dist(m.from, home) > 1.0) continue;
        kept.push_back(m);
      }
      if (!kept.empty() && dist(kept.back().to, home) > 1.0) {
        kept.pop_back();  // leave nobody stranded overnight away from home
        while (!kept.empty() && dist(kept.back().to, home) > 1.0) {
          kept.pop_back();
        }
      }

      for (const Movement& m : kept) {
        SynthTrip trip;
        trip.depart = m.depart;
        trip.arrive = m.arrive;
        trip.distance_km = m.route_m / 1000.0;
        truth.trips.push_back(trip);
      }

      // emit fixes on the regular clock; stationary spells get metre-scale
      // jitter so the trace looks like a real receiver
      std::size_t next_move = 0;
      XY resting = home;
      for (EpochSeconds t = t0; t <= t0 + block; t += params.fix_interval_s) {
        while (next_move < kept.size() && kept[next_move].arrive <= t) {
          resting = kept[next_move].to;
          ++next_move;
        }
        XY p;
        if (next_move < kept.size() && kept[next_move].depart <= t) {
          p = kept[next_move].at(t);
        } else {
          p = resting;
          p.x += (rng.next_double() - 0.5) * 3.0;
          p.y += (rng.next_double() - 0.5) * 3.0;
        }
        traj.points.push_back(to_fix(t, p));
      }
    }
    out.trajectories.push_back(std::move(traj));
    out.truth.push_back(std::move(truth));
  }
  return out;
}

}  // namespace tracegap
