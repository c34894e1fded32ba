#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "biotrom/biot_fom.hpp"

namespace biotrom {

TimeSchedule build_time_schedule(double dt0, double dt_mult, double dt_max, double final_time) {
  if (!(dt0 > 0.0 && dt_mult > 0.0 && dt_max > 0.0 && final_time > 0.0)) {
    throw std::invalid_argument("time schedule: all inputs must be positive");
  }
  if (!(final_time >= dt0)) throw std::invalid_argument("time schedule: T must be at least dt0");
  TimeSchedule s{dt0, dt_mult, dt_max, final_time, {0.0}};
  const double floor = 1e-6 * final_time;
  double dt = std::min(dt0, dt_max);
  double t = 0.0;
  while (true) {
    if (dt < floor) {
      throw std::invalid_argument("time schedule: step " + std::to_string(dt) + " s fell below the floor 1e-6*T; dt_mult = " +
                                  std::to_string(dt_mult) + " shrinks steps to nothing");
    }
    double next = t + dt;
    // Absorb round-off so the grid lands exactly on T.
    if (next >= final_time - 1e-9 * final_time) next = final_time;
    s.times.push_back(next);
    t = next;
    if (t >= final_time) break;
    dt = std::min(dt_mult * dt, dt_max);
  }
  return s;
}

Vector bdf1(const Vector& current, const Vector& previous, double dt) {
  if (current.size() != previous.size()) throw std::invalid_argument("bdf1: vector length mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("bdf1: dt must be positive");
  return (current - previous) / dt;
}

double weighted_average_weight(double k_plus, double k_minus) {
  if (k_plus < 0.0 || k_minus < 0.0) throw std::invalid_argument("weighted_average_weight: negative permeability");
  if (!(k_plus + k_minus > 0.0)) throw std::invalid_argument("weighted_average_weight: both permeabilities zero");
  return k_minus / (k_plus + k_minus);
}

double harmonic_permeability(double k_plus, double k_minus) {
  if (!(k_plus > 0.0 && k_minus > 0.0)) throw std::invalid_argument("harmonic_permeability: values must be positive");
  return 2.0 * k_plus * k_minus / (k_plus + k_minus);
}

}  // namespace biotrom
