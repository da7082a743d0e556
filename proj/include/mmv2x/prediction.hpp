#pragma once

// Circular-arc motion prediction from the latest beacon.
//
// Over t seconds a vehicle with speed s and yaw parameter w is taken to sweep
// an arc of length s*t whose angular measure is beta = 2*w*t. The chord from
// the beacon position A to the predicted position B has length 2*R*sin(w*t).
//
//   PaperLiteral         R = s*t / (pi*w*t); offset (sin beta, cos beta)
//                        in the heading frame.
//   GeometricConsistent  R = s / (2*w) so that R*beta equals the arc length;
//                        the chord leaves A at half the arc measure (the
//                        tangent-chord angle), which makes B lie exactly on
//                        the circle.
//
// Both variants fall back to straight-line motion for |w| < omega_min.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "config.hpp"
#include "geometry.hpp"
#include "mobility.hpp"

namespace mmv2x {

inline constexpr double kDefaultOmegaMin = 1e-6;

struct PredictionInput {
  Vec2 estimated_position;
  double speed = 0.0;
  double yaw_rate = 0.0;  // w above; positive curves clockwise
  double heading = 0.0;   // bearing at beacon time
  double elapsed = 0.0;   // t_pr
};

struct PredictionOutput {
  Vec2 position;
  double arc_angle = 0.0;  // beta
  double chord_length = 0.0;
  double radius = std::numeric_limits<double>::infinity();  // infinite on the straight fallback
};

inline PredictionOutput predict_position(const PredictionInput& in, PredictionVariant variant,
                                         double omega_min = kDefaultOmegaMin) {
  if (in.elapsed < 0.0) throw std::invalid_argument("predict_position: elapsed time is negative");
  PredictionOutput out;
  const double w = in.yaw_rate;
  const double t = in.elapsed;
  const double arc = in.speed * t;
  out.arc_angle = 2.0 * w * t;

  if (std::abs(w) < omega_min) {
    out.chord_length = arc;
    out.position = in.estimated_position + heading_vector(in.heading) * arc;
    return out;
  }

  // Signed radius; the chord stays non-negative for either turn direction.
  const double signed_radius = variant == PredictionVariant::PaperLiteral
                                   ? in.speed / (kPi * w)  // s*t / (pi*w*t) with t cancelled
                                   : in.speed / (2.0 * w);
  out.radius = std::abs(signed_radius);
  out.chord_length = 2.0 * signed_radius * std::sin(w * t);
  const double chord_bearing =
      variant == PredictionVariant::PaperLiteral ? out.arc_angle : 0.5 * out.arc_angle;
  const Vec2 local{out.chord_length * std::sin(chord_bearing),
                   out.chord_length * std::cos(chord_bearing)};
  out.position = in.estimated_position + body_to_world(local, in.heading);
  return out;
}

/// Thrown by track() for a vehicle that has never been heard.
class UntrackedVehicle : public std::runtime_error {
 public:
  UntrackedVehicle() : std::runtime_error("vehicle has no received beacon") {}
};

/// Beacons report the heading rate. The arc relation measures the swept arc
/// as 2*w*t, so the equivalent prediction parameter is half the heading rate.
inline double arc_parameter_from_heading_rate(double heading_rate) { return 0.5 * heading_rate; }

/// Position of a vehicle at `now` predicted from the latest record in
/// `history` (ordered by arrival).
inline Vec2 track(std::span<const BeaconRecord> history, double now, PredictionVariant variant,
                  double omega_min = kDefaultOmegaMin) {
  if (history.empty()) throw UntrackedVehicle();
  const BeaconRecord& b = history.back();
  const double elapsed = now - b.timestamp;
  if (elapsed <= 0.0) return b.estimated_position;
  PredictionInput in;
  in.estimated_position = b.estimated_position;
  in.speed = b.speed;
  in.yaw_rate = arc_parameter_from_heading_rate(b.yaw_rate);
  in.heading = b.heading;
  in.elapsed = elapsed;
  return predict_position(in, variant, omega_min).position;
}

inline Vec2 track(const BeaconRecord& latest, double now, PredictionVariant variant,
                  double omega_min = kDefaultOmegaMin) {
  return track(std::span<const BeaconRecord>(&latest, 1), now, variant, omega_min);
}

}  // namespace mmv2x
