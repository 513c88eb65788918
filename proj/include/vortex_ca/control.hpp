#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "fields.hpp"

namespace vortex_ca {

inline constexpr double kDefaultEpsF = 1e-12;

struct ControlOutput {
    double phi_des = 0.0;
    double omega = 0.0;
    double v_right = 0.0;
    double v_left = 0.0;
    double w_right = 0.0;  // wheel angular rates
    double w_left = 0.0;
};

/// Empty when the force is too small to define a direction.
inline std::optional<double> desired_heading(const PlanarVector& F, double eps_f = kDefaultEpsF) {
    if (!(F.norm() > eps_f)) return std::nullopt;
    return std::atan2(F.y, F.x);
}

inline std::optional<double> desired_heading(const ForceCommand& force, double eps_f = kDefaultEpsF) {
    return desired_heading(force.F, eps_f);
}

inline double heading_controller(double phi, double phi_des, const PFParams& params) {
    const double w = params.kp * wrap_angle(phi_des - phi);
    return std::clamp(w, -params.omega_max, params.omega_max);
}

struct WheelSpeeds {
    double v_right, v_left, w_right, w_left;
};

inline WheelSpeeds wheel_speeds(double V, double omega, double d, double r_w) {
    if (!(d > 0.0) || !(r_w > 0.0)) throw DomainError("wheel_speeds: wheel base and wheel radius must be positive");
    const double vr = V + omega * d / 2.0;
    const double vl = V - omega * d / 2.0;
    return {vr, vl, vr / r_w, vl / r_w};
}

}  // namespace vortex_ca
