#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vortex_ca {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct CollisionSingularity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// 2-D vector in meters or meters per second.
struct PlanarVector {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PlanarVector&, const PlanarVector&) = default;

    PlanarVector operator+(const PlanarVector& o) const { return {x + o.x, y + o.y}; }
    PlanarVector operator-(const PlanarVector& o) const { return {x - o.x, y - o.y}; }
    PlanarVector operator-() const { return {-x, -y}; }
    PlanarVector operator*(double s) const { return {x * s, y * s}; }
    PlanarVector operator/(double s) const { return {x / s, y / s}; }
    PlanarVector& operator+=(const PlanarVector& o) {
        x += o.x;
        y += o.y;
        return *this;
    }

    double dot(const PlanarVector& o) const { return x * o.x + y * o.y; }
    double cross(const PlanarVector& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }

    /// Rotated by +90 degrees.
    PlanarVector perp() const { return {-y, x}; }
};

inline PlanarVector operator*(double s, const PlanarVector& v) { return v * s; }

inline PlanarVector unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

/// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

struct Behavior {
    enum class Kind { Cooperative, NonCooperative, Stationary, Attacking };
    Kind kind = Kind::Cooperative;
    int target = 0;  // Attacking only

    friend bool operator==(const Behavior&, const Behavior&) = default;

    static Behavior cooperative() { return {Kind::Cooperative, 0}; }
    static Behavior noncooperative() { return {Kind::NonCooperative, 0}; }
    static Behavior stationary() { return {Kind::Stationary, 0}; }
    static Behavior attacking(int target_id) { return {Kind::Attacking, target_id}; }

    bool is(Kind k) const { return kind == k; }
};

inline const char* to_string(Behavior::Kind k) {
    switch (k) {
        case Behavior::Kind::Cooperative: return "cooperative";
        case Behavior::Kind::NonCooperative: return "noncooperative";
        case Behavior::Kind::Stationary: return "stationary";
        case Behavior::Kind::Attacking: return "attacking";
    }
    return "?";
}

struct RobotState {
    int id = 0;
    PlanarVector position;
    double heading = 0.0;  // (-pi, pi]
    double speed = 0.0;
    double body_radius = 0.175;
    Behavior behavior;
    std::optional<PlanarVector> goal;
    bool active = true;

    friend bool operator==(const RobotState&, const RobotState&) = default;

    PlanarVector velocity() const { return unit_from_angle(heading) * speed; }
};

using World = std::vector<RobotState>;

/// Polar relative state of robot j as seen from robot i.
struct EngagementState {
    int i = 0;
    int j = 0;
    double r = 0.0;
    double theta = 0.0;       // LOS angle from i to j
    PlanarVector los;         // unit LOS vector (cos theta, sin theta)
    double vr = 0.0;
    double vth = 0.0;
    double vrel = 0.0;
    double cos_gamma = 0.0;
    bool gamma_defined = false;
    bool triggered = false;
};

inline constexpr double kDefaultEpsV = 1e-6;

/// Engagement from relative position and relative velocity of j with respect to i.
inline EngagementState engagement_from_relative(const PlanarVector& x_rel, const PlanarVector& v_rel,
                                                double eps_v = kDefaultEpsV, int i = 0, int j = 0) {
    EngagementState e;
    e.i = i;
    e.j = j;
    e.r = x_rel.norm();
    if (!(e.r > 0.0)) {
        throw CollisionSingularity("robots " + std::to_string(i) + " and " + std::to_string(j) +
                                   " occupy the same point");
    }
    e.theta = std::atan2(x_rel.y, x_rel.x);
    e.los = x_rel / e.r;
    e.vr = v_rel.dot(e.los);
    e.vth = v_rel.dot(e.los.perp());
    e.vrel = std::hypot(e.vr, e.vth);
    e.gamma_defined = e.vrel > eps_v;
    e.cos_gamma = e.gamma_defined ? e.vr / e.vrel : 0.0;
    e.triggered = e.gamma_defined && e.cos_gamma < 0.0;
    return e;
}

inline EngagementState engagement(const RobotState& a, const RobotState& b, double eps_v = kDefaultEpsV) {
    return engagement_from_relative(b.position - a.position, b.velocity() - a.velocity(), eps_v, a.id, b.id);
}

inline double relative_speed_from_headings(double V, double phi_i, double phi_j) {
    return V * std::numbers::sqrt2 * std::sqrt(1.0 - std::cos(wrap_angle(phi_i - phi_j)));
}

/// One classical RK4 step for any indexable state with size().
template <class State, class Deriv>
State rk4_step(const State& y, double h, Deriv&& f) {
    const std::size_t n = y.size();
    auto axpy = [n](const State& a, double s, const State& b) {
        State out = a;
        for (std::size_t k = 0; k < n; ++k) out[k] = a[k] + s * b[k];
        return out;
    };
    const State k1 = f(y);
    const State k2 = f(axpy(y, 0.5 * h, k1));
    const State k3 = f(axpy(y, 0.5 * h, k2));
    const State k4 = f(axpy(y, h, k3));
    State out = y;
    for (std::size_t k = 0; k < n; ++k) out[k] = y[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    return out;
}

inline void require_finite(const RobotState& s, const char* where) {
    if (!s.position.finite() || !std::isfinite(s.heading) || !std::isfinite(s.speed)) {
        throw NonFiniteState(std::string(where) + ": robot " + std::to_string(s.id) + " has a non-finite state");
    }
}

/// Unicycle propagation with omega held over dt.
inline RobotState propagate(const RobotState& state, double omega, double dt, int substeps = 1) {
    if (!state.active) return state;
    if (!(dt > 0.0) || substeps < 1) throw DomainError("propagate: dt must be positive");
    require_finite(state, "propagate");
    if (!std::isfinite(omega)) throw NonFiniteState("propagate: non-finite omega for robot " + std::to_string(state.id));

    const double V = state.speed;
    auto f = [V, omega](const std::array<double, 3>& s) {
        return std::array<double, 3>{V * std::cos(s[2]), V * std::sin(s[2]), omega};
    };
    std::array<double, 3> s{state.position.x, state.position.y, state.heading};
    const double h = dt / substeps;
    for (int k = 0; k < substeps; ++k) s = rk4_step(s, h, f);

    RobotState out = state;
    out.position = {s[0], s[1]};
    out.heading = wrap_angle(s[2]);
    require_finite(out, "propagate");
    return out;
}

}  // namespace vortex_ca
