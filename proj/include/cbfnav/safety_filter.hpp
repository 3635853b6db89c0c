#pragma once

// Control-barrier-function velocity safety filter.
//
// Two barriers over relative navigation states:
//  - visual-locking barrier (ascending): keeps a ground frame inside the
//    camera's viewing cone, h >= 0 inside
//  - descent barrier (approaching/landing): keeps the vehicle above a
//    radially-symmetric descent surface over the target, h >= 0 above it
//
// A commanded velocity is passed through a single-halfspace QP over a box of
// admissible velocities:  min ||u - u_nom||  s.t.  a.u >= b, |u_i| <= v_i.
// Enforcing a.u >= -alpha*h keeps h >= 0 forward-invariant and pulls h back
// asymptotically when it starts negative.

#include <optional>

#include "cbfnav/math_core.hpp"

namespace cbfnav {

struct VcbfParams {
    double theta_fov = 0.0;  // full opening angle of the locking cone, rad
    Vec3 camera_offset;      // camera position in the body frame
    double alpha = 0.0;      // class-K gain used when building constraints
};

// Descent surface  -z = K1*K2*l*exp(-K1*l) + K3  with l the squared horizontal
// distance to the target axis. K1,K2 are fitted so the surface peaks exactly at
// the switch state; K3 is the surface altitude over the target center.
struct DescentParams {
    double k1 = 1.0;
    double k2 = 0.0;
    double k3 = 0.0;
    double alpha = 0.0;
    // switch state the parameters were derived from, kept for diagnostics
    double z_switch = 0.0;
    double l_switch = 0.0;
};

// Componentwise velocity bound |u_i| <= limits_i, limits_i > 0.
struct VelocityBox {
    Vec3 limits{0.1, 0.1, 0.1};
};

// Halfspace a.u >= b. a has units of dh/dp, b of dh/dt.
struct HalfspaceConstraint {
    Vec3 a;
    double b = 0.0;
};

struct FilterResult {
    Vec3 velocity;
    bool feasible = true;  // false: box and halfspace do not intersect
    bool active = false;   // halfspace constraint active at the solution
};

// Visual-locking barrier value at p, the watched frame's origin expressed in
// the body frame. Positive while the frame lies inside the viewing cone.
// Guard: squared horizontal offset below 1e-9 returns theta_fov/2 (the cone
// axis; gradient is zero there).
double vcbf_value(const Vec3& p, const VcbfParams& params);

// Gradient of vcbf_value with respect to p. Zero inside the axis guard.
Vec3 vcbf_gradient(const Vec3& p, const VcbfParams& params);

// Descent barrier value at p, the vehicle position in the target frame.
double dcbf_value(const Vec3& p, const DescentParams& params);

// Gradient of dcbf_value with respect to p.
Vec3 dcbf_gradient(const Vec3& p, const DescentParams& params);

// Fits the descent surface to the switch state (z_star, l_star):
//  - peak radius: K1 = 1/l_star, so the surface maximum sits at the switch radius
//  - peak height: K2 = -2.718*(z_star + k3), so the maximum altitude matches
//    the switch altitude. The constant is e to four figures, kept verbatim so
//    derived gains are reproducible; the surface value at the switch state then
//    carries a residual (z_star+k3)*(2.718-e)/e, about 1e-4*|z_star+k3| above
//    zero, instead of exactly zero.
// If the vehicle is already below the surface altitude (z_star > -k3) the
// surface degenerates to the plane -z = k3 (K2 = 0). A centered switch state
// (l_star <= 1e-9) uses the same plane fallback: the vehicle is on the axis
// and needs no lateral funnel.
DescentParams derive_descent_params(double z_star, double l_star, double k3, double alpha);

// Constraint row for a barrier state: a = grad, b = -alpha*h.
HalfspaceConstraint build_constraint(double h, const Vec3& grad, double alpha);

// Exact minimum-deviation projection of u_nom onto {a.u >= b} intersected with
// the box. Clamps u_nom to the box first; if that already satisfies the
// halfspace it is returned unchanged. Otherwise the optimum has the halfspace
// active and is found by enumerating the 27 face assignments of the box (each
// axis free / at lower bound / at upper bound) and solving the equality-
// constrained projection on the free coordinates. If box and halfspace do not
// intersect the result is flagged infeasible and carries the best-effort
// point: the maximizer of a.u over the box nearest u_nom.
FilterResult filter_velocity(const Vec3& u_nom, const HalfspaceConstraint& c,
                             const VelocityBox& box);

// Grid-search oracle for filter_velocity: feasible grid point (spacing `step`,
// box corners always included) nearest u_nom, or nullopt if no grid point is
// feasible. Because a.u is maximized at a box corner, emptiness of the grid
// matches emptiness of the true intersection exactly.
std::optional<Vec3> brute_force_filter(const Vec3& u_nom, const HalfspaceConstraint& c,
                                       const VelocityBox& box, double step);

}  // namespace cbfnav
