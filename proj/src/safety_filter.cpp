#include "cbfnav/safety_filter.hpp"

#include <cmath>
#include <limits>

namespace cbfnav {

namespace {
constexpr double kAxisGuard = 1e-9;       // squared horizontal offset below this: on-axis
constexpr double kPeakFitConstant = 2.718;  // e to four figures, see derive_descent_params
constexpr double kHalfPi = 1.5707963267948966;
}  // namespace

double vcbf_value(const Vec3& p, const VcbfParams& params) {
    const double dx = p.x - params.camera_offset.x;
    const double dy = p.y - params.camera_offset.y;
    const double dz = p.z - params.camera_offset.z;
    const double l = dx * dx + dy * dy;
    if (l < kAxisGuard) {
        return params.theta_fov / 2.0;  // on the cone axis: maximal margin
    }
    return std::atan(dz / std::sqrt(l)) - kHalfPi + params.theta_fov / 2.0;
}

Vec3 vcbf_gradient(const Vec3& p, const VcbfParams& params) {
    const double dx = p.x - params.camera_offset.x;
    const double dy = p.y - params.camera_offset.y;
    const double dz = p.z - params.camera_offset.z;
    const double l = dx * dx + dy * dy;
    if (l < kAxisGuard) {
        return {0.0, 0.0, 0.0};
    }
    const double sl = std::sqrt(l);
    const double denom = dz * dz + l;
    return {-dx * dz / (denom * sl), -dy * dz / (denom * sl), sl / denom};
}

double dcbf_value(const Vec3& p, const DescentParams& params) {
    const double l = p.x * p.x + p.y * p.y;
    return -p.z - params.k1 * params.k2 * l * std::exp(-params.k1 * l) - params.k3;
}

Vec3 dcbf_gradient(const Vec3& p, const DescentParams& params) {
    const double l = p.x * p.x + p.y * p.y;
    const double e = std::exp(-params.k1 * l);
    const double s = 2.0 * params.k1 * params.k2 * (params.k1 * l - 1.0) * e;
    return {s * p.x, s * p.y, -1.0};
}

DescentParams derive_descent_params(double z_star, double l_star, double k3, double alpha) {
    DescentParams p;
    p.k3 = k3;
    p.alpha = alpha;
    p.z_switch = z_star;
    p.l_switch = l_star;
    if (z_star > -k3 || l_star <= kAxisGuard) {
        // Already below the surface altitude, or centered over the target:
        // plane barrier -z >= k3. K1 is irrelevant when K2 = 0 but must stay
        // positive; keep the radius fit when it exists.
        p.k1 = l_star > kAxisGuard ? 1.0 / l_star : 1.0;
        p.k2 = 0.0;
        return p;
    }
    p.k1 = 1.0 / l_star;
    p.k2 = -kPeakFitConstant * (z_star + k3);
    return p;
}

HalfspaceConstraint build_constraint(double h, const Vec3& grad, double alpha) {
    return {grad, -alpha * h};
}

namespace {

// max of a.u over the box, attained at a corner
double box_max_along(const Vec3& a, const VelocityBox& box) {
    return std::fabs(a.x) * box.limits.x + std::fabs(a.y) * box.limits.y +
           std::fabs(a.z) * box.limits.z;
}

Vec3 clamp_to_box(const Vec3& u, const VelocityBox& box) {
    auto cl = [](double v, double lim) { return v < -lim ? -lim : (v > lim ? lim : v); };
    return {cl(u.x, box.limits.x), cl(u.y, box.limits.y), cl(u.z, box.limits.z)};
}

// maximizer of a.u over the box nearest u_nom (unique: coordinates with
// a_i = 0 do not affect a.u and stay at the clamped nominal)
Vec3 best_effort_point(const Vec3& u_nom, const Vec3& a, const VelocityBox& box) {
    Vec3 u = clamp_to_box(u_nom, box);
    for (int i = 0; i < 3; ++i) {
        if (a[i] > 0.0) u.set(i, box.limits[i]);
        else if (a[i] < 0.0) u.set(i, -box.limits[i]);
    }
    return u;
}

}  // namespace

FilterResult filter_velocity(const Vec3& u_nom, const HalfspaceConstraint& c,
                             const VelocityBox& box) {
    FilterResult out;
    const Vec3 clamped = clamp_to_box(u_nom, box);
    if (c.a.dot(clamped) >= c.b) {
        out.velocity = clamped;
        out.feasible = true;
        out.active = false;
        return out;
    }

    if (box_max_along(c.a, box) < c.b) {
        out.velocity = best_effort_point(u_nom, c.a, box);
        out.feasible = false;
        out.active = false;
        return out;
    }

    // The clamped nominal violates the halfspace but the intersection is
    // non-empty, so the optimum has a.u = b. Enumerate the 27 box face
    // assignments; on each, project the free coordinates onto the hyperplane.
    constexpr double kFeasTol = 1e-12;
    double best_d2 = std::numeric_limits<double>::infinity();
    Vec3 best{};
    bool found = false;
    for (int code = 0; code < 27; ++code) {
        int state[3] = {code % 3, (code / 3) % 3, code / 9};  // 0 free, 1 lower, 2 upper
        Vec3 u{};
        double b_rem = c.b;
        double a_free_sq = 0.0;
        double a_dot_nom_free = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (state[i] == 1) {
                u.set(i, -box.limits[i]);
                b_rem -= c.a[i] * u[i];
            } else if (state[i] == 2) {
                u.set(i, box.limits[i]);
                b_rem -= c.a[i] * u[i];
            } else {
                a_free_sq += c.a[i] * c.a[i];
                a_dot_nom_free += c.a[i] * u_nom[i];
            }
        }
        if (a_free_sq < 1e-300) {
            // fully fixed (a vertex), or the halfspace normal vanishes on the
            // free coordinates: equality reachable only if b_rem is met by the
            // fixed part; free coordinates then sit at the nominal
            for (int i = 0; i < 3; ++i)
                if (state[i] == 0) u.set(i, u_nom[i]);
            if (c.a.dot(u) < c.b - kFeasTol) continue;
        } else {
            const double lambda = (b_rem - a_dot_nom_free) / a_free_sq;
            for (int i = 0; i < 3; ++i)
                if (state[i] == 0) u.set(i, u_nom[i] + lambda * c.a[i]);
        }
        bool in_box = true;
        for (int i = 0; i < 3; ++i) {
            if (u[i] < -box.limits[i] - kFeasTol || u[i] > box.limits[i] + kFeasTol) {
                in_box = false;
                break;
            }
        }
        if (!in_box) continue;
        if (c.a.dot(u) < c.b - kFeasTol) continue;
        const double d2 = (u - u_nom).squared_norm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = u;
            found = true;
        }
    }

    if (!found) {
        // numerically degenerate; fall back to the best-effort point
        out.velocity = best_effort_point(u_nom, c.a, box);
        out.feasible = c.a.dot(out.velocity) >= c.b;
        out.active = true;
        return out;
    }
    out.velocity = clamp_to_box(best, box);  // no-op up to roundoff, keeps the box exact
    out.feasible = true;
    out.active = true;
    return out;
}

std::optional<Vec3> brute_force_filter(const Vec3& u_nom, const HalfspaceConstraint& c,
                                       const VelocityBox& box, double step) {
    double best_d2 = std::numeric_limits<double>::infinity();
    Vec3 best{};
    bool found = false;

    auto axis_count = [&](double lim) { return static_cast<int>(std::floor(2.0 * lim / step + 1e-9)) + 1; };
    const int nx = axis_count(box.limits.x);
    const int ny = axis_count(box.limits.y);
    const int nz = axis_count(box.limits.z);
    auto coord = [&](int k, int n, double lim) {
        if (k == n) return lim;  // appended corner when the span is not a multiple of step
        return -lim + k * step;
    };
    auto last = [&](int n, double lim) {
        // append the +lim corner if the regular grid misses it
        return (-lim + (n - 1) * step < lim - 1e-12) ? n + 1 : n;
    };

    const int mx = last(nx, box.limits.x), my = last(ny, box.limits.y), mz = last(nz, box.limits.z);
    for (int i = 0; i < mx; ++i) {
        const double ux = coord(i, nx, box.limits.x);
        for (int j = 0; j < my; ++j) {
            const double uy = coord(j, ny, box.limits.y);
            const double part = c.a.x * ux + c.a.y * uy - c.b;
            const double dx2 = (ux - u_nom.x) * (ux - u_nom.x) + (uy - u_nom.y) * (uy - u_nom.y);
            if (dx2 >= best_d2) continue;
            for (int k = 0; k < mz; ++k) {
                const double uz = coord(k, nz, box.limits.z);
                if (part + c.a.z * uz < 0.0) continue;
                const double d2 = dx2 + (uz - u_nom.z) * (uz - u_nom.z);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = {ux, uy, uz};
                    found = true;
                }
            }
        }
    }
    if (!found) return std::nullopt;
    return best;
}

}  // namespace cbfnav
