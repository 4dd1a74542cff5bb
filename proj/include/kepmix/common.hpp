#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kepmix {

using Vec3 = std::array<double, 3>;

constexpr double PI     = 3.14159265358979323846;
constexpr double TWO_PI = 6.28318530717958647692;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Orbit too close to circular, equatorial or unbound for the element
/// transforms to be well conditioned.
class DegenerateOrbit : public Error {
public:
    explicit DegenerateOrbit(const std::string& msg) : Error(msg) {}
};

/// An iterative solver exhausted its iteration budget.
class NonConvergence : public Error {
public:
    explicit NonConvergence(const std::string& msg) : Error(msg) {}
};

/// Reduce any angle to the principal branch (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, TWO_PI);   // lands in [-pi, pi]
    if (a <= -PI)
        a += TWO_PI;
    return a;
}

inline double sq(double x) { return x * x; }

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0]*b[0] + a[1]*b[1] + a[2]*b[2];
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1]*b[2] - a[2]*b[1],
            a[2]*b[0] - a[0]*b[2],
            a[0]*b[1] - a[1]*b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace kepmix
