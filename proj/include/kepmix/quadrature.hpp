#pragma once

#include <vector>

namespace kepmix {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> node;
    std::vector<double> weight;
};

/// Rule of the requested order, computed once and cached; thread safe.
const GaussLegendre& gauss_legendre(int n);

/// Integrate f over [a, b] with the n point rule.
template <typename F>
double integrate_gl(const F& f, double a, double b, int n) {
    const GaussLegendre& gl = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += gl.weight[i] * f(mid + half * gl.node[i]);
    return sum * half;
}

}  // namespace kepmix
