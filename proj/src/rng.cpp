#include "dpfl/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dpfl {

double RngStream::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back by U^(1/shape).
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = gaussian();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = uniform();
        double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x2 + d - d * v + d * std::log(v)) return d * v;
    }
}

std::vector<double> RngStream::dirichlet(double alpha, std::size_t n) {
    std::vector<double> q(n);
    double total = 0.0;
    for (auto& qi : q) {
        qi = gamma(alpha);
        total += qi;
    }
    if (total <= 0.0) {
        // All-zero draws can only occur via underflow at tiny alpha; fall
        // back to a uniform vector rather than dividing by zero.
        for (auto& qi : q) qi = 1.0 / static_cast<double>(n);
        return q;
    }
    for (auto& qi : q) qi /= total;
    return q;
}

std::vector<int> RngStream::sample_without_replacement(int n, int m) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m && i < n; ++i) {
        std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[j], pool[static_cast<std::size_t>(n - 1 - i)]);
        out.push_back(pool[static_cast<std::size_t>(n - 1 - i)]);
    }
    return out;
}

}  // namespace dpfl
