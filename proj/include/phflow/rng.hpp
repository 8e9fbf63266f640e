#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace phflow {

// Deterministic random source. mt19937_64 has a standard-mandated sequence and
// the mappings below avoid std::distribution classes, whose output is
// implementation-defined; two runs with the same seed produce the same stream
// on any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : engine_(seed ^ 0x9e3779b97f4a7c15ull) {}

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (pairwise, second value cached).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // |N(0,1)|.
    double half_normal() { return std::abs(gaussian()); }

    // Random sign, +1 or -1.
    double sign() { return uniform() < 0.5 ? 1.0 : -1.0; }

    Eigen::VectorXd gaussian_vector(int dim) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = gaussian();
        return v;
    }

    // Uniform direction on the unit sphere of R^dim.
    Eigen::VectorXd unit_vector(int dim) {
        Eigen::VectorXd v = gaussian_vector(dim);
        double n = v.norm();
        while (n < 1e-12) {  // astronomically unlikely; redraw keeps determinism
            v = gaussian_vector(dim);
            n = v.norm();
        }
        return v / n;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace phflow
