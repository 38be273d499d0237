#pragma once

// Deterministic random helpers. Distributions are hand-rolled on top of
// mt19937_64 so that a given seed produces the same stream on every
// platform and standard library.

#include <setmem/linalg.hpp>

#include <cmath>
#include <cstdint>
#include <random>

namespace setmem {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

    Vec normal_vec(Eigen::Index n)
    {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Mat normal_mat(Eigen::Index rows, Eigen::Index cols)
    {
        Mat m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    // Uniform direction on the unit sphere.
    Vec unit_vec(Eigen::Index n)
    {
        Vec v = normal_vec(n);
        double nrm = v.norm();
        while (nrm < 1e-12) {
            v = normal_vec(n);
            nrm = v.norm();
        }
        return v / nrm;
    }

    // Uniform point in the closed unit ball.
    Vec in_unit_ball(Eigen::Index n)
    {
        const double r = std::pow(uniform_pos(), 1.0 / static_cast<double>(n));
        return r * unit_vec(n);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace setmem
