#pragma once

// Samplers over the basic sets, used by property checks. Ellipsoid samples
// go through the matrix square root, independent of the membership test's
// eigendecomposition path.

#include <setmem/geometry.hpp>
#include <setmem/rng.hpp>

namespace setmem {

// Cached square-root factor for repeated sampling of one ellipsoid.
class EllipsoidSampler {
public:
    explicit EllipsoidSampler(const Ellipsoid& e, double eps_rank = 1e-12)
        : c_(e.c), L_(detail::PsdEigen(e.P, eps_rank).sqrt_psd() * std::sqrt(e.sigma))
    {
    }

    Vec boundary(Rng& rng) const { return c_ + L_ * rng.unit_vec(c_.size()); }
    Vec interior(Rng& rng) const { return c_ + L_ * rng.in_unit_ball(c_.size()); }

private:
    Vec c_;
    Mat L_;
};

inline Vec sample_boundary(const Ellipsoid& e, Rng& rng)
{
    return EllipsoidSampler(e).boundary(rng);
}

inline Vec sample_interior(const Ellipsoid& e, Rng& rng)
{
    return EllipsoidSampler(e).interior(rng);
}

// Random point of Z(c, G): c + G u with u uniform in the unit box. Corner
// samples (u = +-1) come from corner().
inline Vec sample_zonotope(const Zonotope& z, Rng& rng)
{
    Vec u(z.generators());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1.0, 1.0);
    return z.c + z.G * u;
}

inline Vec sample_zonotope_corner(const Zonotope& z, Rng& rng)
{
    Vec u(z.generators());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return z.c + z.G * u;
}

}  // namespace setmem
