#pragma once

// Set calculus for ellipsoids, zonotopes, strips, halfspaces and hyperplanes.
// Every bounding operation here is exact or a guaranteed outer bound; the
// rest of the library is tested against these primitives.

#include <setmem/linalg.hpp>
#include <setmem/log.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace setmem {

// E(c, sigma*P) = {x : (x-c)' (sigma*P)^-1 (x-c) <= 1}. P is kept symmetric
// PSD; degenerate (flat) shapes are legal. sigma = 0 encodes the point {c}.
struct Ellipsoid {
    Vec c;
    Mat P;
    double sigma = 1.0;

    Ellipsoid() = default;
    Ellipsoid(Vec center, Mat shape, double scale)
        : c(std::move(center)), P(detail::symmetrize(shape)), sigma(scale)
    {
        detail::require(P.rows() == P.cols() && P.rows() == c.size(), "ellipsoid dimension mismatch");
        detail::require(sigma >= 0.0, "ellipsoid scale must be nonnegative");
        detail::require(c.allFinite() && P.allFinite(), "ellipsoid entries must be finite");
    }

    Eigen::Index dim() const { return c.size(); }

    // Full shape matrix sigma*P of the represented set.
    Mat shape() const { return sigma * P; }
};

// Z(c, G) = {c + G z : |z|_inf <= 1}. Zero generator count means {c}.
struct Zonotope {
    Vec c;
    Mat G;

    Zonotope() = default;
    Zonotope(Vec center, Mat generators) : c(std::move(center)), G(std::move(generators))
    {
        detail::require(G.size() == 0 || G.rows() == c.size(), "zonotope dimension mismatch");
    }

    Eigen::Index dim() const { return c.size(); }
    Eigen::Index generators() const { return G.cols(); }
};

// {x : |x'd - a| <= 1}, width 2/|d|.
struct Strip {
    Vec d;
    double a = 0.0;

    Strip() = default;
    Strip(Vec normal, double offset) : d(std::move(normal)), a(offset)
    {
        detail::require(d.norm() > 0.0, "strip normal must be nonzero");
    }
};

// {x : x'd <= a}.
struct Halfspace {
    Vec d;
    double a = 0.0;

    Halfspace() = default;
    Halfspace(Vec normal, double bound) : d(std::move(normal)), a(bound)
    {
        detail::require(d.norm() > 0.0, "halfspace normal must be nonzero");
    }
};

// {x : x'd = a}.
struct Hyperplane {
    Vec d;
    double a = 0.0;

    Hyperplane() = default;
    Hyperplane(Vec normal, double offset) : d(std::move(normal)), a(offset)
    {
        detail::require(d.norm() > 0.0, "hyperplane normal must be nonzero");
    }
};

// Outcome of reducing an ellipsoid/halfspace intersection to a strip.
struct StripReduction {
    enum class Kind { Empty, NoInformation, Point, Strip };

    Kind kind = Kind::NoInformation;
    Vec point;        // set when kind == Point; lies on the source boundary
    struct Strip strip;  // set when kind == Strip

    static StripReduction empty() { return {Kind::Empty, {}, {}}; }
    static StripReduction no_information() { return {Kind::NoInformation, {}, {}}; }
    static StripReduction at_point(Vec p) { return {Kind::Point, std::move(p), {}}; }
    static StripReduction as_strip(struct Strip s) { return {Kind::Strip, {}, std::move(s)}; }
};

// Outcome of intersecting an ellipsoid with a hyperplane.
struct HyperplaneCut {
    enum class Kind { Empty, Unchanged, Reduced };

    Kind kind = Kind::Unchanged;
    Ellipsoid ellipsoid;  // set when kind == Reduced

    static HyperplaneCut empty() { return {Kind::Empty, {}}; }
    static HyperplaneCut unchanged() { return {Kind::Unchanged, {}}; }
    static HyperplaneCut reduced(Ellipsoid e) { return {Kind::Reduced, std::move(e)}; }
};

// Support value sup_{u in E} u'x = c'x + sqrt(sigma * x'Px).
inline double support(const Ellipsoid& e, const Vec& x)
{
    detail::require(x.size() == e.dim(), "support: dimension mismatch");
    const double q = std::max(0.0, x.dot(e.P * x));
    return e.c.dot(x) + std::sqrt(e.sigma * q);
}

// Signed distance from E(c, sigma*P) to H(d, a); negative iff the plane cuts
// the ellipsoid's interior.
inline double signed_distance_hyperplane(const Ellipsoid& e, const Hyperplane& h)
{
    detail::require(h.d.size() == e.dim(), "signed_distance: dimension mismatch");
    const double nd = h.d.norm();
    detail::require(nd > 0.0, "signed_distance: zero normal");
    const double q = std::max(0.0, h.d.dot(e.P * h.d));
    return (std::abs(h.a - e.c.dot(h.d)) - std::sqrt(e.sigma * q)) / nd;
}

// Image A*E + b = E(Ac + b, sigma * A P A').
inline Ellipsoid affine_image(const Ellipsoid& e, const Mat& a, const Vec& b)
{
    detail::require(a.cols() == e.dim() && b.size() == a.rows(), "affine_image: dimension mismatch");
    return Ellipsoid(a * e.c + b, detail::symmetrize(a * e.P * a.transpose()), e.sigma);
}

// Parametrized outer bound of E1 (+) E2 on the full shape matrices:
// center c1+c2, shape (1+mu) S1 + (1+1/mu) S2. Requires equal scales so the
// result can keep them.
inline Ellipsoid minkowski_bound(const Ellipsoid& e1, const Ellipsoid& e2, double mu)
{
    detail::require(e1.dim() == e2.dim(), "minkowski_bound: dimension mismatch");
    detail::require(mu > 0.0, "minkowski_bound: mu must be positive");
    detail::require(std::abs(e1.sigma - e2.sigma) <= 1e-12 * (1.0 + std::abs(e1.sigma)),
                    "minkowski_bound: scales must match");
    Mat p = (1.0 + mu) * e1.P + (1.0 + 1.0 / mu) * e2.P;
    return Ellipsoid(e1.c + e2.c, p, e1.sigma);
}

// Z(0, G) as the Minkowski sum of one degenerate rank-one ellipsoid per
// generator column.
inline std::vector<Ellipsoid> zonotope_as_rank1_ellipsoids(const Zonotope& z)
{
    std::vector<Ellipsoid> out;
    out.reserve(static_cast<std::size_t>(z.generators()));
    for (Eigen::Index j = 0; j < z.generators(); ++j) {
        const Vec r = z.G.col(j);
        out.emplace_back(Vec::Zero(z.dim()), Mat(r * r.transpose()), 1.0);
    }
    return out;
}

// Reduces E n G(f, ybar) to one of: empty set, the whole ellipsoid, a single
// tangency point, or a strip D whose intersection with E equals E n G.
// Boundary classification uses an absolute tolerance; an ambiguous tangency
// from above resolves to the strip so the set never collapses on noise.
inline StripReduction halfspace_to_strip(const Ellipsoid& e, const Halfspace& g,
                                         double eps_case = 1e-12)
{
    detail::require(g.d.size() == e.dim(), "halfspace_to_strip: dimension mismatch");
    const Vec& f = g.d;
    const double ybar = g.a;
    const double theta = std::max(0.0, f.dot(e.P * f));
    const double s = std::sqrt(e.sigma * theta);
    const double cf = e.c.dot(f);
    const double rho = -cf + s;      // support of -f
    const double rho_bar = cf + s;   // support of +f
    const double eps = eps_case * (1.0 + std::abs(rho_bar) + std::abs(rho));

    if (ybar < -rho - eps) return StripReduction::empty();
    if (ybar >= rho_bar) return StripReduction::no_information();
    if (ybar <= -rho && theta > 0.0) {
        // Tangent plane: E n G is the single support point in direction -f.
        Vec p = e.c - std::sqrt(e.sigma / theta) * (e.P * f);
        return StripReduction::at_point(std::move(p));
    }
    if (theta <= 0.0) {
        // Flat ellipsoid orthogonal to f: rho_bar == -rho, so the cases above
        // already decided; reaching here means ybar is inside the tolerance
        // band. Treat as covered.
        return StripReduction::no_information();
    }
    const double gamma = 0.5 * (ybar + rho);
    const double y = (ybar - rho) / (2.0 * gamma);
    return StripReduction::as_strip(Strip(f / gamma, y));
}

// Outer ellipsoid for D n E with blend parameter beta in [0, 1). The strip
// bounds are first tightened against the support interval [-rho, rho_bar];
// if the tightened strip covers the whole shadow the ellipsoid is returned
// unchanged. Throws if the intersection is empty.
inline Ellipsoid strip_intersect_bound(const Ellipsoid& e, const Strip& d, double beta,
                                       double eps_case = 1e-12)
{
    detail::require(d.d.size() == e.dim(), "strip_intersect_bound: dimension mismatch");
    detail::require(beta >= 0.0 && beta < 1.0, "strip_intersect_bound: beta must be in [0,1)");
    const Vec& f = d.d;
    const double theta = std::max(0.0, f.dot(e.P * f));
    const double s = std::sqrt(e.sigma * theta);
    const double cf = e.c.dot(f);
    const double rho = -cf + s;
    const double rho_bar = cf + s;
    const double eps = eps_case * (1.0 + std::abs(rho_bar) + std::abs(rho));

    if (d.a - 1.0 > rho_bar + eps || d.a + 1.0 < -rho - eps)
        throw std::domain_error("strip_intersect_bound: empty intersection");
    if (d.a + 1.0 >= rho_bar - eps && d.a - 1.0 <= -rho + eps)
        return e;  // strip covers the ellipsoid shadow: zero information
    if (theta <= 0.0) return e;  // flat along f and consistent: nothing to gain

    const double ybar = std::min(d.a + 1.0, rho_bar);
    const double ylow = std::max(d.a - 1.0, -rho);
    const double delta = 0.5 * (ybar + ylow) - cf;
    const double gamma = 0.5 * (ybar - ylow);
    const double alpha = 1.0 / theta;

    if (beta == 0.0) return e;
    const Vec phi = e.P * f;
    Mat p = e.P - (alpha * beta) * (phi * phi.transpose());
    Vec c = e.c + (alpha * beta * delta) * phi;
    double sg = e.sigma + alpha * beta * (gamma * gamma / (1.0 - beta) - delta * delta);
    if (sg < 0.0) sg = 0.0;
    return Ellipsoid(std::move(c), std::move(p), sg);
}

// Exact intersection E n H. Degenerate directions are honored: a flat
// ellipsoid lying inside the plane is returned unchanged, a parallel offset
// plane yields the empty set, otherwise the shape loses one rank.
inline HyperplaneCut hyperplane_intersect(const Ellipsoid& e, const Hyperplane& h,
                                          double eps_case = 1e-12)
{
    detail::require(h.d.size() == e.dim(), "hyperplane_intersect: dimension mismatch");
    const Vec& f = h.d;
    const double y = h.a;
    const double theta = std::max(0.0, f.dot(e.P * f));
    const double s = std::sqrt(e.sigma * theta);
    const double cf = e.c.dot(f);
    const double rho = -cf + s;
    const double rho_bar = cf + s;
    const double eps = eps_case * (1.0 + std::abs(rho_bar) + std::abs(rho));

    if (y > rho_bar + eps || y < -rho - eps) return HyperplaneCut::empty();
    if (s <= eps) {
        // rho_bar == -rho: the ellipsoid is flat along f and the plane passes
        // through it.
        return HyperplaneCut::unchanged();
    }

    const double alpha = 1.0 / theta;
    const double delta = y - cf;
    const Vec phi = e.P * f;
    Mat p = e.P - alpha * (phi * phi.transpose());
    Vec c = e.c + (alpha * delta) * phi;
    double sg = e.sigma - alpha * delta * delta;
    if (sg < 0.0) sg = 0.0;
    return HyperplaneCut::reduced(Ellipsoid(std::move(c), std::move(p), sg));
}

// Membership test honoring degenerate shapes: the kernel-space component of
// x - c must vanish (up to tol) and the range-space quadratic form must not
// exceed sigma * (1 + tol).
inline bool contains(const Ellipsoid& e, const Vec& x, double tol, double eps_rank = 1e-12)
{
    detail::require(x.size() == e.dim(), "contains: dimension mismatch");
    detail::PsdEigen eig(e.P, eps_rank);
    double kernel_norm = 0.0, form = 0.0;
    eig.pseudo_quadform(x - e.c, kernel_norm, form);
    return kernel_norm <= tol && form <= e.sigma * (1.0 + tol);
}

}  // namespace setmem
