#pragma once

// Measurement-update stage: classify each scalar constraint, tighten its
// bounds against the support interval of the current ellipsoid, and apply
// the switching-gain rank-one update.

#include <setmem/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace setmem {

enum class MeasurementKind { Equality, UpperOnly, LowerOnly, TwoSided };

// One scalar constraint lower <= f'x <= upper with at least one bound.
struct Measurement {
    Vec f;
    std::optional<double> lower;
    std::optional<double> upper;

    Measurement() = default;
    Measurement(Vec normal, std::optional<double> lo, std::optional<double> up)
        : f(std::move(normal)), lower(lo), upper(up)
    {
        detail::require(f.size() > 0 && f.allFinite() && f.norm() > 0.0,
                        "measurement: normal must be finite and nonzero");
        detail::require(lower.has_value() || upper.has_value(),
                        "measurement: at least one bound required");
        detail::require(!lower || std::isfinite(*lower), "measurement: lower bound must be finite");
        detail::require(!upper || std::isfinite(*upper), "measurement: upper bound must be finite");
        detail::require(!(lower && upper) || *lower <= *upper,
                        "measurement: lower bound exceeds upper bound");
    }

    static Measurement equality(Vec normal, double y)
    {
        return Measurement(std::move(normal), y, y);
    }
    static Measurement upper_bound(Vec normal, double y)
    {
        return Measurement(std::move(normal), std::nullopt, y);
    }
    static Measurement lower_bound(Vec normal, double y)
    {
        return Measurement(std::move(normal), y, std::nullopt);
    }
    static Measurement two_sided(Vec normal, double lo, double up)
    {
        return Measurement(std::move(normal), lo, up);
    }
};

inline MeasurementKind classify(const Measurement& m)
{
    if (m.lower && m.upper) return *m.lower == *m.upper ? MeasurementKind::Equality : MeasurementKind::TwoSided;
    return m.upper ? MeasurementKind::UpperOnly : MeasurementKind::LowerOnly;
}

// Intermediate scalars of one rank-one update.
struct CorrectionScratch {
    Vec phi;        // P f
    double theta = 0.0;   // f' P f
    double alpha = 0.0;   // 1/theta when informative
    double lambda = 0.0;  // sqrt(sigma * theta)
    double rho_bar = 0.0; // support of +f
    double rho = 0.0;     // support of -f
    double delta = 0.0;   // tightened midpoint minus f' xhat
    double gamma = 0.0;   // tightened half-width
    double beta = 0.0;    // switching gain
    double ybar = 0.0;    // tightened upper bound
    double ylow = 0.0;    // tightened lower bound
    MeasurementKind kind = MeasurementKind::TwoSided;
};

struct CorrectionOutcome {
    enum class Kind { Updated, SkippedUninformative, SkippedAberrant };

    Kind kind = Kind::SkippedUninformative;
    CorrectionScratch scratch;

    bool updated() const { return kind == Kind::Updated; }
};

enum class AberrantPolicy { Lenient, Strict };

enum class MeasurementOrdering { InputOrder, Grouped };

struct CorrectionSettings {
    AberrantPolicy policy = AberrantPolicy::Lenient;
    MeasurementOrdering ordering = MeasurementOrdering::InputOrder;
    double eps_theta = 1e-14;
    double eps_case = 1e-12;
    double eps_sigma = 1e-12;  // absolute; callers scale by the initial sigma
};

struct AberrantMeasurementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tighten the measurement interval against the support interval
// [-rho, rho_bar]. The aberrant flag signals an empty intersection.
struct ClampedBounds {
    double ybar;
    double ylow;
    bool aberrant;
};

inline ClampedBounds clamp_bounds(const Measurement& m, double rho_bar, double rho,
                                  double eps_case = 1e-12)
{
    const double inf = std::numeric_limits<double>::infinity();
    const double ybar = std::min(m.upper.value_or(inf), rho_bar);
    const double ylow = std::max(m.lower.value_or(-inf), -rho);
    const double eps = eps_case * (1.0 + std::abs(rho_bar) + std::abs(rho));
    return {ybar, ylow, ybar < ylow - eps};
}

// Switching gain: 1 projects onto the constraint plane (equality with a
// non-flat direction), 1 - gamma/|delta| fuses the strip when the center
// violates it, 0 freezes the update.
inline double beta_star(double delta, double gamma, MeasurementKind kind, double rho_bar,
                        double rho, double eps_case = 1e-12)
{
    const double eps = eps_case * (1.0 + std::abs(rho_bar) + std::abs(rho));
    if (kind == MeasurementKind::Equality && rho_bar + rho > eps) return 1.0;
    if (std::abs(delta) > gamma) return 1.0 - gamma / std::abs(delta);
    return 0.0;
}

// One scalar update of the ellipsoid. Uninformative and aberrant constraints
// leave the state untouched; under the strict policy an aberrant constraint
// throws instead.
inline std::pair<Ellipsoid, CorrectionOutcome> correct_single(
    const Ellipsoid& e, const Measurement& m, const CorrectionSettings& settings = {})
{
    detail::require(m.f.size() == e.dim(), "correct_single: dimension mismatch");
    detail::require(e.c.allFinite() && e.P.allFinite() && std::isfinite(e.sigma),
                    "correct_single: state must be finite");

    CorrectionScratch sc;
    sc.kind = classify(m);
    sc.phi = e.P * m.f;
    sc.theta = m.f.dot(sc.phi);
    const double cf = m.f.dot(e.c);

    const auto aberrant_outcome = [&](const char* what) -> std::pair<Ellipsoid, CorrectionOutcome> {
        if (settings.policy == AberrantPolicy::Strict)
            throw AberrantMeasurementError(std::string("aberrant measurement: ") + what);
        log::warn(std::string("skipping aberrant measurement: ") + what);
        return {e, CorrectionOutcome{CorrectionOutcome::Kind::SkippedAberrant, sc}};
    };

    const double theta_floor = settings.eps_theta * (1.0 + e.P.trace() * m.f.squaredNorm());
    if (sc.theta <= theta_floor) {
        // The ellipsoid is flat along f, so f'x is pinned to f'c for every
        // member. The constraint is either already satisfied or contradicts
        // the whole set.
        const double tol = settings.eps_case * (1.0 + std::abs(cf));
        const bool consistent = (!m.upper || cf <= *m.upper + tol) && (!m.lower || cf >= *m.lower - tol);
        if (!consistent) return aberrant_outcome("constraint excludes a flat ellipsoid");
        return {e, CorrectionOutcome{CorrectionOutcome::Kind::SkippedUninformative, sc}};
    }

    sc.alpha = 1.0 / sc.theta;
    sc.lambda = std::sqrt(std::max(0.0, e.sigma * sc.theta));
    sc.rho_bar = sc.lambda + cf;
    sc.rho = sc.lambda - cf;

    const ClampedBounds cb = clamp_bounds(m, sc.rho_bar, sc.rho, settings.eps_case);
    sc.ybar = cb.ybar;
    sc.ylow = cb.ylow;
    if (cb.aberrant) return aberrant_outcome("constraint misses the ellipsoid");

    sc.delta = 0.5 * (cb.ybar + cb.ylow) - cf;
    sc.gamma = std::max(0.0, 0.5 * (cb.ybar - cb.ylow));
    sc.beta = beta_star(sc.delta, sc.gamma, sc.kind, sc.rho_bar, sc.rho, settings.eps_case);

    if (sc.beta == 0.0)
        return {e, CorrectionOutcome{CorrectionOutcome::Kind::SkippedUninformative, sc}};

    double sigma = e.sigma - sc.alpha * sc.beta * sc.beta * sc.delta * sc.delta;
    if (sigma < 0.0) {
        if (sigma < -settings.eps_sigma) return aberrant_outcome("scale update went negative");
        sigma = 0.0;
    }
    Mat p = detail::symmetrize(e.P - (sc.alpha * sc.beta) * (sc.phi * sc.phi.transpose()));
    Vec c = e.c + (sc.alpha * sc.beta * sc.delta) * sc.phi;
    return {Ellipsoid(std::move(c), std::move(p), sigma),
            CorrectionOutcome{CorrectionOutcome::Kind::Updated, sc}};
}

namespace detail {

inline std::vector<std::size_t> correction_order(const std::vector<Measurement>& ms,
                                                 MeasurementOrdering ordering)
{
    std::vector<std::size_t> order(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) order[i] = i;
    if (ordering == MeasurementOrdering::Grouped) {
        auto group = [&](std::size_t i) {
            switch (classify(ms[i])) {
                case MeasurementKind::UpperOnly:
                case MeasurementKind::LowerOnly: return 0;
                case MeasurementKind::TwoSided: return 1;
                case MeasurementKind::Equality: return 2;
            }
            return 1;
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return group(a) < group(b); });
    }
    return order;
}

}  // namespace detail

// Sequential fold of correct_single. Outcomes are reported in input order
// regardless of the processing order.
inline std::pair<Ellipsoid, std::vector<CorrectionOutcome>> correct_all(
    const Ellipsoid& e, const std::vector<Measurement>& ms, const CorrectionSettings& settings = {})
{
    Ellipsoid cur = e;
    std::vector<CorrectionOutcome> outcomes(ms.size());
    for (std::size_t i : detail::correction_order(ms, settings.ordering)) {
        auto [next, outcome] = correct_single(cur, ms[i], settings);
        cur = std::move(next);
        outcomes[i] = std::move(outcome);
    }
    return {std::move(cur), std::move(outcomes)};
}

// Renormalize the scale to sigma0, folding the current decay into the
// tracker so that sigma_bar always equals the scale an unrescaled run would
// carry. The represented set sigma*P is unchanged.
inline std::pair<Ellipsoid, double> rescale(const Ellipsoid& e, double sigma0, double sigma_bar)
{
    detail::require(sigma0 > 0.0, "rescale: sigma0 must be positive");
    detail::require(e.sigma > 0.0, "rescale: scale must be positive");
    const double ratio = e.sigma / sigma0;
    return {Ellipsoid(e.c, ratio * e.P, sigma0), sigma_bar * ratio};
}

}  // namespace setmem
