#pragma once

// Monte-Carlo property suites. The CLI exposes them as `check`; the
// acceptance suite pins them at fixed parameters.

#include <setmem/harness.hpp>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace setmem::checks {

struct CheckResult {
    bool pass = true;
    long violations = 0;
    double worst = 0.0;  // worst observed margin, meaning depends on the suite
    std::string detail;
};

// Random SPD shape with eigenvalues in [0.2, 2] times scale.
inline Mat random_spd(Rng& rng, Eigen::Index n, double scale = 1.0)
{
    Mat q = rng.normal_mat(n, n);
    Eigen::HouseholderQR<Mat> qr(q);
    Mat u = qr.householderQ();
    Vec d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = rng.uniform(0.2, 2.0) * scale;
    return detail::symmetrize(u * d.asDiagonal() * u.transpose());
}

// Truth stays inside the reported ellipsoid at every step of every trial.
inline CheckResult containment_monte_carlo(int trials, const std::vector<int>& dims, int horizon,
                                           double tol, std::uint64_t seed)
{
    CheckResult res;
    long checked = 0;
    for (int t = 0; t < trials; ++t) {
        harness::ScenarioConfig cfg;
        cfg.n = dims[static_cast<std::size_t>(t) % dims.size()];
        cfg.m = cfg.n;
        cfg.l = 1;
        cfg.horizon = horizon;
        cfg.seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(t)));
        cfg.strips = 2;
        cfg.halfspaces = 1;
        cfg.equalities = 1;
        cfg.schedule = t % 2 == 0 ? harness::ScheduleKind::EveryStep : harness::ScheduleKind::RandomSteps;
        cfg.schedule_prob = 0.6;
        harness::RunResult run = harness::run_scenario(cfg);
        for (std::size_t k = 0; k < run.trajectory.points.size(); ++k) {
            Ellipsoid e(run.trajectory.xhat[k], run.trajectory.P[k], run.trajectory.sigma[k]);
            ++checked;
            if (!contains(e, run.trajectory.x_true[k], tol)) ++res.violations;
        }
    }
    res.pass = res.violations == 0;
    std::ostringstream os;
    os << checked << " states checked, " << res.violations << " containment violations";
    res.detail = os.str();
    return res;
}

// Ellipsoidal recursion vs the equivalent covariance filter.
inline CheckResult oracle_equivalence(int systems, const std::vector<int>& dims, int horizon,
                                      std::uint64_t seed)
{
    CheckResult res;
    double worst_state = 0.0, worst_shape = 0.0;
    for (int t = 0; t < systems; ++t) {
        harness::ScenarioConfig cfg;
        cfg.n = dims[static_cast<std::size_t>(t) % dims.size()];
        cfg.m = cfg.n;
        cfg.l = 1;
        cfg.horizon = horizon;
        cfg.seed = splitmix64(seed ^ splitmix64(0x5eedull + static_cast<std::uint64_t>(t)));
        cfg.strips = 2;
        cfg.halfspaces = 1;
        cfg.equalities = 0;
        cfg.estimator.rescaling = false;
        Rng rng(cfg.seed);
        harness::Scenario sc = harness::generate_scenario(cfg, rng);
        harness::Truth truth = harness::simulate_truth(sc, cfg, rng);
        EquivalenceReport rep =
            check_equivalence(sc.steps, truth.measured, sc.xhat0, sc.P0, sc.sigma0);
        worst_state = std::max(worst_state, rep.max_state_dev);
        worst_shape = std::max(worst_shape, rep.max_shape_rel);
        if (rep.max_state_dev > 1e-8 || rep.max_shape_rel > 1e-8) ++res.violations;
    }
    res.worst = std::max(worst_state, worst_shape);
    res.pass = res.violations == 0;
    std::ostringstream os;
    os << systems << " systems, max state dev " << worst_state << ", max relative shape dev "
       << worst_shape;
    res.detail = os.str();
    return res;
}

// The switching gain minimizes the worst-case value over a dense grid.
inline CheckResult beta_grid_optimality(int samples, std::uint64_t seed, double slack = 1e-12)
{
    CheckResult res;
    Rng rng(seed);
    double worst_gap = 0.0;
    for (int t = 0; t < samples; ++t) {
        const double theta = rng.uniform(0.1, 10.0);
        const double sigma = rng.uniform(0.1, 10.0);
        const double alpha = 1.0 / theta;
        const double lambda = std::sqrt(sigma * theta);
        double a = rng.uniform(-lambda, lambda);
        double b = rng.uniform(-lambda, lambda);
        if (a > b) std::swap(a, b);
        const double delta = 0.5 * (a + b);
        const double gamma = 0.5 * (b - a);
        if (gamma <= 0.0) continue;

        auto zeta = [&](double beta) {
            return sigma + alpha * beta * (gamma * gamma / (1.0 - beta) - delta * delta);
        };
        const double bstar = beta_star(delta, gamma, MeasurementKind::TwoSided, lambda, lambda);
        const double best = bstar > 0.0 ? zeta(bstar) : sigma;
        for (int g = 1; g <= 999; ++g) {
            const double beta = static_cast<double>(g) / 1000.0;
            const double gap = best - zeta(beta);
            worst_gap = std::max(worst_gap, gap);
            if (gap > slack) ++res.violations;
        }
    }
    res.worst = worst_gap;
    res.pass = res.violations == 0;
    std::ostringstream os;
    os << samples << " tuples, worst optimality gap " << worst_gap;
    res.detail = os.str();
    return res;
}

// Geometry sampling oracles: halfspace/strip pointwise equivalence,
// strip-bound containment, hyperplane exactness (both directions) and
// Minkowski-bound containment.
inline CheckResult geometry_oracles(int instances, int samples, double tol, std::uint64_t seed)
{
    CheckResult res;
    Rng rng(seed);
    long total = 0;

    for (int inst = 0; inst < instances; ++inst) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.raw() % 3);  // 2..4
        Ellipsoid e(rng.normal_vec(n), random_spd(rng, n), rng.uniform(0.5, 2.0));
        EllipsoidSampler sampler(e);

        // (a) halfspace -> strip equivalence on an interior band of cases.
        {
            const Vec f = rng.unit_vec(n);
            const double s = std::sqrt(e.sigma * f.dot(e.P * f));
            const double cf = e.c.dot(f);
            const double ybar = cf + rng.uniform(-0.95, 0.95) * s;
            StripReduction red = halfspace_to_strip(e, Halfspace(f, ybar));
            if (red.kind != StripReduction::Kind::Strip) {
                ++res.violations;
            } else {
                for (int i = 0; i < samples; ++i) {
                    const Vec x = i % 2 == 0 ? sampler.interior(rng) : sampler.boundary(rng);
                    ++total;
                    const double margin_g = f.dot(x) - ybar;
                    const double margin_d = std::abs(x.dot(red.strip.d) - red.strip.a) - 1.0;
                    // Skip the razor edge where floating point decides both.
                    if (std::abs(margin_g) < 1e-9 * (1.0 + std::abs(ybar)) ||
                        std::abs(margin_d) < 1e-9)
                        continue;
                    if ((margin_g <= 0.0) != (margin_d <= 0.0)) ++res.violations;
                }
            }
        }

        // (b) strip intersection bound contains the true intersection.
        {
            const Vec f = rng.normal_vec(n);
            const double s = std::sqrt(e.sigma * f.dot(e.P * f));
            const double cf = e.c.dot(f);
            const double lo = cf + rng.uniform(-1.0, 0.5) * s;
            const double hi = lo + rng.uniform(0.1, 1.5) * s;
            // Two-sided bound as a strip: |x'd - a| <= 1.
            const double gamma = 0.5 * (hi - lo);
            Strip strip(f / gamma, (hi + lo) / (2.0 * gamma));
            const double beta = rng.uniform(0.05, 0.95);
            Ellipsoid bound = strip_intersect_bound(e, strip, beta);
            for (int i = 0; i < samples; ++i) {
                const Vec x = sampler.interior(rng);
                const double v = f.dot(x);
                if (v < lo || v > hi) continue;
                ++total;
                if (!contains(bound, x, tol)) ++res.violations;
            }
        }

        // (c) hyperplane exactness, both inclusions.
        {
            const Vec f = rng.unit_vec(n);
            const double s = std::sqrt(e.sigma * f.dot(e.P * f));
            const double y = e.c.dot(f) + rng.uniform(-0.9, 0.9) * s;
            HyperplaneCut cut = hyperplane_intersect(e, Hyperplane(f, y));
            if (cut.kind != HyperplaneCut::Kind::Reduced) {
                ++res.violations;
            } else {
                EllipsoidSampler chord(cut.ellipsoid);
                for (int i = 0; i < samples / 2; ++i) {
                    const Vec x = i % 2 == 0 ? chord.boundary(rng) : chord.interior(rng);
                    ++total;
                    if (!contains(e, x, tol)) ++res.violations;
                    if (std::abs(f.dot(x) - y) > tol * (1.0 + std::abs(y))) ++res.violations;
                }
                // Reverse: points of E on the plane belong to the chord.
                for (int i = 0; i < samples / 2; ++i) {
                    Vec x = sampler.interior(rng);
                    // Slide the sample onto the plane along f, then keep it
                    // only if it is still inside the ellipsoid.
                    x += (y - f.dot(x)) * f;
                    if (!contains(e, x, 1e-12)) continue;
                    ++total;
                    if (!contains(cut.ellipsoid, x, tol)) ++res.violations;
                }
            }
        }

        // (d) Minkowski sum containment.
        {
            Ellipsoid e2(rng.normal_vec(n), random_spd(rng, n), e.sigma);
            EllipsoidSampler s2(e2);
            Ellipsoid bound = minkowski_bound(e, e2, rng.uniform(0.1, 5.0));
            for (int i = 0; i < samples; ++i) {
                const Vec x = (i % 2 == 0 ? sampler.boundary(rng) : sampler.interior(rng)) +
                              (i % 3 == 0 ? s2.boundary(rng) : s2.interior(rng));
                ++total;
                if (!contains(bound, x, tol)) ++res.violations;
            }
        }
    }

    res.pass = res.violations == 0;
    std::ostringstream os;
    os << total << " sampled points across " << instances << " instances, " << res.violations
       << " violations";
    res.detail = os.str();
    return res;
}

}  // namespace setmem::checks
