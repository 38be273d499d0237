#include "test_support.hpp"

using namespace setmem;
using testsupport::unit_disk;
using testsupport::vec2;
using testsupport::vec3;
using Catch::Approx;

TEST_CASE("measurement classification")
{
    CHECK(classify(Measurement::equality(vec2(1, 0), 2.0)) == MeasurementKind::Equality);
    CHECK(classify(Measurement::upper_bound(vec2(1, 0), 5.0)) == MeasurementKind::UpperOnly);
    CHECK(classify(Measurement::lower_bound(vec2(1, 0), 1.0)) == MeasurementKind::LowerOnly);
    CHECK(classify(Measurement::two_sided(vec2(1, 0), 1.0, 3.0)) == MeasurementKind::TwoSided);

    CHECK_THROWS_AS(Measurement(vec2(1, 0), std::nullopt, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(Measurement(vec2(1, 0), 3.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Measurement(Vec::Zero(2), 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("bound clamping against the support interval")
{
    auto cb = clamp_bounds(Measurement::two_sided(vec2(1, 0), 0.5, 2.0), 1.0, 1.0);
    CHECK(cb.ybar == Approx(1.0));
    CHECK(cb.ylow == Approx(0.5));
    CHECK_FALSE(cb.aberrant);

    cb = clamp_bounds(Measurement::lower_bound(vec2(1, 0), -5.0), 1.0, 1.0);
    CHECK(cb.ybar == Approx(1.0));
    CHECK(cb.ylow == Approx(-1.0));
    CHECK_FALSE(cb.aberrant);

    cb = clamp_bounds(Measurement::two_sided(vec2(1, 0), 3.0, 4.0), 1.0, 1.0);
    CHECK(cb.ybar == Approx(1.0));
    CHECK(cb.ylow == Approx(3.0));
    CHECK(cb.aberrant);
}

TEST_CASE("switching gain")
{
    CHECK(beta_star(0.7, 0.2, MeasurementKind::TwoSided, 1.0, 1.0) == Approx(5.0 / 7.0));
    CHECK(beta_star(0.1, 0.2, MeasurementKind::TwoSided, 1.0, 1.0) == 0.0);
    CHECK(beta_star(0.0, 0.0, MeasurementKind::Equality, 1.0, 1.0) == 1.0);
    // Flat direction: the equality branch is disabled when the support
    // interval is a single point.
    CHECK(beta_star(0.0, 0.0, MeasurementKind::Equality, 0.5, -0.5) == 0.0);
}

TEST_CASE("single strip update")
{
    auto [e, outcome] =
        correct_single(unit_disk(), Measurement::two_sided(vec2(1, 0), 0.5, 0.9));
    CHECK(outcome.updated());
    CHECK(e.c.isApprox(vec2(0.5, 0), 1e-12));
    CHECK(e.P.isApprox((Mat(2, 2) << 2.0 / 7.0, 0, 0, 1).finished(), 1e-12));
    CHECK(e.sigma == Approx(0.75));
    CHECK(outcome.scratch.beta == Approx(5.0 / 7.0));
    CHECK(outcome.scratch.delta == Approx(0.7));
    CHECK(outcome.scratch.gamma == Approx(0.2));
    CHECK(outcome.scratch.lambda == Approx(1.0));
}

TEST_CASE("single equality update matches the hyperplane intersection")
{
    auto [e, outcome] =
        correct_single(unit_disk(), Measurement::equality(vec2(1, 0), 0.5));
    CHECK(outcome.updated());
    CHECK(outcome.scratch.beta == 1.0);
    CHECK(e.c.isApprox(vec2(0.5, 0), 1e-12));
    CHECK(e.P.isApprox((Mat(2, 2) << 0, 0, 0, 1).finished(), 1e-12));
    CHECK(e.sigma == Approx(0.75));

    HyperplaneCut cut = hyperplane_intersect(unit_disk(), Hyperplane(vec2(1, 0), 0.5));
    REQUIRE(cut.kind == HyperplaneCut::Kind::Reduced);
    CHECK((e.c - cut.ellipsoid.c).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((e.P - cut.ellipsoid.P).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(e.sigma - cut.ellipsoid.sigma) <= 1e-10);
}

TEST_CASE("uninformative measurements freeze the state")
{
    // Normal in the kernel of the shape.
    Ellipsoid flat(Vec::Zero(2), (Mat(2, 2) << 0, 0, 0, 1).finished(), 1.0);
    auto [e1, o1] = correct_single(flat, Measurement::two_sided(vec2(1, 0), -1.0, 1.0));
    CHECK(o1.kind == CorrectionOutcome::Kind::SkippedUninformative);
    CHECK(e1.P.isApprox(flat.P));

    // Strip wider than the whole support interval.
    auto [e2, o2] = correct_single(unit_disk(), Measurement::two_sided(vec2(1, 0), -2.0, 2.0));
    CHECK(o2.kind == CorrectionOutcome::Kind::SkippedUninformative);
    CHECK(o2.scratch.beta == 0.0);
    CHECK(o2.scratch.delta == Approx(0.0).margin(1e-15));
    CHECK(o2.scratch.gamma == Approx(1.0));
    CHECK(e2.P.isApprox(Mat::Identity(2, 2)));
    CHECK(e2.sigma == 1.0);
}

TEST_CASE("aberrant measurements follow the policy")
{
    const Measurement off = Measurement::two_sided(vec2(1, 0), 3.0, 4.0);

    auto [e, outcome] = correct_single(unit_disk(), off);
    CHECK(outcome.kind == CorrectionOutcome::Kind::SkippedAberrant);
    CHECK(e.P.isApprox(Mat::Identity(2, 2)));

    CorrectionSettings strict;
    strict.policy = AberrantPolicy::Strict;
    CHECK_THROWS_AS(correct_single(unit_disk(), off, strict), AberrantMeasurementError);

    // Flat direction with a contradicting constraint is aberrant, not just
    // uninformative.
    Ellipsoid flat(Vec::Zero(2), (Mat(2, 2) << 0, 0, 0, 1).finished(), 1.0);
    auto [e2, o2] = correct_single(flat, Measurement::two_sided(vec2(1, 0), 3.0, 4.0));
    CHECK(o2.kind == CorrectionOutcome::Kind::SkippedAberrant);
    CHECK(e2.P.isApprox(flat.P));
}

TEST_CASE("sequential fold over measurements")
{
    Ellipsoid ball(Vec::Zero(3), Mat::Identity(3, 3), 1.0);

    auto [same, outcomes] = correct_all(ball, {});
    CHECK(outcomes.empty());
    CHECK(same.P.isApprox(Mat::Identity(3, 3)));

    auto [cut, oc] = correct_all(ball, {Measurement::equality(vec3(1, 0, 0), 0.0),
                                        Measurement::equality(vec3(0, 1, 0), 0.0)});
    CHECK(oc.size() == 2);
    CHECK(oc[0].updated());
    CHECK(oc[1].updated());
    CHECK(cut.P.isApprox((Mat(3, 3) << 0, 0, 0, 0, 0, 0, 0, 0, 1).finished(), 1e-12));
    CHECK(detail::numerical_rank(cut.P) == 1);
}

TEST_CASE("grouped ordering fuses halfspaces, strips, then equalities")
{
    Ellipsoid ball(Vec::Zero(2), Mat::Identity(2, 2), 1.0);
    std::vector<Measurement> ms{Measurement::equality(vec2(1, 0), 0.2),
                                Measurement::upper_bound(vec2(0, 1), 0.4)};
    CorrectionSettings grouped;
    grouped.ordering = MeasurementOrdering::Grouped;
    auto [e, outcomes] = correct_all(ball, ms, grouped);
    // Outcomes stay in input order; the halfspace was fused first, so its
    // scratch was computed against the untouched shape.
    CHECK(outcomes[1].scratch.theta == Approx(1.0));
    CHECK(outcomes[0].updated());
    CHECK(e.c[0] == Approx(0.2));
}

TEST_CASE("containment through corrections")
{
    Rng rng(43);
    for (int trial = 0; trial < 15; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.raw() % 2);
        Ellipsoid e(rng.normal_vec(n), checks::random_spd(rng, n), rng.uniform(0.5, 2.0));
        EllipsoidSampler sampler(e);
        // Build constraints consistent with one witness point inside E.
        const Vec witness = sampler.interior(rng);
        std::vector<Measurement> ms;
        for (int i = 0; i < 3; ++i) {
            Vec f = rng.normal_vec(n);
            const double v = f.dot(witness);
            const int kind = static_cast<int>(rng.raw() % 3);
            if (kind == 0)
                ms.push_back(Measurement::two_sided(f, v - rng.uniform_pos(), v + rng.uniform_pos()));
            else if (kind == 1)
                ms.push_back(Measurement::upper_bound(f, v + rng.uniform_pos()));
            else
                ms.push_back(Measurement::equality(f, v));
        }
        auto [updated, outcomes] = correct_all(e, ms);
        // Any sample of E satisfying all constraints stays inside the result.
        for (int i = 0; i < 2000; ++i) {
            const Vec x = sampler.interior(rng);
            bool feasible = true;
            for (const auto& m : ms) {
                const double v = m.f.dot(x);
                if (m.upper && v > *m.upper) feasible = false;
                if (m.lower && v < *m.lower) feasible = false;
            }
            if (!feasible) continue;
            CHECK(contains(updated, x, 1e-7));
        }
        CHECK(contains(updated, witness, 1e-7));
    }
}

TEST_CASE("scale is monotone under corrections")
{
    Rng rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        Ellipsoid e(rng.normal_vec(2), checks::random_spd(rng, 2), rng.uniform(0.5, 2.0));
        const Vec witness = sample_interior(e, rng);
        Vec f = rng.normal_vec(2);
        const double v = f.dot(witness);
        auto [updated, outcome] =
            correct_single(e, Measurement::two_sided(f, v - rng.uniform_pos(), v + rng.uniform_pos()));
        CHECK(updated.sigma <= e.sigma + 1e-15);
        if (outcome.updated() && outcome.scratch.beta > 0.0 && std::abs(outcome.scratch.delta) > 1e-12)
            CHECK(updated.sigma < e.sigma);
    }
}

// Each scalar update lands its center inside its own tightened interval;
// equality rows then stay satisfied through all later updates. (The final
// center can drift out of earlier inequality intervals when several rows are
// fused in one step, so only these two forms are guaranteed.)
TEST_CASE("acceptability of the corrected center")
{
    Rng rng(53);
    long active = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index n = 3;
        Ellipsoid e(rng.normal_vec(n), checks::random_spd(rng, n), rng.uniform(0.5, 2.0));
        const Vec witness = sample_interior(e, rng);
        std::vector<Measurement> ms;
        for (int i = 0; i < 4; ++i) {
            Vec f = rng.normal_vec(n);
            const double v = f.dot(witness);
            if (i == 1)
                ms.push_back(Measurement::equality(f, v));
            else
                ms.push_back(Measurement::two_sided(f, v - 0.3 * rng.uniform_pos(),
                                                    v + 0.3 * rng.uniform_pos()));
        }
        Ellipsoid cur = e;
        for (const auto& m : ms) {
            auto [next, outcome] = correct_single(cur, m);
            cur = next;
            if (!outcome.updated()) continue;
            ++active;
            const double v = m.f.dot(cur.c);
            CHECK(v <= outcome.scratch.ybar + 1e-9);
            CHECK(v >= outcome.scratch.ylow - 1e-9);
        }
        // Equality rows are invariant under every later rank-one update.
        auto [final_e, outcomes] = correct_all(e, ms);
        if (outcomes[1].updated())
            CHECK(ms[1].f.dot(final_e.c) == Approx(*ms[1].upper).margin(1e-9));
    }
    CHECK(active > 0);
}

TEST_CASE("single-measurement steps keep the final center acceptable")
{
    Rng rng(101);
    long active = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 3;
        Ellipsoid e(rng.normal_vec(n), checks::random_spd(rng, n, 10.0), rng.uniform(0.5, 2.0));
        const Vec witness = sample_interior(e, rng);
        Vec f = rng.normal_vec(n);
        const double v = f.dot(witness);
        Measurement m = trial % 2 == 0
                            ? Measurement::two_sided(f, v - 0.2 * rng.uniform_pos(),
                                                     v + 0.2 * rng.uniform_pos())
                            : Measurement::upper_bound(f, v + 0.2 * rng.uniform_pos());
        auto [updated, outcome] = correct_single(e, m);
        if (!outcome.updated()) continue;
        ++active;
        const double c = m.f.dot(updated.c);
        if (m.upper) CHECK(c <= *m.upper + 1e-9);
        if (m.lower) CHECK(c >= *m.lower - 1e-9);
    }
    CHECK(active > 50);
}

TEST_CASE("interior gain lands the center on the nearer strip boundary")
{
    Rng rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        Ellipsoid ball(rng.normal_vec(2), Mat::Identity(2, 2), 1.0);
        Vec f = rng.unit_vec(2);
        const double cf = f.dot(ball.c);
        // Interval strictly below the center value so the gain is interior.
        const double hi = cf - rng.uniform(0.05, 0.3);
        const double lo = hi - rng.uniform(0.05, 0.2);
        auto [updated, outcome] = correct_single(ball, Measurement::two_sided(f, lo, hi));
        if (!outcome.updated() || outcome.scratch.beta <= 0.0 || outcome.scratch.beta >= 1.0)
            continue;
        const double v = f.dot(updated.c);
        const bool on_upper = std::abs(v - outcome.scratch.ybar) <= 1e-9;
        const bool on_lower = std::abs(v - outcome.scratch.ylow) <= 1e-9;
        CHECK((on_upper || on_lower));
        // With a spherical shape the move is an orthogonal projection.
        Vec move = updated.c - ball.c;
        move -= f.dot(move) * f;
        CHECK(move.norm() <= 1e-9);
    }
}

TEST_CASE("strip fast path equals the geometry route")
{
    Rng rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 3;
        Ellipsoid e(rng.normal_vec(n), checks::random_spd(rng, n), rng.uniform(0.5, 2.0));
        Vec f = rng.normal_vec(n);
        const double s = std::sqrt(e.sigma * f.dot(e.P * f));
        const double cf = e.c.dot(f);
        const double lo = cf + rng.uniform(-1.2, 0.3) * s;
        const double hi = lo + rng.uniform(0.05, 0.8) * s;

        auto [fast, outcome] = correct_single(e, Measurement::two_sided(f, lo, hi));
        if (!outcome.updated()) continue;
        if (outcome.scratch.beta >= 1.0) {
            // Tangency collapse: compare against the hyperplane route.
            HyperplaneCut cut = hyperplane_intersect(e, Hyperplane(f, outcome.scratch.ybar));
            REQUIRE(cut.kind == HyperplaneCut::Kind::Reduced);
            CHECK((fast.c - cut.ellipsoid.c).cwiseAbs().maxCoeff() <= 1e-10);
            continue;
        }
        const double gamma = 0.5 * (hi - lo);
        Strip strip(f / gamma, (hi + lo) / (2.0 * gamma));
        Ellipsoid geo = strip_intersect_bound(e, strip, outcome.scratch.beta);
        CHECK((fast.c - geo.c).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + geo.c.cwiseAbs().maxCoeff()));
        CHECK((fast.P - geo.P).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + geo.P.cwiseAbs().maxCoeff()));
        CHECK(std::abs(fast.sigma - geo.sigma) <= 1e-10 * (1.0 + geo.sigma));
    }
}

TEST_CASE("worst-case value equals the scale after one strip update")
{
    Rng rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 2;
        Ellipsoid e(rng.normal_vec(n), checks::random_spd(rng, n), rng.uniform(0.5, 2.0));
        Vec f = rng.normal_vec(n);
        const double s = std::sqrt(e.sigma * f.dot(e.P * f));
        const double cf = e.c.dot(f);
        const double lo = cf + rng.uniform(-1.0, 0.0) * s;
        const double hi = lo + rng.uniform(0.2, 1.0) * s;
        auto [updated, outcome] = correct_single(e, Measurement::two_sided(f, lo, hi));
        if (!outcome.updated() || outcome.scratch.beta >= 1.0) continue;

        // Sampled maximum of the quadratic value over E n {lo <= f'x <= hi}.
        EllipsoidSampler sampler(e);
        double best = 0.0;
        for (int i = 0; i < 40000; ++i) {
            Vec x = i % 2 == 0 ? sampler.boundary(rng) : sampler.interior(rng);
            const double v = f.dot(x);
            if (v < lo || v > hi) continue;
            best = std::max(best, lyapunov_value(updated, x));
        }
        // Include the chord rims at both tightened bound planes.
        for (double b : {outcome.scratch.ylow, outcome.scratch.ybar}) {
            HyperplaneCut cut = hyperplane_intersect(e, Hyperplane(f, b));
            if (cut.kind != HyperplaneCut::Kind::Reduced) continue;
            EllipsoidSampler rim(cut.ellipsoid);
            for (int i = 0; i < 2000; ++i)
                best = std::max(best, lyapunov_value(updated, rim.boundary(rng)));
        }
        CHECK(best <= updated.sigma + 1e-6);
        CHECK(best >= 0.95 * updated.sigma);
    }
}

TEST_CASE("rescaling keeps the represented set")
{
    Ellipsoid e(vec2(1, 2), Mat::Identity(2, 2), 0.5);

    auto [same, bar_same] = rescale(Ellipsoid(vec2(1, 2), Mat::Identity(2, 2), 1.0), 1.0, 1.0);
    CHECK(same.P.isApprox(Mat::Identity(2, 2)));
    CHECK(bar_same == Approx(1.0));

    auto [scaled, bar] = rescale(e, 1.0, 0.5);
    CHECK(scaled.sigma == Approx(1.0));
    CHECK(scaled.P.isApprox(0.5 * Mat::Identity(2, 2), 1e-15));
    CHECK(scaled.shape().isApprox(e.shape(), 1e-15));
    CHECK(bar == Approx(0.25));

    CHECK_THROWS_AS(rescale(e, 0.0, 1.0), std::invalid_argument);
}
