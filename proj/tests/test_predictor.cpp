#include "test_support.hpp"

using namespace setmem;
using testsupport::vec2;
using Catch::Approx;

namespace {

const Mat kTracePred = (Mat(2, 2) << 4.121320343559642, 0, 0, 1.707106781186548).finished();

SystemStep noise_step_2d()
{
    return SystemStep(Mat::Identity(2, 2), Mat::Zero(2, 0), (Mat(2, 1) << 1, 0).finished(), Vec(0));
}

}  // namespace

TEST_CASE("center prediction")
{
    SystemStep drift(Mat::Identity(2, 2), Mat::Identity(2, 2), Mat(2, 0), vec2(0, 2));
    CHECK(predict_center(Vec::Zero(2), drift).isApprox(vec2(0, 2)));
    CHECK(predict_center(vec2(1, 0), drift).isApprox(vec2(1, 2)));

    Mat rot(2, 2);
    rot << 0, 1, -1, 0;
    SystemStep spin(rot, Mat(2, 0), Mat(2, 0), Vec(0));
    CHECK(predict_center(vec2(1, 1), spin).isApprox(vec2(1, -1)));
    CHECK(predict_center(Vec::Zero(2), spin).isZero());
}

TEST_CASE("trace-optimal shape prediction")
{
    Mat p = predict_shape_trace(Mat::Identity(2, 2), 1.0, Mat::Identity(2, 2),
                                (Mat(2, 1) << 1, 0).finished());
    CHECK(p.isApprox(kTracePred, 1e-12));

    CHECK(predict_shape_trace(Mat::Identity(2, 2), 1.0, Mat::Identity(2, 2), Mat(2, 0))
              .isApprox(Mat::Identity(2, 2)));

    // Rank-deficient state recovers rank through the noise term.
    Mat flat = (Mat(2, 2) << 0, 0, 0, 1).finished();
    Mat rec = predict_shape_trace(flat, 1.0, Mat::Identity(2, 2), (Mat(2, 1) << 1, 0).finished());
    CHECK(detail::numerical_rank(rec) == 2);
    Ellipsoid grown(Vec::Zero(2), rec, 1.0);
    Rng rng(3);
    EllipsoidSampler seg(Ellipsoid(Vec::Zero(2), flat, 1.0));
    for (int i = 0; i < 3000; ++i) {
        const double t = rng.uniform(-1.0, 1.0);
        CHECK(contains(grown, seg.interior(rng) + t * vec2(1, 0), 1e-7));
    }

    CHECK_THROWS_AS(
        predict_shape_trace(Mat::Identity(2, 2), 0.0, Mat::Identity(2, 2), Mat(2, 0)),
        std::invalid_argument);
}

TEST_CASE("point state falls back to the pure zonotope bound")
{
    Mat r = (Mat(2, 2) << 1, 0, 0, 2).finished();
    Mat p = predict_shape_trace(Mat::Zero(2, 2), 1.0, Mat::Identity(2, 2), r);
    // Exact minimum-trace bound of the zonotope alone: (sum |r_i|) * R_bar.
    Mat expected = 3.0 * (Mat(2, 2) << 1, 0, 0, 2).finished();
    CHECK(p.isApprox(expected, 1e-12));

    Ellipsoid grown(Vec::Zero(2), p, 1.0);
    Rng rng(5);
    Zonotope z(Vec::Zero(2), r);
    for (int i = 0; i < 3000; ++i) CHECK(contains(grown, sample_zonotope(z, rng), 1e-7));
}

TEST_CASE("volume-optimal shape prediction")
{
    Mat p = predict_shape_volume(Mat::Identity(2, 2), 1.0, Mat::Identity(2, 2),
                                 (Mat(2, 1) << 1, 0).finished());
    CHECK(p.isApprox((Mat(2, 2) << 4.5, 0, 0, 1.5).finished(), 1e-12));

    CHECK(predict_shape_volume(Mat::Identity(2, 2), 1.0, 2.0 * Mat::Identity(2, 2), Mat(2, 0))
              .isApprox(4.0 * Mat::Identity(2, 2)));

    Mat flat = (Mat(2, 2) << 0, 0, 0, 1).finished();
    CHECK_THROWS_AS(predict_shape_volume(flat, 1.0, Mat::Identity(2, 2),
                                         (Mat(2, 1) << 1, 0).finished()),
                    std::domain_error);
}

TEST_CASE("volume result beats a blend-parameter grid")
{
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        Mat p = checks::random_spd(rng, 2);
        Mat a = rng.normal_mat(2, 2);
        a += 2.0 * Mat::Identity(2, 2);  // keep A P A' well conditioned
        Mat r = rng.normal_mat(2, 1);
        const double sigma = rng.uniform(0.5, 2.0);
        const double det_opt = predict_shape_volume(p, sigma, a, r).determinant();
        for (double mu = 0.01; mu <= 10.0; mu *= 1.35) {
            const double det_grid =
                testsupport::sequential_shape(p, sigma, a, r, {mu}).determinant();
            CHECK(det_opt <= det_grid + 1e-9 * std::abs(det_grid));
        }
    }
}

TEST_CASE("weighted shape prediction")
{
    Mat p = Mat::Identity(2, 2);
    Mat r = (Mat(2, 1) << 1, 0).finished();

    // Identity weight reduces to the trace-optimal result.
    Mat weighted = predict_shape_weighted(p, 1.0, Mat::Identity(2, 2), r, Mat::Identity(2, 2));
    Mat trace = predict_shape_trace(p, 1.0, Mat::Identity(2, 2), r);
    CHECK((weighted - trace).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + trace.cwiseAbs().maxCoeff()));

    // A generator invisible to the weight still inflates the shape.
    Mat c_row = (Mat(1, 2) << 1, 0).finished();
    Mat r2 = (Mat(2, 1) << 0, 1).finished();
    Mat blind = predict_shape_weighted(p, 1.0, Mat::Identity(2, 2), r2, c_row);
    CHECK(detail::numerical_rank(blind) == 2);
    Ellipsoid grown(Vec::Zero(2), blind, 1.0);
    Rng rng(9);
    EllipsoidSampler disk(Ellipsoid(Vec::Zero(2), p, 1.0));
    for (int i = 0; i < 3000; ++i) {
        const double t = rng.uniform(-1.0, 1.0);
        CHECK(contains(grown, disk.interior(rng) + t * vec2(0, 1), 1e-7));
    }

    // The blend ratio is scale invariant in the weight.
    Mat w1 = predict_shape_weighted(p, 1.0, Mat::Identity(2, 2), r, c_row);
    Mat w2 = predict_shape_weighted(p, 1.0, Mat::Identity(2, 2), r, 2.0 * c_row);
    CHECK(w1.isApprox(w2, 1e-12));
}

TEST_CASE("time update")
{
    Ellipsoid e = testsupport::unit_disk();

    Ellipsoid same = time_update(e, SystemStep(Mat::Identity(2, 2), Mat(2, 0), Mat(2, 0), Vec(0)));
    CHECK(same.c.isZero());
    CHECK(same.P.isApprox(Mat::Identity(2, 2)));

    Ellipsoid moved = time_update(
        e, SystemStep(Mat::Identity(2, 2), Mat::Identity(2, 2), Mat(2, 0), vec2(3, 0)));
    CHECK(moved.c.isApprox(vec2(3, 0)));
    CHECK(moved.P.isApprox(Mat::Identity(2, 2)));

    Ellipsoid inflated = time_update(e, noise_step_2d(), PredictionCriterion::trace());
    CHECK(inflated.c.isZero());
    CHECK(inflated.P.isApprox(kTracePred, 1e-12));
    CHECK(inflated.sigma == Approx(1.0));
}

TEST_CASE("prediction contains every propagated point")
{
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.raw() % 2);
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.raw() % 2);
        Ellipsoid e(rng.normal_vec(n), checks::random_spd(rng, n), rng.uniform(0.3, 2.0));
        SystemStep st(rng.normal_mat(n, n), rng.normal_mat(n, 1), rng.normal_mat(n, m),
                      rng.normal_vec(1));
        for (auto crit : {PredictionCriterion::trace(), PredictionCriterion::volume()}) {
            Ellipsoid pred = time_update(e, st, crit);
            CHECK(pred.sigma == e.sigma);
            EllipsoidSampler sampler(e);
            for (int i = 0; i < 100; ++i) {
                Vec nu(m);
                for (Eigen::Index j = 0; j < m; ++j) nu[j] = rng.uniform(-1.0, 1.0);
                const Vec x = st.A * sampler.interior(rng) + st.B * st.tau + st.R * nu;
                CHECK(contains(pred, x, 1e-7));
            }
        }
    }
}

TEST_CASE("direct trace formula matches the sequential recursion")
{
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 3;
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.raw() % 3);
        Mat p = checks::random_spd(rng, n);
        Mat a = rng.normal_mat(n, n);
        Mat r = rng.normal_mat(n, m);
        const double sigma = rng.uniform(0.3, 3.0);

        Mat direct = predict_shape_trace(p, sigma, a, r);
        Mat seq = testsupport::sequential_shape(p, sigma, a, r,
                                                testsupport::trace_optimal_mus(p, sigma, a, r));
        CHECK((direct - seq).cwiseAbs().maxCoeff() <=
              1e-9 * (1.0 + seq.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("trace result is optimal among random blends")
{
    Rng rng(19);
    Mat p = checks::random_spd(rng, 3);
    Mat a = rng.normal_mat(3, 3);
    Mat r = rng.normal_mat(3, 2);
    const double sigma = 0.8;
    const double tr_opt = predict_shape_trace(p, sigma, a, r).trace();
    for (int i = 0; i < 100; ++i) {
        std::vector<double> mus{rng.uniform(0.01, 5.0), rng.uniform(0.01, 5.0)};
        const double tr = testsupport::sequential_shape(p, sigma, a, r, mus).trace();
        CHECK(tr_opt <= tr + 1e-9 * std::abs(tr));
    }
}

TEST_CASE("zero generator columns are dropped")
{
    Mat r = (Mat(2, 2) << 0, 1, 0, 0).finished();  // first column zero
    Mat with_zero = predict_shape_trace(Mat::Identity(2, 2), 1.0, Mat::Identity(2, 2), r);
    Mat without = predict_shape_trace(Mat::Identity(2, 2), 1.0, Mat::Identity(2, 2),
                                      (Mat(2, 1) << 1, 0).finished());
    CHECK(with_zero.isApprox(without, 1e-12));
}
