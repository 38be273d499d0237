#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace setmem {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Tolerance knobs shared across the library. All defaults are relative
// thresholds; scale factors are applied at the point of use.
struct Tolerances {
    double eps_sym = 1e-10;    // symmetry check, x max(1, |P|_inf)
    double eps_psd = 1e-9;     // eigenvalue floor, x trace scale
    double eps_rank = 1e-12;   // numerical rank cutoff, x n*|P|_2
    double eps_case = 1e-12;   // case classification at rho boundaries, x (1+|rho_bar|+|rho|)
    double eps_theta = 1e-14;  // uninformative-measurement cutoff, x (1+tr(P)*|f|^2)
    double eps_sigma = 1e-12;  // scale underflow clamp, x sigma0
};

namespace detail {

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Mat& m, double eps = 1e-10)
{
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= eps * scale;
}

// Eigendecomposition of a symmetric PSD matrix with the numerical-rank
// cutoff n*|P|_2*eps_rank. Eigenvalues below the cutoff count as kernel.
struct PsdEigen {
    Eigen::SelfAdjointEigenSolver<Mat> es;
    double cutoff = 0.0;

    explicit PsdEigen(const Mat& p, double eps_rank = 1e-12) : es(symmetrize(p))
    {
        if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
        const double lmax = es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
        cutoff = static_cast<double>(p.rows()) * lmax * eps_rank;
    }

    Eigen::Index rank() const
    {
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()[i] > cutoff) ++r;
        return r;
    }

    // Splits z into the kernel-space norm and the range-space quadratic form
    // value z' P^+ z.
    void pseudo_quadform(const Vec& z, double& kernel_norm, double& form_value) const
    {
        const Vec w = es.eigenvectors().transpose() * z;
        double ker2 = 0.0, form = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double lam = es.eigenvalues()[i];
            if (lam > cutoff)
                form += w[i] * w[i] / lam;
            else
                ker2 += w[i] * w[i];
        }
        kernel_norm = std::sqrt(ker2);
        form_value = form;
    }

    Mat sqrt_psd() const
    {
        Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
    }
};

inline Eigen::Index numerical_rank(const Mat& p, double eps_rank = 1e-12)
{
    return PsdEigen(p, eps_rank).rank();
}

inline bool is_spd(const Mat& p)
{
    if (p.rows() != p.cols() || !is_symmetric(p)) return false;
    Eigen::LLT<Mat> llt(symmetrize(p));
    return llt.info() == Eigen::Success;
}

inline void require(bool cond, const char* what)
{
    if (!cond) throw std::invalid_argument(what);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace detail
}  // namespace setmem
