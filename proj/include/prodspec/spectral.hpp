#pragma once

// Dense spectral kernel over Eigen's solvers.
//
// Contract for `eigenvalues`: each returned value is an exact eigenvalue of M + E with
// ||E|| <= c * eps * ||M|| (Eigen's complex Schur QR is backward stable). Any solver with
// the same contract may replace it.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "prodspec/core.hpp"
#include "prodspec/ensembles.hpp"

namespace prodspec {

struct SpectrumResult {
    std::vector<cplx> eigenvalues;
    double radius = 0.0;
};

inline SpectrumResult eigenvalues(const CMatrix& M) {
    if (M.rows() != M.cols() || M.rows() < 1)
        throw config_error("eigenvalues: needs a nonempty square matrix");
    if (!M.allFinite()) throw domain_error("eigenvalues: matrix has non-finite entries");
    Eigen::ComplexEigenSolver<CMatrix> solver(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw spectral_error("complex eigensolver did not converge", M.rows());
    SpectrumResult r;
    r.eigenvalues.assign(solver.eigenvalues().data(),
                         solver.eigenvalues().data() + solver.eigenvalues().size());
    for (const auto& l : r.eigenvalues) r.radius = std::max(r.radius, std::abs(l));
    return r;
}

inline double spectral_radius(const CMatrix& M) { return eigenvalues(M).radius; }

struct SingularExtremes {
    double s_min = 0.0;
    double s_max = 0.0;
};

inline SingularExtremes singular_extremes(const CMatrix& M) {
    if (M.size() == 0) throw config_error("singular_extremes: empty matrix");
    if (!M.allFinite()) throw domain_error("singular_extremes: matrix has non-finite entries");
    Eigen::BDCSVD<CMatrix> svd(M);  // values only
    if (svd.info() != Eigen::Success) throw spectral_error("SVD failed", M.rows());
    const auto& s = svd.singularValues();  // descending
    return {s(s.size() - 1), s(0)};
}

/// (X - z)^*(X - z) assembled from the block structure of X: X^*X is block diagonal with
/// blocks X_{b-1}^* X_{b-1}, which avoids a full (nN)^3 product.
inline CMatrix hermitized_matrix(const LinearizedSystem& sys) {
    const Eigen::Index N = sys.N;
    CMatrix H = CMatrix::Zero(sys.dim(), sys.dim());
    for (int b = 0; b < sys.n; ++b) {
        const int a = (b - 1 + sys.n) % sys.n;  // factor a sits in block (a, b)
        const auto Xa = sys.X.block(a * N, b * N, N, N);
        H.block(b * N, b * N, N, N).noalias() = Xa.adjoint() * Xa;
    }
    const cplx z = sys.z;
    H -= z * sys.X.adjoint();
    H -= std::conj(z) * sys.X;
    H.diagonal().array() += std::norm(z);
    return H;
}

/// (X - z)(X - z)^*; X X^* is block diagonal with blocks X_a X_a^*.
inline CMatrix hermitized_matrix_dual(const LinearizedSystem& sys) {
    const Eigen::Index N = sys.N;
    CMatrix H = CMatrix::Zero(sys.dim(), sys.dim());
    for (int a = 0; a < sys.n; ++a) {
        const int b = (a + 1) % sys.n;
        const auto Xa = sys.X.block(a * N, b * N, N, N);
        H.block(a * N, a * N, N, N).noalias() = Xa * Xa.adjoint();
    }
    const cplx z = sys.z;
    H -= z * sys.X.adjoint();
    H -= std::conj(z) * sys.X;
    H.diagonal().array() += std::norm(z);
    return H;
}

struct HermitizedSpectrum {
    cplx z{0.0, 0.0};
    std::vector<double> lambdas;  // ascending
    bool clipped = false;         // some eigenvalue in [-tol_psd, 0) was set to 0
};

inline HermitizedSpectrum hermitized_spectrum_of(const CMatrix& H, cplx z) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(H, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw spectral_error("self-adjoint eigensolver did not converge", H.rows());
    HermitizedSpectrum out;
    out.z = z;
    const auto& ev = solver.eigenvalues();
    out.lambdas.assign(ev.data(), ev.data() + ev.size());
    std::sort(out.lambdas.begin(), out.lambdas.end());
    // ||Y||^2 is the top eigenvalue of Y^*Y
    const double tol_psd = 1e-10 * std::max(out.lambdas.back(), 0.0);
    for (double& l : out.lambdas) {
        if (l >= 0.0) break;
        if (l < -tol_psd)
            throw internal_error("hermitized spectrum has eigenvalue " + std::to_string(l) +
                                 " below -tol_psd");
        l = 0.0;
        out.clipped = true;
    }
    return out;
}

inline HermitizedSpectrum hermitized_spectrum(const LinearizedSystem& sys) {
    return hermitized_spectrum_of(hermitized_matrix(sys), sys.z);
}

/// (1/d) sum_j 1/(lambda_j - w).
inline cplx empirical_stieltjes(const HermitizedSpectrum& spec, cplx w) {
    require_upper_half_plane(w, "empirical_stieltjes");
    cplx acc{0.0, 0.0};
    for (double l : spec.lambdas) acc += 1.0 / (l - w);
    return acc / static_cast<double>(spec.lambdas.size());
}

struct HistogramBin {
    double center = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double mass = 0.0;
};

/// Equal-width bins on [lo, hi]; bins are half-open except the last, which includes hi.
inline std::vector<HistogramBin> esd_histogram(const HermitizedSpectrum& spec, int bins,
                                               double lo, double hi) {
    if (bins < 1) throw config_error("esd_histogram: bins must be >= 1");
    if (!(lo < hi)) throw config_error("esd_histogram: requires lo < hi");
    const double width = (hi - lo) / bins;
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) {
        auto& b = out[static_cast<std::size_t>(k)];
        b.lo = lo + k * width;
        b.hi = (k + 1 == bins) ? hi : lo + (k + 1) * width;
        b.center = 0.5 * (b.lo + b.hi);
    }
    std::vector<std::size_t> counts(out.size(), 0);
    for (double l : spec.lambdas) {
        if (l < lo || l > hi) continue;
        auto k = static_cast<int>(std::floor((l - lo) / width));
        k = std::clamp(k, 0, bins - 1);
        ++counts[static_cast<std::size_t>(k)];
    }
    const auto total = static_cast<double>(spec.lambdas.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k].mass = static_cast<double>(counts[k]) / total;
    return out;
}

}  // namespace prodspec
