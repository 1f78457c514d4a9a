#pragma once

// Linearized stability system for the deviations of the block partial traces from m_c.
//
// Gamma1 is n x n with, in row r (0-based), -gamma1 at column r-1 and gamma2 at column r-2
// (indices mod n), i.e. Gamma1 = -gamma1 P + gamma2 P^2 for the cyclic shift P e_c = e_{c+1}.
// Gamma = [[w I, Gamma1], [Gamma1^T, w I]]. Then
//     det Gamma = det(w^2 I - Gamma1^T Gamma1),
//     w^2 I - Gamma1^T Gamma1 = Circulant(w^2 - g1^2 - g2^2, g1 g2, 0, ..., 0, g1 g2).
// For n = 2 the two off-diagonal circulant coefficients fall on the same slot and add.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "prodspec/core.hpp"
#include "prodspec/selfconsistent.hpp"

namespace prodspec {

struct GammaCoeffs {
    cplx gamma1{0.0, 0.0};  // 1/m_c^2
    cplx gamma2{0.0, 0.0};  // |z|^2/(1+m_c)^2
};

inline GammaCoeffs gamma_coeffs(cplx m_c, cplx z) {
    if (std::abs(m_c) <= 1e-10 || std::abs(1.0 + m_c) <= 1e-10)
        throw degenerate_error("gamma_coeffs: |m_c| or |1+m_c| below 1e-10");
    return {1.0 / (m_c * m_c), std::norm(z) / ((1.0 + m_c) * (1.0 + m_c))};
}

/// l_j = sum_k c_k exp(2 pi i j k / n), j = 0..n-1.
inline std::vector<cplx> circulant_eigenvalues(std::span<const cplx> coeffs) {
    const auto n = coeffs.size();
    if (n == 0) throw config_error("circulant_eigenvalues: needs at least one coefficient");
    std::vector<cplx> l(n, cplx{0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            // reduce jk mod n before scaling so the phase stays exact for large products
            const auto jk = (j * k) % n;
            l[j] += coeffs[k] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(jk) /
                                                    static_cast<double>(n));
        }
    return l;
}

/// Explicit circulant matrix: row r is (c_{-r}, c_{1-r}, ...), entry (r, c) = coeffs[(c - r) mod n].
inline CMatrix circulant_matrix(std::span<const cplx> coeffs) {
    const auto n = static_cast<Eigen::Index>(coeffs.size());
    CMatrix C(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) C(r, c) = coeffs[static_cast<std::size_t>((c - r + n) % n)];
    return C;
}

struct GammaSystem {
    int n = 0;
    cplx w{0.0, 0.0};
    cplx gamma1{0.0, 0.0};
    cplx gamma2{0.0, 0.0};
    CMatrix Gamma1;
    CMatrix Gamma;

    /// Coefficients of w^2 I - Gamma1^T Gamma1 as a circulant (coincident slots summed).
    std::vector<cplx> reduced_circulant_coeffs() const {
        std::vector<cplx> c(static_cast<std::size_t>(n), cplx{0.0, 0.0});
        c[0] = w * w - gamma1 * gamma1 - gamma2 * gamma2;
        c[1 % n] += gamma1 * gamma2;
        c[static_cast<std::size_t>(n - 1)] += gamma1 * gamma2;
        return c;
    }

    CMatrix reduced_matrix() const {
        CMatrix R = -Gamma1.transpose() * Gamma1;
        R.diagonal().array() += w * w;
        return R;
    }
};

inline GammaSystem gamma_matrix(int n, cplx w, cplx gamma1, cplx gamma2) {
    if (n < 2) throw config_error("gamma_matrix: n must be >= 2");
    GammaSystem gs;
    gs.n = n;
    gs.w = w;
    gs.gamma1 = gamma1;
    gs.gamma2 = gamma2;
    gs.Gamma1 = CMatrix::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        gs.Gamma1(r, (r - 1 + n) % n) += -gamma1;
        gs.Gamma1(r, (r - 2 + 2 * n) % n) += gamma2;
    }
    gs.Gamma = CMatrix::Zero(2 * n, 2 * n);
    gs.Gamma.topLeftCorner(n, n).diagonal().setConstant(w);
    gs.Gamma.bottomRightCorner(n, n).diagonal().setConstant(w);
    gs.Gamma.topRightCorner(n, n) = gs.Gamma1;
    gs.Gamma.bottomLeftCorner(n, n) = gs.Gamma1.transpose();
    return gs;
}

/// Gamma system at the self-consistent point m_c(z, w).
inline GammaSystem gamma_system_at(int n, cplx z, cplx w) {
    const auto sol = solve_mc(z, w);
    const auto g = gamma_coeffs(sol.m_c, z);
    return gamma_matrix(n, w, g.gamma1, g.gamma2);
}

/// Spectral norm of Gamma^{-1}, i.e. 1/s_min(Gamma); +inf when Gamma is singular.
inline double inverse_norm(const GammaSystem& gs) {
    Eigen::JacobiSVD<CMatrix> svd(gs.Gamma);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
}

/// |det Gamma - det(w^2 I - Gamma1^T Gamma1)| / |det Gamma|.
inline double det_identity_residual(const GammaSystem& gs) {
    const cplx lhs = gs.Gamma.determinant();
    const cplx rhs = gs.reduced_matrix().determinant();
    return std::abs(lhs - rhs) / std::abs(lhs);
}

/// Deviations (Delta_1..Delta_n, Delta'_1..Delta'_n).
struct DeviationVector {
    CVector delta;
};

/// ||Gamma Delta||_inf.
inline double linear_system_check(const DeviationVector& d, const GammaSystem& gs) {
    if (d.delta.size() != gs.Gamma.cols())
        throw config_error("linear_system_check: Delta must have length 2n");
    return (gs.Gamma * d.delta).cwiseAbs().maxCoeff();
}

struct GammaSweepPoint {
    cplx z{0.0, 0.0};
    cplx w{0.0, 0.0};
    double inv_norm = 0.0;
    double min_abs_l = 0.0;           // min_j |l_j(w^2 I - Gamma1^T Gamma1)|
    double circulant_mismatch = 0.0;  // formula vs dense eigenvalues
    double det_residual = 0.0;        // relative
    bool singular = false;
};

struct GammaSweepReport {
    double tau = 0.0;  // largest candidate with max ||Gamma^{-1}|| <= 1/tau over |w| <= tau
    double max_inv_norm = 0.0;  // at the reported tau
    double min_abs_l = 0.0;     // at the reported tau
    double max_circulant_mismatch = 0.0;
    double max_det_residual = 0.0;
    std::vector<GammaSweepPoint> points;
    std::vector<GammaSweepPoint> counterexamples;  // singular Gamma
};

namespace detail {

/// Max over j of the distance from each formula eigenvalue to the nearest dense one.
inline double multiset_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<bool> used(b.size(), false);
    double worst = 0.0;
    for (const auto& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            const double d = std::abs(x - b[k]);
            if (d < best) best = d, arg = k;
        }
        used[arg] = true;
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace detail

inline GammaSweepPoint evaluate_gamma_point(int n, cplx z, cplx w) {
    GammaSweepPoint p{z, w};
    const auto gs = gamma_system_at(n, z, w);
    const auto coeffs = gs.reduced_circulant_coeffs();
    const auto l = circulant_eigenvalues(coeffs);
    p.min_abs_l = std::abs(*std::min_element(l.begin(), l.end(), [](cplx a, cplx b) {
        return std::abs(a) < std::abs(b);
    }));
    Eigen::ComplexEigenSolver<CMatrix> es(gs.reduced_matrix(), false);
    std::vector<cplx> dense(es.eigenvalues().data(), es.eigenvalues().data() + n);
    double scale = 1.0;
    for (const auto& x : l) scale = std::max(scale, std::abs(x));
    p.circulant_mismatch = detail::multiset_distance(l, dense) / scale;
    p.inv_norm = inverse_norm(gs);
    p.singular = !std::isfinite(p.inv_norm);
    const cplx det = gs.Gamma.determinant();
    p.det_residual = std::abs(det) > 1e-300 ? det_identity_residual(gs) : 0.0;
    return p;
}

/// Sweeps Gamma over z_grid x window grid. tau_candidates are tried from largest to
/// smallest; the first tau with max ||Gamma^{-1}|| <= 1/tau over points with |w| <= tau wins.
inline GammaSweepReport inverse_norm_sweep(int n, std::span<const cplx> z_grid,
                                           const std::vector<cplx>& w_grid,
                                           std::vector<double> tau_candidates) {
    if (z_grid.empty() || w_grid.empty()) throw config_error("inverse_norm_sweep: empty grid");
    GammaSweepReport rep;
    for (const cplx z : z_grid)
        for (const cplx w : w_grid) {
            auto p = evaluate_gamma_point(n, z, w);
            rep.max_circulant_mismatch = std::max(rep.max_circulant_mismatch, p.circulant_mismatch);
            rep.max_det_residual = std::max(rep.max_det_residual, p.det_residual);
            if (p.singular) rep.counterexamples.push_back(p);
            rep.points.push_back(p);
        }
    std::sort(tau_candidates.begin(), tau_candidates.end(), std::greater<>());
    for (double tau : tau_candidates) {
        double worst = 0.0, min_l = std::numeric_limits<double>::infinity();
        bool any = false;
        for (const auto& p : rep.points) {
            if (std::abs(p.w) > tau) continue;
            any = true;
            worst = std::max(worst, p.inv_norm);
            min_l = std::min(min_l, p.min_abs_l);
        }
        if (any && worst <= 1.0 / tau) {
            rep.tau = tau;
            rep.max_inv_norm = worst;
            rep.min_abs_l = min_l;
            break;
        }
    }
    return rep;
}

}  // namespace prodspec
