#pragma once

// Resolvents of the hermitized linearization and their minors.
//
//   G^{(T,U)}(w)  = (Y^{(T,U)*} Y^{(T,U)} - w)^{-1}
//   Gc^{(T,U)}(w) = (Y^{(T,U)} Y^{(T,U)*} - w)^{-1}
//
// Y^{(T,U)} deletes the columns in T and the rows in U. Minor resolvents keep the original
// nN x nN indexing: G^{(T,U)} has zero rows and columns on T, Gc^{(T,U)} on U. All indices
// in this header are 0-based.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/LU>

#include "prodspec/core.hpp"
#include "prodspec/ensembles.hpp"
#include "prodspec/spectral.hpp"
#include "prodspec/stats.hpp"

namespace prodspec {

using Index = Eigen::Index;

struct MinorIndexSet {
    std::vector<Index> T;  // removed columns
    std::vector<Index> U;  // removed rows

    static MinorIndexSet make(std::vector<Index> T, std::vector<Index> U) {
        auto norm = [](std::vector<Index>& v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        norm(T);
        norm(U);
        return {std::move(T), std::move(U)};
    }

    bool removes_col(Index i) const { return std::binary_search(T.begin(), T.end(), i); }
    bool removes_row(Index i) const { return std::binary_search(U.begin(), U.end(), i); }
    MinorIndexSet with_col(Index i) const {
        auto t = T;
        t.push_back(i);
        return make(std::move(t), U);
    }
    MinorIndexSet with_row(Index i) const {
        auto u = U;
        u.push_back(i);
        return make(T, std::move(u));
    }
    bool empty() const { return T.empty() && U.empty(); }
};

namespace detail {

inline std::vector<Index> retained(Index dim, const std::vector<Index>& removed) {
    std::vector<Index> keep;
    keep.reserve(static_cast<std::size_t>(dim));
    for (Index i = 0; i < dim; ++i)
        if (!std::binary_search(removed.begin(), removed.end(), i)) keep.push_back(i);
    return keep;
}

inline void check_range(const std::vector<Index>& v, Index dim) {
    for (Index i : v)
        if (i < 0 || i >= dim) throw precondition_error("minor index out of range");
}

inline CMatrix shifted_inverse(CMatrix A, cplx w) {
    A.diagonal().array() -= w;
    return A.partialPivLu().inverse();
}

inline CMatrix embed(const CMatrix& small, const std::vector<Index>& keep, Index dim) {
    CMatrix out = CMatrix::Zero(dim, dim);
    out(keep, keep) = small;
    return out;
}

}  // namespace detail

/// G^{(T,U)} with zero padding on T.
inline CMatrix minor_G(const CMatrix& Y, cplx w, const MinorIndexSet& m) {
    require_upper_half_plane(w, "minor_G");
    const Index dim = Y.cols();
    detail::check_range(m.T, dim);
    detail::check_range(m.U, dim);
    const auto rows = detail::retained(dim, m.U);
    const auto cols = detail::retained(dim, m.T);
    if (cols.empty()) return CMatrix::Zero(dim, dim);
    const CMatrix Yr = Y(rows, cols);
    return detail::embed(detail::shifted_inverse(Yr.adjoint() * Yr, w), cols, dim);
}

/// Gc^{(T,U)} with zero padding on U.
inline CMatrix minor_Gc(const CMatrix& Y, cplx w, const MinorIndexSet& m) {
    require_upper_half_plane(w, "minor_Gc");
    const Index dim = Y.rows();
    detail::check_range(m.T, dim);
    detail::check_range(m.U, dim);
    const auto rows = detail::retained(dim, m.U);
    const auto cols = detail::retained(dim, m.T);
    if (rows.empty()) return CMatrix::Zero(dim, dim);
    const CMatrix Yr = Y(rows, cols);
    return detail::embed(detail::shifted_inverse(Yr * Yr.adjoint(), w), rows, dim);
}

struct ResolventPair {
    cplx w{0.0, 0.0};
    cplx z{0.0, 0.0};
    CMatrix G;
    CMatrix Gc;
    MinorIndexSet minors;
    int n = 0;
    int N = 0;
};

/// Direct dense solves; without minors the block structure of X is used to form Y^*Y, YY^*.
inline ResolventPair resolvent_pair(const LinearizedSystem& sys, cplx w,
                                    const MinorIndexSet& minors = {}) {
    require_upper_half_plane(w, "resolvent_pair");
    ResolventPair rp{w, sys.z, {}, {}, minors, sys.n, sys.N};
    if (minors.empty()) {
        rp.G = detail::shifted_inverse(hermitized_matrix(sys), w);
        rp.Gc = detail::shifted_inverse(hermitized_matrix_dual(sys), w);
    } else {
        rp.G = minor_G(sys.Y, w, minors);
        rp.Gc = minor_Gc(sys.Y, w, minors);
    }
    return rp;
}

struct PartialTraces {
    std::vector<cplx> mG;   // (1/N) sum_i G^a_ii
    std::vector<cplx> mGc;  // (1/N) sum_i Gc^a_ii
    cplx m{0.0, 0.0};       // (1/n) sum_a mG[a]
};

inline std::vector<cplx> block_traces(const CMatrix& M, int n, int N) {
    std::vector<cplx> out(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        out[static_cast<std::size_t>(a)] =
            M.diagonal().segment(static_cast<Index>(a) * N, N).sum() / static_cast<double>(N);
    return out;
}

inline PartialTraces partial_traces(const ResolventPair& rp) {
    PartialTraces pt;
    pt.mG = block_traces(rp.G, rp.n, rp.N);
    pt.mGc = block_traces(rp.Gc, rp.n, rp.N);
    cplx acc{0.0, 0.0};
    for (const auto& v : pt.mG) acc += v;
    pt.m = acc / static_cast<double>(rp.n);
    return pt;
}

struct DeviationStats {
    double Lambda = 0.0;
    double Psi = 0.0;
    double eta = 0.0;
    int N = 0;
};

/// Lambda = max_a max(|mG^a - m_c|, |mGc^a - m_c|);
/// Psi = 1/sqrt(N) + sqrt(Lambda/(N eta)) + 1/(N eta).
inline DeviationStats deviation_stats(const PartialTraces& pt, cplx m_c, double eta, int N) {
    if (!(eta > 0.0)) throw domain_error("deviation_stats: eta must be positive");
    DeviationStats d;
    d.eta = eta;
    d.N = N;
    for (const auto& v : pt.mG) d.Lambda = std::max(d.Lambda, std::abs(v - m_c));
    for (const auto& v : pt.mGc) d.Lambda = std::max(d.Lambda, std::abs(v - m_c));
    const double Ne = static_cast<double>(N) * eta;
    d.Psi = 1.0 / std::sqrt(static_cast<double>(N)) + std::sqrt(d.Lambda / Ne) + 1.0 / Ne;
    return d;
}

inline constexpr double kDenominatorGuard = 1e-8;

struct SceResiduals {
    std::vector<cplx> G;   // 1/mG^a + w(1 + mGc^{a-1}) - |z|^2/(1 + mG^{a+1})
    std::vector<cplx> Gc;  // 1/mGc^a + w(1 + mG^{a+1}) - |z|^2/(1 + mGc^{a-1})
    double max_abs = 0.0;
};

inline SceResiduals sce_residual(const PartialTraces& pt, cplx z, cplx w) {
    const auto n = static_cast<int>(pt.mG.size());
    if (n < 1 || pt.mGc.size() != pt.mG.size())
        throw config_error("sce_residual: inconsistent partial traces");
    auto guard = [](cplx v, const char* what) {
        if (std::abs(v) <= kDenominatorGuard)
            throw degenerate_error(std::string("sce_residual: vanishing denominator ") + what);
    };
    auto at = [n](const std::vector<cplx>& v, int a) {
        return v[static_cast<std::size_t>(((a % n) + n) % n)];
    };
    SceResiduals r;
    const double z2 = std::norm(z);
    for (int a = 0; a < n; ++a) {
        const cplx mg = at(pt.mG, a), mgc = at(pt.mGc, a);
        guard(mg, "m_G^a");
        guard(mgc, "m_Gc^a");
        guard(1.0 + at(pt.mG, a + 1), "1 + m_G^{a+1}");
        guard(1.0 + at(pt.mGc, a - 1), "1 + m_Gc^{a-1}");
        r.G.push_back(1.0 / mg + w * (1.0 + at(pt.mGc, a - 1)) - z2 / (1.0 + at(pt.mG, a + 1)));
        r.Gc.push_back(1.0 / mgc + w * (1.0 + at(pt.mG, a + 1)) - z2 / (1.0 + at(pt.mGc, a - 1)));
    }
    for (const auto& v : r.G) r.max_abs = std::max(r.max_abs, std::abs(v));
    for (const auto& v : r.Gc) r.max_abs = std::max(r.max_abs, std::abs(v));
    return r;
}

// ---------------------------------------------------------------------------------------
// Exact identities

/// |(B_II)^{-1} - (A_II - A_IR A_RR^{-1} A_RI)|_max with B = A^{-1}, R the complement of I.
inline double schur_complement_residual(const CMatrix& A, const std::vector<Index>& block) {
    const Index d = A.rows();
    auto sortedI = block;
    std::sort(sortedI.begin(), sortedI.end());
    const auto R = detail::retained(d, sortedI);
    const CMatrix B = A.partialPivLu().inverse();
    const CMatrix BII = B(sortedI, sortedI);
    const CMatrix lhs = BII.partialPivLu().inverse();
    const CMatrix ARR = A(R, R);
    const CMatrix rhs = A(sortedI, sortedI) - A(sortedI, R) * ARR.partialPivLu().solve(A(R, sortedI));
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

/// |A (A^*A - w)^{-1} A^* - I - w (AA^* - w)^{-1}|_max.
inline double woodbury_residual(const CMatrix& A, cplx w) {
    const CMatrix G = detail::shifted_inverse(A.adjoint() * A, w);
    const CMatrix Gc = detail::shifted_inverse(A * A.adjoint(), w);
    CMatrix R = A * G * A.adjoint() - w * Gc;
    R.diagonal().array() -= 1.0;
    return R.cwiseAbs().maxCoeff();
}

/// One tuple of indices for the identity suite. The base minor is (T, U); i, j, k are
/// distinct indices outside T and U; K is any index set for the trace-minor bound.
struct IdentitySample {
    MinorIndexSet base;
    Index i = 0;
    Index j = 1;
    Index k = 2;
    std::vector<Index> K;
};

/// Random sample: up to `max_minor` removed columns and rows, then three distinct indices
/// outside both sets and a random K of size at most dim/2. Requires dim >= 2 max_minor + 3.
inline IdentitySample draw_identity_sample(Index dim, RngStream& rng, int max_minor = 2) {
    if (dim < 2 * max_minor + 3) throw config_error("draw_identity_sample: dimension too small");
    std::vector<Index> perm(static_cast<std::size_t>(dim));
    for (Index x = 0; x < dim; ++x) perm[static_cast<std::size_t>(x)] = x;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_int_distribution<int> count(0, max_minor);
    const int nt = count(rng), nu = count(rng);
    // T and U may overlap: draw U from the first nt + nu positions of the permutation
    std::vector<Index> T(perm.begin(), perm.begin() + nt);
    std::vector<Index> U;
    for (int u = 0; u < nu; ++u) U.push_back(perm[static_cast<std::size_t>((rng() % 2) ? u : nt + u)]);
    IdentitySample s;
    s.base = MinorIndexSet::make(std::move(T), std::move(U));
    const auto at = [&](int p) { return perm[static_cast<std::size_t>(nt + nu + p)]; };
    s.i = at(0);
    s.j = at(1);
    s.k = at(2);
    std::uniform_int_distribution<Index> ksize(1, std::max<Index>(1, dim / 2));
    const Index kn = ksize(rng);
    std::vector<Index> pool = perm;
    std::shuffle(pool.begin(), pool.end(), rng);
    s.K.assign(pool.begin(), pool.begin() + kn);
    return s;
}

struct IdentityReport {
    double schur_complement = 0.0;  // block inverse formula on Y^{(T,U)*}Y^{(T,U)} - w
    double woodbury = 0.0;
    double im_identity = 0.0;       // sum_k |G_ki|^2 = Im G_ii / eta  (G and Gc)
    double minor_diff_index = 0.0;  // G_ij - G^{(k)}_ij = G_ik G_kj / G_kk  (G and Gc)
    double minor_diff_rank1 = 0.0;  // rank-one removal of a row (G) / column (Gc)
    double schur_expansion_G = 0.0;   // 1/G_ii = -w(1 + y_i^* Gc^{(Ti,U)} y_i), off-diagonal
    double schur_expansion_Gc = 0.0;  // 1/Gc_ii = -w(1 + y_i G^{(T,Ui)} y_i^*), off-diagonal
    double trace_minor_ratio = 0.0;   // max |sum_K (minor - base)_kk| * eta / 4
    std::size_t samples = 0;

    double max_exact() const {
        return std::max({schur_complement, woodbury, im_identity, minor_diff_index,
                         minor_diff_rank1, schur_expansion_G, schur_expansion_Gc});
    }
};

namespace detail {

inline void require_outside(const IdentitySample& s, Index dim) {
    auto check = [&](Index x, const char* name) {
        if (x < 0 || x >= dim) throw precondition_error(std::string(name) + " out of range");
        if (s.base.removes_col(x) || s.base.removes_row(x))
            throw precondition_error(std::string(name) + " lies inside a removed minor set");
    };
    check(s.i, "i");
    check(s.j, "j");
    check(s.k, "k");
    if (s.i == s.j || s.i == s.k || s.j == s.k)
        throw precondition_error("identity sample indices i, j, k must be distinct");
    for (Index x : s.K)
        if (x < 0 || x >= dim) throw precondition_error("K index out of range");
}

inline double max_abs(const CMatrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

inline double im_identity_residual(const CMatrix& G, Index i, double eta) {
    return std::abs(G.col(i).squaredNorm() - G(i, i).imag() / eta);
}

inline cplx guarded(cplx v, const char* what) {
    if (std::abs(v) <= kDenominatorGuard)
        throw degenerate_error(std::string("identity suite: vanishing denominator ") + what);
    return v;
}

}  // namespace detail

inline IdentityReport identity_suite(const LinearizedSystem& sys, cplx w,
                                     std::span<const IdentitySample> samples) {
    require_upper_half_plane(w, "identity_suite");
    const CMatrix& Y = sys.Y;
    const Index dim = Y.rows();
    const double eta = w.imag();
    IdentityReport rep;
    rep.woodbury = woodbury_residual(Y, w);

    for (const auto& s : samples) {
        detail::require_outside(s, dim);
        const auto& base = s.base;
        const Index i = s.i, j = s.j, k = s.k;
        const CMatrix G = minor_G(Y, w, base);
        const CMatrix Gc = minor_Gc(Y, w, base);

        {  // Schur complement on the reduced matrix, I = {i, j} in local coordinates
            const auto rows = detail::retained(dim, base.U);
            const auto cols = detail::retained(dim, base.T);
            const CMatrix Yr = Y(rows, cols);
            CMatrix A = Yr.adjoint() * Yr;
            A.diagonal().array() -= w;
            auto local = [&](Index g) {
                return static_cast<Index>(std::lower_bound(cols.begin(), cols.end(), g) - cols.begin());
            };
            rep.schur_complement = std::max(
                {rep.schur_complement, schur_complement_residual(A, {local(i)}),
                 schur_complement_residual(A, {local(i), local(j)})});
        }

        rep.im_identity = std::max({rep.im_identity, detail::im_identity_residual(G, i, eta),
                                    detail::im_identity_residual(Gc, i, eta)});

        {  // removing index k: G via column k, Gc via row k
            const CMatrix Gk = minor_G(Y, w, base.with_col(k));
            const CMatrix Gck = minor_Gc(Y, w, base.with_row(k));
            for (Index a : {i, j})
                for (Index b : {i, j}) {
                    const cplx lhs = G(a, b) - Gk(a, b);
                    const cplx rhs = G(a, k) * G(k, b) / detail::guarded(G(k, k), "G_kk");
                    const cplx lhs_c = Gc(a, b) - Gck(a, b);
                    const cplx rhs_c = Gc(a, k) * Gc(k, b) / detail::guarded(Gc(k, k), "Gc_kk");
                    rep.minor_diff_index = std::max(
                        {rep.minor_diff_index, std::abs(lhs - rhs), std::abs(lhs_c - rhs_c)});
                }
        }

        {  // rank-one updates: row k out of G, column k out of Gc
            const CMatrix Gr = minor_G(Y, w, base.with_row(k));
            const Eigen::RowVectorXcd yk = Y.row(k);
            const CVector left = Gr * yk.adjoint();
            const Eigen::RowVectorXcd right = yk * Gr;
            const cplx den = detail::guarded(1.0 + (yk * Gr * yk.adjoint())(0, 0), "1 + y G y^*");
            rep.minor_diff_rank1 = std::max(
                rep.minor_diff_rank1, detail::max_abs(G - Gr + left * right / den));

            const CMatrix Gcc = minor_Gc(Y, w, base.with_col(k));
            const CVector ycol = Y.col(k);
            const CVector left_c = Gcc * ycol;
            const Eigen::RowVectorXcd right_c = ycol.adjoint() * Gcc;
            const cplx den_c =
                detail::guarded(1.0 + (ycol.adjoint() * Gcc * ycol)(0, 0), "1 + y^* Gc y");
            rep.minor_diff_rank1 = std::max(
                rep.minor_diff_rank1, detail::max_abs(Gc - Gcc + left_c * right_c / den_c));
        }

        {  // Schur expansions of G (columns) and Gc (rows)
            const CVector yi = Y.col(i), yj = Y.col(j);
            const CMatrix Gc_i = minor_Gc(Y, w, base.with_col(i));
            const CMatrix Gc_ij = minor_Gc(Y, w, base.with_col(i).with_col(j));
            const CMatrix G_i = minor_G(Y, w, base.with_col(i));
            const cplx inv_diag = -w * (1.0 + (yi.adjoint() * Gc_i * yi)(0, 0));
            const cplx off = w * G(i, i) * G_i(j, j) * (yi.adjoint() * Gc_ij * yj)(0, 0);
            rep.schur_expansion_G =
                std::max({rep.schur_expansion_G,
                          std::abs(1.0 / detail::guarded(G(i, i), "G_ii") - inv_diag),
                          std::abs(G(i, j) - off)});

            const Eigen::RowVectorXcd ri = Y.row(i), rj = Y.row(j);
            const CMatrix G_ri = minor_G(Y, w, base.with_row(i));
            const CMatrix G_rij = minor_G(Y, w, base.with_row(i).with_row(j));
            const CMatrix Gc_ri = minor_Gc(Y, w, base.with_row(i));
            const cplx inv_diag_c = -w * (1.0 + (ri * G_ri * ri.adjoint())(0, 0));
            const cplx off_c = w * Gc(i, i) * Gc_ri(j, j) * (ri * G_rij * rj.adjoint())(0, 0);
            rep.schur_expansion_Gc =
                std::max({rep.schur_expansion_Gc,
                          std::abs(1.0 / detail::guarded(Gc(i, i), "Gc_ii") - inv_diag_c),
                          std::abs(Gc(i, j) - off_c)});
        }

        {  // trace-minor bound, removing column i and removing row i, for G and Gc
            const MinorIndexSet col_i = base.with_col(i), row_i = base.with_row(i);
            const CMatrix pairs[4][2] = {
                {minor_G(Y, w, col_i), G},
                {minor_G(Y, w, row_i), G},
                {minor_Gc(Y, w, col_i), Gc},
                {minor_Gc(Y, w, row_i), Gc},
            };
            for (const auto& p : pairs) {
                cplx acc{0.0, 0.0};
                for (Index x : s.K) acc += p[0](x, x) - p[1](x, x);
                rep.trace_minor_ratio = std::max(rep.trace_minor_ratio, std::abs(acc) * eta / 4.0);
            }
        }
        ++rep.samples;
    }
    return rep;
}

/// Central differences of G_ii and Gc_ii in E and eta, scaled by eta^2:
/// returns max_i eta^2 (|dG_ii/dE| + |dG_ii/deta| + |dGc_ii/dE| + |dGc_ii/deta|).
inline double derivative_bound_ratio(const LinearizedSystem& sys, cplx w,
                                     std::span<const Index> indices, double h = 1e-5) {
    require_upper_half_plane(w, "derivative_bound_ratio");
    if (!(h < w.imag())) throw domain_error("derivative_bound_ratio: step must be below eta");
    auto diag = [&](cplx ww) {
        const auto rp = resolvent_pair(sys, ww);
        return std::pair<CVector, CVector>{rp.G.diagonal(), rp.Gc.diagonal()};
    };
    const auto [gEp, gcEp] = diag(w + cplx{h, 0.0});
    const auto [gEm, gcEm] = diag(w - cplx{h, 0.0});
    const auto [gHp, gcHp] = diag(w + cplx{0.0, h});
    const auto [gHm, gcHm] = diag(w - cplx{0.0, h});
    double worst = 0.0;
    for (Index i : indices) {
        const double sum = (std::abs(gEp(i) - gEm(i)) + std::abs(gHp(i) - gHm(i)) +
                            std::abs(gcEp(i) - gcEm(i)) + std::abs(gcHp(i) - gcHm(i))) /
                           (2.0 * h);
        worst = std::max(worst, sum * w.imag() * w.imag());
    }
    return worst;
}

// ---------------------------------------------------------------------------------------
// Fluctuations

enum class ZVariant {
    Z,          // row i(a) against G^{(0, i(a))}: (1 - E_row)[y G y^*]
    calZ,       // column i(a) against Gc^{(i(a), 0)}: (1 - E_col)[y^* Gc y]
    with_minor  // row i(a) against G^{(i(a), i(a))}; the -z e_{i(a)} part drops out
};

/// Centered quadratic form in the row (or column) i of block a. The minor resolvent does
/// not depend on that vector, so the conditional expectation is exact:
///   E_row[y G y^*] = (1/N) sum_k G^{a+1}_kk + |z|^2 G_{i(a) i(a)}
///   E_col[y^* Gc y] = (1/N) sum_k Gc^{a-1}_kk + |z|^2 Gc_{i(a) i(a)}
/// using E|x|^2 = 1/N and that the -z e_{i(a)} component is deterministic.
inline cplx fluctuation_Z(const LinearizedSystem& sys, cplx w, int a, int i, ZVariant variant) {
    require_upper_half_plane(w, "fluctuation_Z");
    if (i < 0 || i >= sys.N) throw precondition_error("fluctuation_Z: row index out of range");
    const Index r = sys.index(a, i);
    const double z2 = std::norm(sys.z);
    const double invN = 1.0 / static_cast<double>(sys.N);
    switch (variant) {
        case ZVariant::Z:
        case ZVariant::with_minor: {
            const MinorIndexSet m = variant == ZVariant::Z ? MinorIndexSet::make({}, {r})
                                                           : MinorIndexSet::make({r}, {r});
            const CMatrix Gm = minor_G(sys.Y, w, m);
            const Eigen::RowVectorXcd y = sys.Y.row(r);
            const cplx q = (y * Gm * y.adjoint())(0, 0);
            const cplx expect =
                Gm.diagonal().segment(sys.index(a + 1, 0), sys.N).sum() * invN + z2 * Gm(r, r);
            return q - expect;
        }
        case ZVariant::calZ: {
            const CMatrix Gcm = minor_Gc(sys.Y, w, MinorIndexSet::make({r}, {}));
            const CVector y = sys.Y.col(r);
            const cplx q = (y.adjoint() * Gcm * y)(0, 0);
            const cplx expect =
                Gcm.diagonal().segment(sys.index(a - 1, 0), sys.N).sum() * invN + z2 * Gcm(r, r);
            return q - expect;
        }
    }
    throw config_error("fluctuation_Z: unknown variant");
}

struct EntrywiseReport {
    double max_diag_dev = 0.0;  // max |G_ii - m_c|, |Gc_ii - m_c| over sampled i
    double max_offdiag = 0.0;   // max |G_kl|, |Gc_kl| over sampled k != l
    double median_offdiag = 0.0;
    std::size_t diag_samples = 0;
    std::size_t offdiag_samples = 0;
};

/// Samples `sample_size` diagonal positions and `sample_size` off-diagonal pairs.
inline EntrywiseReport entrywise_law_check(const ResolventPair& rp, cplx m_c,
                                           std::size_t sample_size, std::uint64_t seed) {
    EntrywiseReport r;
    const Index dim = rp.G.rows();
    RngStream rng(substream_seed(seed, 0xE17));
    std::uniform_int_distribution<Index> pick(0, dim - 1);
    std::vector<double> off;
    for (std::size_t s = 0; s < sample_size; ++s) {
        const Index i = pick(rng);
        r.max_diag_dev = std::max({r.max_diag_dev, std::abs(rp.G(i, i) - m_c),
                                   std::abs(rp.Gc(i, i) - m_c)});
        ++r.diag_samples;
        if (dim < 2) continue;
        Index k = pick(rng), l = pick(rng);
        while (l == k) l = pick(rng);
        off.push_back(std::abs(rp.G(k, l)));
        off.push_back(std::abs(rp.Gc(k, l)));
        r.max_offdiag = std::max({r.max_offdiag, off.end()[-2], off.back()});
        ++r.offdiag_samples;
    }
    if (!off.empty()) r.median_offdiag = median(std::move(off));
    return r;
}

inline EntrywiseReport entrywise_law_check(const LinearizedSystem& sys, cplx w, cplx m_c,
                                           std::size_t sample_size, std::uint64_t seed) {
    return entrywise_law_check(resolvent_pair(sys, w), m_c, sample_size, seed);
}

}  // namespace prodspec
