#pragma once

// Deterministic limit objects for (X - z)^*(X - z): the Stieltjes transform m_c(z, w) of the
// limiting spectral measure, its density and the closed-form support edges.
//
// m_c solves  1/m + w (1 + m) - |z|^2 / (1 + m) = 0.  Clearing denominators gives
//     w m^3 + 2 w m^2 + (w + 1 - |z|^2) m + 1 = 0.
// For Im w > 0 two of the three roots have Im m > 0. The transform of a probability measure
// on [0, inf) also satisfies Im(w m) > 0, and exactly one root passes both tests; that
// root is m_c.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "prodspec/core.hpp"

namespace prodspec {

/// All roots of a3 t^3 + a2 t^2 + a1 t + a0 (a3 != 0): Cardano on the depressed cubic,
/// then Newton polishing on the original polynomial.
inline std::array<cplx, 3> cubic_roots(cplx a3, cplx a2, cplx a1, cplx a0) {
    if (a3 == cplx{0.0, 0.0}) throw degenerate_error("cubic_roots: leading coefficient is 0");
    const cplx b = a2 / a3, c = a1 / a3, d = a0 / a3;
    const cplx p = c - b * b / 3.0;
    const cplx q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const cplx s = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    const cplx plus = -q / 2.0 + s, minus = -q / 2.0 - s;
    const cplx C = std::abs(plus) >= std::abs(minus) ? plus : minus;

    std::array<cplx, 3> roots;
    if (std::abs(C) == 0.0) {
        roots.fill(-b / 3.0);  // triple root
    } else {
        const cplx u = std::pow(C, 1.0 / 3.0);
        const cplx omega = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
        cplx uk = u;
        for (auto& r : roots) {
            r = uk - p / (3.0 * uk) - b / 3.0;
            uk *= omega;
        }
    }

    auto poly = [&](cplx t) { return ((t + b) * t + c) * t + d; };
    auto dpoly = [&](cplx t) { return (3.0 * t + 2.0 * b) * t + c; };
    for (auto& r : roots) {
        for (int it = 0; it < 4; ++it) {
            const cplx f = poly(r);
            const cplx df = dpoly(r);
            if (f == cplx{0.0, 0.0} || df == cplx{0.0, 0.0}) break;
            const cplx next = r - f / df;
            if (!(std::abs(poly(next)) < std::abs(f))) break;
            r = next;
        }
    }
    return roots;
}

inline std::array<cplx, 3> mc_cubic_roots(cplx z, cplx w) {
    return cubic_roots(w, 2.0 * w, w + 1.0 - std::norm(z), cplx{1.0, 0.0});
}

/// Im m > 0 and Im(w m) > 0.
inline bool is_admissible_root(cplx m, cplx w) { return m.imag() > 0.0 && (w * m).imag() > 0.0; }

inline double mc_residual(cplx m, cplx z, cplx w) {
    if (std::abs(m) <= 1e-12 || std::abs(1.0 + m) <= 1e-12)
        throw degenerate_error("mc_residual: |m| or |1+m| below 1e-12");
    return std::abs(1.0 / m + w * (1.0 + m) - std::norm(z) / (1.0 + m));
}

struct SelfConsistentSolution {
    cplx z{0.0, 0.0};
    cplx w{0.0, 0.0};
    cplx m_c{0.0, 0.0};
    double residual = 0.0;
    int branch_id = -1;  // index into mc_cubic_roots(z, w)
};

inline constexpr double kMcResidualTol = 1e-10;
inline constexpr double kRootCollisionTol = 1e-12;

namespace detail {

// Round-off floor of the residual: the three terms cancel, so the attainable absolute
// accuracy scales with the largest of them.
inline double residual_scale(cplx m, cplx z, cplx w) {
    return std::max({1.0, 1.0 / std::abs(m), std::abs(w * (1.0 + m)),
                     std::norm(z) / std::abs(1.0 + m)});
}

inline SelfConsistentSolution finish_solution(cplx z, cplx w, cplx m, int id) {
    if (std::abs(m) < 1e-10 || std::abs(1.0 + m) < 1e-10)
        throw degenerate_error("solve_mc: selected root has |m| or |1+m| below 1e-10");
    SelfConsistentSolution s{z, w, m, mc_residual(m, z, w), id};
    if (s.residual > kMcResidualTol * residual_scale(m, z, w))
        throw degenerate_error("solve_mc: residual " + std::to_string(s.residual) +
                               " exceeds solver tolerance");
    return s;
}

}  // namespace detail

inline SelfConsistentSolution solve_mc(cplx z, cplx w) {
    require_upper_half_plane(w, "solve_mc");
    const auto roots = mc_cubic_roots(z, w);
    int best = -1;
    for (int k = 0; k < 3; ++k) {
        if (!is_admissible_root(roots[k], w)) continue;
        if (best < 0) {
            best = k;
            continue;
        }
        if (std::abs(roots[k] - roots[best]) < kRootCollisionTol)
            throw branch_error("solve_mc: admissible roots collide", 0);
        if (roots[k].imag() > roots[best].imag()) best = k;
    }
    if (best < 0) throw degenerate_error("solve_mc: no admissible root (Im m > 0, Im wm > 0)");
    return detail::finish_solution(z, w, roots[best], best);
}

/// Number of roots with Im m > 0 and number that are admissible.
struct RootCensus {
    int upper = 0;
    int admissible = 0;
};

inline RootCensus root_census(cplx z, cplx w) {
    RootCensus c;
    for (const auto& r : mc_cubic_roots(z, w)) {
        if (r.imag() > 0.0) ++c.upper;
        if (is_admissible_root(r, w)) ++c.admissible;
    }
    return c;
}

struct SupportInterval {
    double z_mod = 0.0;
    double a_frak = 0.0;
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;
};

inline SupportInterval support_endpoints(cplx z) {
    SupportInterval s;
    s.z_mod = std::abs(z);
    s.a_frak = std::sqrt(1.0 + 8.0 * s.z_mod * s.z_mod);
    const double am = s.a_frak - 3.0, ap = s.a_frak + 3.0;
    // inside the unit disk the formula goes negative; the support then reaches 0
    s.lambda_minus = std::max(0.0, am * am * am / (8.0 * (s.a_frak - 1.0)));
    s.lambda_plus = ap * ap * ap / (8.0 * (s.a_frak + 1.0));
    return s;
}

inline constexpr double kDefaultEtaProbe = 1e-6;

/// (1/pi) Im m_c(z, E + i eta_probe): the eta-regularized density of the limiting measure.
inline double density(cplx z, double E, double eta_probe = kDefaultEtaProbe) {
    if (!(eta_probe >= 1e-9 && eta_probe <= 1e-3))
        throw domain_error("density: eta_probe must lie in [1e-9, 1e-3]");
    return solve_mc(z, cplx{E, eta_probe}).m_c.imag() / std::numbers::pi;
}

/// Trapezoid rule for the density over [lo, hi] on `nodes` equispaced points.
inline double integrate_density(cplx z, double lo, double hi, int nodes,
                                double eta_probe = kDefaultEtaProbe) {
    if (nodes < 2) throw config_error("integrate_density: nodes must be >= 2");
    const double h = (hi - lo) / (nodes - 1);
    double acc = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double f = density(z, lo + k * h, eta_probe);
        acc += (k == 0 || k == nodes - 1) ? 0.5 * f : f;
    }
    return acc * h;
}

struct EdgeReport {
    bool preconditions_ok = true;
    bool re_nonnegative = true;  // Re m_c >= -1e-10 everywhere
    double min_re = std::numeric_limits<double>::infinity();
    double max_abs_re = 0.0;
    double min_abs_re = std::numeric_limits<double>::infinity();
    double min_ratio = std::numeric_limits<double>::infinity();  // Im m_c / eta
    double max_ratio = 0.0;
    double worst_ratio_spread = 1.0;  // max over E of (max_eta ratio / min_eta ratio)
    double c_empirical = 1.0;         // largest c with c <= |Re m|, ratio <= 1/c
};

/// Checks |Re m_c| ~ 1, Re m_c >= 0 and Im m_c ~ eta below the lower edge.
/// tau0 defaults to lambda_-/2.
inline EdgeReport edge_asymptotics_check(cplx z, std::span<const double> E_grid,
                                         std::span<const double> eta_grid, double tau0 = -1.0) {
    EdgeReport r;
    const auto sup = support_endpoints(z);
    if (tau0 < 0.0) tau0 = sup.lambda_minus / 2.0;
    if (std::abs(z) < 1.1) r.preconditions_ok = false;
    for (double E : E_grid)
        if (E < 0.0 || E > sup.lambda_minus - tau0 + 1e-15) r.preconditions_ok = false;

    for (double E : E_grid) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double eta : eta_grid) {
            const cplx m = solve_mc(z, cplx{E, eta}).m_c;
            const double ratio = m.imag() / eta;
            r.min_re = std::min(r.min_re, m.real());
            if (m.real() < -1e-10) r.re_nonnegative = false;
            r.max_abs_re = std::max(r.max_abs_re, std::abs(m.real()));
            r.min_abs_re = std::min(r.min_abs_re, std::abs(m.real()));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        r.min_ratio = std::min(r.min_ratio, lo);
        r.max_ratio = std::max(r.max_ratio, hi);
        r.worst_ratio_spread = std::max(r.worst_ratio_spread, hi / lo);
    }
    r.c_empirical = std::min({r.min_abs_re, 1.0 / r.max_abs_re, r.min_ratio, 1.0 / r.max_ratio,
                              1.0});
    return r;
}

/// Tracks the admissible root along a path by nearest-root matching.
inline std::vector<SelfConsistentSolution> branch_continuation(cplx z,
                                                               std::span<const cplx> w_path) {
    std::vector<SelfConsistentSolution> out;
    if (w_path.empty()) return out;
    out.reserve(w_path.size());
    out.push_back(solve_mc(z, w_path[0]));
    for (std::size_t k = 1; k < w_path.size(); ++k) {
        const cplx w = w_path[k];
        require_upper_half_plane(w, "branch_continuation");
        if (std::abs(w - w_path[k - 1]) >= 0.1)
            throw config_error("branch_continuation: path spacing must be < 0.1 (index " +
                               std::to_string(k) + ")");
        const cplx prev = out.back().m_c;
        const auto roots = mc_cubic_roots(z, w);
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(roots[a] - prev) < std::abs(roots[b] - prev);
        });
        if (std::abs(roots[order[0]] - roots[order[1]]) < kRootCollisionTol)
            throw branch_error("branch_continuation: roots collide", k);
        const cplx m = roots[order[0]];
        if (!is_admissible_root(m, w))
            throw branch_error("branch_continuation: tracked root left the admissible branch", k);
        out.push_back(detail::finish_solution(z, w, m, order[0]));
    }
    return out;
}

/// Rectangle {0 <= E <= E_max, eta_min <= eta <= eta_max} in the upper half plane.
struct SpectralWindow {
    double E_max = 0.0;
    double eta_min = 1e-3;
    double eta_max = 1.0;

    /// The window below the lower edge: E <= lambda_-(z)/2, eta <= 1.
    static SpectralWindow below_edge(cplx z, double eta_min) {
        return {support_endpoints(z).lambda_minus / 2.0, eta_min, 1.0};
    }

    bool contains(cplx w) const {
        return w.real() >= 0.0 && w.real() <= E_max && w.imag() >= eta_min && w.imag() <= eta_max;
    }

    /// nE equispaced E values times nEta log-spaced eta values.
    std::vector<cplx> grid(int nE, int nEta) const {
        std::vector<cplx> out;
        for (int i = 0; i < nE; ++i) {
            const double E = nE == 1 ? 0.0 : E_max * i / (nE - 1);
            for (int j = 0; j < nEta; ++j) {
                const double t = nEta == 1 ? 0.0 : static_cast<double>(j) / (nEta - 1);
                out.emplace_back(E, eta_min * std::pow(eta_max / eta_min, t));
            }
        }
        return out;
    }
};

struct StabilityReport {
    double C = 1.0;  // |m_c|, |1 + m_c| in [1/C, C] over the grid
    double min_abs_m = std::numeric_limits<double>::infinity();
    double max_abs_m = 0.0;
    double min_abs_1pm = std::numeric_limits<double>::infinity();
    double max_abs_1pm = 0.0;
};

inline StabilityReport stability_bounds(cplx z, std::span<const cplx> ws) {
    StabilityReport r;
    for (const cplx w : ws) {
        const cplx m = solve_mc(z, w).m_c;
        r.min_abs_m = std::min(r.min_abs_m, std::abs(m));
        r.max_abs_m = std::max(r.max_abs_m, std::abs(m));
        r.min_abs_1pm = std::min(r.min_abs_1pm, std::abs(1.0 + m));
        r.max_abs_1pm = std::max(r.max_abs_1pm, std::abs(1.0 + m));
    }
    r.C = std::max({1.0, r.max_abs_m, r.max_abs_1pm, 1.0 / r.min_abs_m, 1.0 / r.min_abs_1pm});
    return r;
}

}  // namespace prodspec
