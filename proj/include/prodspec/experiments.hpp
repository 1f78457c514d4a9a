#pragma once

// Monte Carlo sweeps. Every sweep fans out over (trial, N) tasks, each task drawing its
// factors from seeds derived only from (master seed, trial), so a trial uses the same
// seed at every N of the ladder and every rerun sees the same streams.
//
// Per-trial failures are recorded in SweepResult::errors; threshold violations are
// recorded in SweepResult::violations. Neither aborts a sweep.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "prodspec/core.hpp"
#include "prodspec/ensembles.hpp"
#include "prodspec/parallel.hpp"
#include "prodspec/resolvent.hpp"
#include "prodspec/selfconsistent.hpp"
#include "prodspec/spectral.hpp"
#include "prodspec/stats.hpp"

namespace prodspec {

struct ExperimentConfig {
    EnsembleSpec spec;  // n, entry law, theta, master seed; spec.N is replaced by N_ladder
    int trials = 20;
    std::vector<cplx> z_values{cplx{1.5, 0.0}};
    std::vector<cplx> w_values{cplx{0.02, 0.3}};
    std::vector<int> N_ladder{64, 128, 256, 512};
    double delta = 0.1;  // sweeps over the annulus require |z| >= 1 + delta
    std::string output_path;

    int bins = 40;                                   // esd_compare
    EntryLaw reference_law = EntryLaw::real_gaussian;  // ensemble_comparison
    std::vector<double> xi_values{1.5, 2.0};         // lde_check
    std::size_t entrywise_samples = 200;             // sce_and_entrywise_scan
    unsigned workers = 0;                            // 0: worker_count()

    void validate() const {
        spec.validate();
        if (trials < 1) throw config_error("trials must be >= 1");
        if (N_ladder.empty()) throw config_error("N_ladder must not be empty");
        for (int N : N_ladder)
            if (N < 1) throw config_error("N_ladder entries must be >= 1");
        if (!(delta >= 0.0)) throw config_error("delta must be >= 0");
        if (bins < 1) throw config_error("bins must be >= 1");
        for (const cplx& w : w_values)
            if (!(w.imag() > 0.0)) throw config_error("w values must have Im w > 0");
    }
};

struct TrialRecord {
    std::uint64_t seed = 0;
    int N = 0;
    int n = 0;
    std::string metric;
    double value = 0.0;
    std::optional<cplx> z;
    std::optional<cplx> w;
};

struct FitRow {
    std::string metric;
    std::optional<cplx> z;
    std::optional<cplx> w;
    LinearFit fit;
};

struct SummaryRow {
    std::string metric;
    std::optional<cplx> z;
    std::optional<cplx> w;
    int N = 0;
    std::size_t count = 0;
    double median = 0.0;
    double mean = 0.0;
    double sem = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct Aggregate {
    std::string name;
    int N = 0;
    std::optional<cplx> z;
    std::optional<cplx> w;
    double value = 0.0;
};

struct TrialError {
    std::uint64_t seed = 0;
    int N = 0;
    std::string message;
};

struct Violation {
    std::uint64_t seed = 0;
    int N = 0;
    std::string metric;
    double value = 0.0;
    double threshold = 0.0;
    std::optional<cplx> z;
};

struct SweepResult {
    std::string sweep;
    std::vector<TrialRecord> records;
    std::vector<FitRow> fits;
    std::vector<SummaryRow> summary;
    std::vector<Aggregate> aggregates;
    std::vector<TrialError> errors;
    std::vector<Violation> violations;
    std::vector<std::string> notes;

    const SummaryRow* find_summary(const std::string& metric, int N) const {
        for (const auto& s : summary)
            if (s.metric == metric && s.N == N) return &s;
        return nullptr;
    }
    const FitRow* find_fit(const std::string& metric) const {
        for (const auto& f : fits)
            if (f.metric == metric) return &f;
        return nullptr;
    }
    std::vector<double> values(const std::string& metric, int N) const {
        std::vector<double> out;
        for (const auto& r : records)
            if (r.metric == metric && r.N == N) out.push_back(r.value);
        return out;
    }
};

/// Seed of trial t; independent of N, z and w.
inline std::uint64_t trial_seed(std::uint64_t master, int t) {
    return substream_seed(master, 0x7A1A10000ULL + static_cast<std::uint64_t>(t));
}

namespace detail {

using OptC = std::optional<cplx>;

inline auto opt_key(const OptC& v) {
    return v ? std::tuple<int, double, double>{1, v->real(), v->imag()}
             : std::tuple<int, double, double>{0, 0.0, 0.0};
}

struct TaskOut {
    std::vector<TrialRecord> records;
    std::vector<TrialError> errors;
    std::vector<Violation> violations;
};

struct Task {
    int trial = 0;
    int N = 0;
    std::uint64_t seed = 0;
};

inline std::vector<Task> make_tasks(const ExperimentConfig& cfg) {
    std::vector<Task> tasks;
    for (int t = 0; t < cfg.trials; ++t)
        for (int N : cfg.N_ladder) tasks.push_back({t, N, trial_seed(cfg.spec.master_seed, t)});
    return tasks;
}

inline EnsembleSpec spec_for(const ExperimentConfig& cfg, int N, std::uint64_t seed) {
    EnsembleSpec s = cfg.spec;
    s.N = N;
    s.master_seed = seed;
    return s;
}

/// Runs body(task, out) over all tasks; exceptions become TrialError entries.
template <class Body>
void run_tasks(const ExperimentConfig& cfg, SweepResult& res, Body&& body) {
    const auto tasks = make_tasks(cfg);
    auto outs = parallel_map<TaskOut>(
        tasks.size(),
        [&](std::size_t k) {
            TaskOut out;
            try {
                body(tasks[k], out);
            } catch (const std::exception& e) {
                out.errors.push_back({tasks[k].seed, tasks[k].N, e.what()});
            }
            return out;
        },
        cfg.workers);
    for (auto& o : outs) {
        for (auto& r : o.records) res.records.push_back(std::move(r));
        for (auto& e : o.errors) res.errors.push_back(std::move(e));
        for (auto& v : o.violations) res.violations.push_back(std::move(v));
    }
}

}  // namespace detail

/// Canonical ordering by (seed, z, w, N, metric), summary per (metric, z, w, N) and
/// log-log fits of the median against N for metrics with positive medians on >= 2 sizes.
inline void finalize(SweepResult& res) {
    using detail::opt_key;
    std::stable_sort(res.records.begin(), res.records.end(),
                     [](const TrialRecord& a, const TrialRecord& b) {
                         return std::tuple(a.seed, opt_key(a.z), opt_key(a.w), a.N, a.metric) <
                                std::tuple(b.seed, opt_key(b.z), opt_key(b.w), b.N, b.metric);
                     });
    std::stable_sort(res.errors.begin(), res.errors.end(), [](const auto& a, const auto& b) {
        return std::tuple(a.seed, a.N, a.message) < std::tuple(b.seed, b.N, b.message);
    });
    std::stable_sort(res.violations.begin(), res.violations.end(), [](const auto& a, const auto& b) {
        return std::tuple(a.seed, opt_key(a.z), a.N, a.metric) <
               std::tuple(b.seed, opt_key(b.z), b.N, b.metric);
    });

    using Key = std::tuple<std::string, std::tuple<int, double, double>,
                           std::tuple<int, double, double>, int>;
    std::map<Key, std::vector<double>> groups;
    std::map<Key, std::pair<detail::OptC, detail::OptC>> zw;
    for (const auto& r : res.records) {
        const Key k{r.metric, opt_key(r.z), opt_key(r.w), r.N};
        groups[k].push_back(r.value);
        zw[k] = {r.z, r.w};
    }
    res.summary.clear();
    for (const auto& [k, vals] : groups) {
        SummaryRow s;
        s.metric = std::get<0>(k);
        s.z = zw[k].first;
        s.w = zw[k].second;
        s.N = std::get<3>(k);
        s.count = vals.size();
        s.median = median(vals);
        s.mean = mean(vals);
        s.sem = sem(vals);
        s.min = *std::min_element(vals.begin(), vals.end());
        s.max = *std::max_element(vals.begin(), vals.end());
        res.summary.push_back(std::move(s));
    }

    res.fits.clear();
    for (std::size_t a = 0; a < res.summary.size();) {
        std::size_t b = a;
        const auto& head = res.summary[a];
        std::vector<double> xs, ys;
        bool positive = true;
        while (b < res.summary.size() && res.summary[b].metric == head.metric &&
               opt_key(res.summary[b].z) == opt_key(head.z) &&
               opt_key(res.summary[b].w) == opt_key(head.w)) {
            xs.push_back(res.summary[b].N);
            ys.push_back(res.summary[b].median);
            positive = positive && res.summary[b].median > 0.0 && res.summary[b].N > 0;
            ++b;
        }
        if (xs.size() >= 2 && positive) res.fits.push_back({head.metric, head.z, head.w, loglog_fit(xs, ys)});
        a = b;
    }
}

namespace detail {

inline void require_ascending(const std::vector<int>& ladder) {
    if (!std::is_sorted(ladder.begin(), ladder.end()) ||
        std::adjacent_find(ladder.begin(), ladder.end()) != ladder.end())
        throw precondition_error("N_ladder must be strictly ascending");
}

inline void note_annulus(const ExperimentConfig& cfg, SweepResult& res) {
    for (const cplx& z : cfg.z_values)
        if (std::abs(z) > 6.0)
            res.notes.push_back("|z| = " + std::to_string(std::abs(z)) +
                                " lies outside the annulus 1 + delta <= |z| <= 6");
}

inline void push(TaskOut& out, const Task& t, int n, std::string metric, double value,
                 OptC z = std::nullopt, OptC w = std::nullopt) {
    out.records.push_back({t.seed, t.N, n, std::move(metric), value, z, w});
}

}  // namespace detail

/// Spectral radius of X_1...X_n per (trial, N). Aggregate "max_radius" per N.
inline SweepResult radius_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    detail::require_ascending(cfg.N_ladder);
    SweepResult res;
    res.sweep = "radius";
    detail::run_tasks(cfg, res, [&](const detail::Task& t, detail::TaskOut& out) {
        const auto chain = sample_chain(detail::spec_for(cfg, t.N, t.seed));
        detail::push(out, t, cfg.spec.n, "spectral_radius", spectral_radius(build_product(chain)));
    });
    finalize(res);
    for (int N : cfg.N_ladder)
        if (const auto* s = res.find_summary("spectral_radius", N))
            res.aggregates.push_back({"max_radius", N, std::nullopt, std::nullopt, s->max});
    return res;
}

/// Smallest eigenvalue of (X - z)^*(X - z) against the gap threshold lambda_-(z)/2.
/// Records min_eig, gap_threshold, s_min (= sqrt(min_eig)) and s_max_X (max over factors).
inline SweepResult outlier_scan(const ExperimentConfig& cfg) {
    cfg.validate();
    for (const cplx& z : cfg.z_values)
        if (std::abs(z) < 1.0 + cfg.delta)
            throw precondition_error("outlier_scan: |z| = " + std::to_string(std::abs(z)) +
                                     " is below 1 + delta = " + std::to_string(1.0 + cfg.delta));
    SweepResult res;
    res.sweep = "outliers";
    detail::note_annulus(cfg, res);
    const int n = cfg.spec.n;
    detail::run_tasks(cfg, res, [&](const detail::Task& t, detail::TaskOut& out) {
        const auto chain = sample_chain(detail::spec_for(cfg, t.N, t.seed));
        double s_max_X = 0.0;
        for (const auto& f : chain.factors) s_max_X = std::max(s_max_X, singular_extremes(f).s_max);
        const auto base = build_linearization(chain, cfg.z_values.front());
        for (const cplx& z : cfg.z_values) {
            const auto sys = reshift(base, z);
            const double min_eig = hermitized_spectrum(sys).lambdas.front();
            const double threshold = support_endpoints(z).lambda_minus / 2.0;
            detail::push(out, t, n, "min_eig", min_eig, z);
            detail::push(out, t, n, "gap_threshold", threshold, z);
            detail::push(out, t, n, "s_min", std::sqrt(min_eig), z);
            detail::push(out, t, n, "s_max_X", s_max_X, z);
            if (min_eig < threshold) out.violations.push_back({t.seed, t.N, "min_eig", min_eig, threshold, z});
        }
    });
    finalize(res);
    return res;
}

/// 1/sqrt(N) + 1/(N eta) + 1/(sqrt(eta) N^{3/4}).
inline double concentration_envelope(int N, double eta) {
    const double n = static_cast<double>(N);
    return 1.0 / std::sqrt(n) + 1.0 / (n * eta) + 1.0 / (std::sqrt(eta) * std::pow(n, 0.75));
}

/// |m(z, w) - m_c(z, w)| per (trial, N, z, w), with w in
/// {0 <= E <= lambda_-(z)/2, N^{-1/2} <= eta <= 1} for every N of the ladder.
/// Aggregates per (N, z, w): "envelope" and "envelope_ratio" (median / envelope).
inline SweepResult concentration_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    detail::require_ascending(cfg.N_ladder);
    for (const cplx& z : cfg.z_values) {
        const double E_max = support_endpoints(z).lambda_minus / 2.0;
        for (const cplx& w : cfg.w_values) {
            const double eta_min = 1.0 / std::sqrt(static_cast<double>(cfg.N_ladder.front()));
            if (w.real() < 0.0 || w.real() > E_max || w.imag() < eta_min || w.imag() > 1.0)
                throw precondition_error("concentration_sweep: w = " + std::to_string(w.real()) +
                                         "+" + std::to_string(w.imag()) +
                                         "i lies outside the window for the ladder");
        }
    }
    SweepResult res;
    res.sweep = "concentration";
    detail::note_annulus(cfg, res);
    std::vector<std::vector<cplx>> mc(cfg.z_values.size());
    for (std::size_t a = 0; a < cfg.z_values.size(); ++a)
        for (const cplx& w : cfg.w_values) mc[a].push_back(solve_mc(cfg.z_values[a], w).m_c);
    const int n = cfg.spec.n;
    detail::run_tasks(cfg, res, [&](const detail::Task& t, detail::TaskOut& out) {
        const auto chain = sample_chain(detail::spec_for(cfg, t.N, t.seed));
        const auto base = build_linearization(chain, cfg.z_values.front());
        for (std::size_t a = 0; a < cfg.z_values.size(); ++a) {
            const auto spec = hermitized_spectrum(reshift(base, cfg.z_values[a]));
            for (std::size_t b = 0; b < cfg.w_values.size(); ++b) {
                const cplx w = cfg.w_values[b];
                detail::push(out, t, n, "abs_m_minus_mc", std::abs(empirical_stieltjes(spec, w) - mc[a][b]),
                             cfg.z_values[a], w);
            }
        }
    });
    finalize(res);
    for (const auto& s : res.summary) {
        if (s.metric != "abs_m_minus_mc" || !s.w) continue;
        const double env = concentration_envelope(s.N, s.w->imag());
        res.aggregates.push_back({"envelope", s.N, s.z, s.w, env});
        res.aggregates.push_back({"envelope_ratio", s.N, s.z, s.w, s.median / env});
    }
    return res;
}

/// Mass of the limiting density in each of `bins` equal bins on [lo, hi], by trapezoid
/// quadrature restricted to the support.
inline std::vector<double> reference_bin_masses(cplx z, int bins, double lo, double hi,
                                                int nodes_per_bin = 33) {
    if (bins < 1 || !(lo < hi)) throw config_error("reference_bin_masses: bad binning");
    const auto sup = support_endpoints(z);
    const double width = (hi - lo) / bins;
    std::vector<double> out(static_cast<std::size_t>(bins), 0.0);
    for (int k = 0; k < bins; ++k) {
        const double a = std::max(lo + k * width, sup.lambda_minus);
        const double b = std::min(lo + (k + 1) * width, sup.lambda_plus);
        if (a < b) out[static_cast<std::size_t>(k)] = integrate_density(z, a, b, nodes_per_bin);
    }
    return out;
}

/// Total variation between a histogram and reference bin masses; mass of either measure
/// outside the binned range counts fully.
inline double tv_distance(const std::vector<HistogramBin>& hist, const std::vector<double>& ref) {
    if (hist.size() != ref.size()) throw config_error("tv_distance: bin count mismatch");
    double diff = 0.0, p_in = 0.0, q_in = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        diff += std::abs(hist[k].mass - ref[k]);
        p_in += hist[k].mass;
        q_in += ref[k];
    }
    return 0.5 * (diff + std::max(0.0, 1.0 - p_in) + std::max(0.0, 1.0 - q_in));
}

/// TV distance between the hermitized ESD and the binned limiting density, per (trial, N).
/// Bins span [0, 1.25 lambda_+(z)]. Aggregate "paired_wins" counts trials whose distance at the
/// largest N is below the one at the smallest N.
inline SweepResult esd_compare(const ExperimentConfig& cfg, int bins) {
    cfg.validate();
    if (cfg.z_values.size() != 1) throw precondition_error("esd_compare: exactly one z per run");
    if (bins < 1) throw config_error("esd_compare: bins must be >= 1");
    const cplx z = cfg.z_values.front();
    const double hi = 1.25 * support_endpoints(z).lambda_plus;
    const auto ref = reference_bin_masses(z, bins, 0.0, hi);
    SweepResult res;
    res.sweep = "esd";
    const int n = cfg.spec.n;
    detail::run_tasks(cfg, res, [&](const detail::Task& t, detail::TaskOut& out) {
        const auto chain = sample_chain(detail::spec_for(cfg, t.N, t.seed));
        const auto spec = hermitized_spectrum(build_linearization(chain, z));
        detail::push(out, t, n, "tv_distance", tv_distance(esd_histogram(spec, bins, 0.0, hi), ref), z);
    });
    finalize(res);
    if (cfg.N_ladder.size() >= 2) {
        const int lo_N = *std::min_element(cfg.N_ladder.begin(), cfg.N_ladder.end());
        const int hi_N = *std::max_element(cfg.N_ladder.begin(), cfg.N_ladder.end());
        std::map<std::uint64_t, std::pair<double, double>> by_seed;
        for (const auto& r : res.records) {
            if (r.N == lo_N) by_seed[r.seed].first = r.value;
            if (r.N == hi_N) by_seed[r.seed].second = r.value;
        }
        int wins = 0;
        for (const auto& [seed, pr] : by_seed) wins += pr.second < pr.first ? 1 : 0;
        res.aggregates.push_back({"paired_wins", hi_N, z, std::nullopt, static_cast<double>(wins)});
        res.aggregates.push_back({"paired_total", hi_N, z, std::nullopt, static_cast<double>(by_seed.size())});
    }
    return res;
}

inline bool is_real_law(EntryLaw law) { return law != EntryLaw::complex_gaussian; }

/// Trial averages of the partial traces m_G^a under the configured law ("primary") and
/// cfg.reference_law ("reference"), at each (z, w). The two sides draw from different
/// substreams of the trial seed. Aggregates per (N, z, w):
///   delta_mean  max_a |mean_primary - mean_reference|
///   pooled_sem  max_a sqrt(sem_p^2 + sem_r^2), with complex SEMs
///   excess      max_a |delta_a| / (3 pooled_sem_a + 5/sqrt(N)); > 1 is a violation
inline SweepResult ensemble_comparison(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.spec.entry_law == EntryLaw::zero || cfg.reference_law == EntryLaw::zero)
        throw precondition_error("ensemble_comparison: both laws must have unit variance");
    if (is_real_law(cfg.spec.entry_law) != is_real_law(cfg.reference_law))
        throw precondition_error("ensemble_comparison: laws must share second moments");
    SweepResult res;
    res.sweep = "compare";
    const int n = cfg.spec.n;
    detail::run_tasks(cfg, res, [&](const detail::Task& t, detail::TaskOut& out) {
        for (int side = 0; side < 2; ++side) {
            EnsembleSpec s = detail::spec_for(cfg, t.N, substream_seed(t.seed, static_cast<std::uint64_t>(side)));
            if (side == 1) s.entry_law = cfg.reference_law;
            const auto chain = sample_chain(s);
            const auto base = build_linearization(chain, cfg.z_values.front());
            const std::string tag = side == 0 ? "primary" : "reference";
            for (const cplx& z : cfg.z_values) {
                const auto sys = reshift(base, z);
                for (const cplx& w : cfg.w_values) {
                    const CMatrix G = detail::shifted_inverse(hermitized_matrix(sys), w);
                    const auto mG = block_traces(G, n, t.N);
                    for (int a = 0; a < n; ++a) {
                        const auto v = mG[static_cast<std::size_t>(a)];
                        detail::push(out, t, n, tag + ".mG" + std::to_string(a) + ".re", v.real(), z, w);
                        detail::push(out, t, n, tag + ".mG" + std::to_string(a) + ".im", v.imag(), z, w);
                    }
                }
            }
        }
    });
    finalize(res);

    std::vector<double> fit_N, fit_delta;
    for (const cplx& z : cfg.z_values)
        for (const cplx& w : cfg.w_values)
            for (int N : cfg.N_ladder) {
                double delta = 0.0, pooled = 0.0, excess = 0.0;
                for (int a = 0; a < n; ++a) {
                    auto collect = [&](const std::string& metric) {
                        std::vector<double> v;
                        for (const auto& r : res.records)
                            if (r.metric == metric && r.N == N && r.z == z && r.w == w) v.push_back(r.value);
                        return v;
                    };
                    const std::string A = ".mG" + std::to_string(a);
                    const auto pr = collect("primary" + A + ".re"), pi = collect("primary" + A + ".im");
                    const auto rr = collect("reference" + A + ".re"), ri = collect("reference" + A + ".im");
                    const double d = std::hypot(mean(pr) - mean(rr), mean(pi) - mean(ri));
                    const double sp2 = sem(pr) * sem(pr) + sem(pi) * sem(pi);
                    const double sr2 = sem(rr) * sem(rr) + sem(ri) * sem(ri);
                    const double ps = std::sqrt(sp2 + sr2);
                    const double tol = 3.0 * ps + 5.0 / std::sqrt(static_cast<double>(N));
                    delta = std::max(delta, d);
                    pooled = std::max(pooled, ps);
                    excess = std::max(excess, d / tol);
                }
                res.aggregates.push_back({"delta_mean", N, z, w, delta});
                res.aggregates.push_back({"pooled_sem", N, z, w, pooled});
                res.aggregates.push_back({"excess", N, z, w, excess});
                if (excess > 1.0) res.violations.push_back({0, N, "delta_mean", delta, delta / excess, z});
                if (cfg.z_values.size() == 1 && cfg.w_values.size() == 1) {
                    fit_N.push_back(N);
                    fit_delta.push_back(delta);
                }
            }
    bool positive = fit_N.size() >= 2;
    for (double d : fit_delta) positive = positive && d > 0.0;
    if (positive)
        res.fits.push_back({"delta_mean", cfg.z_values.front(), cfg.w_values.front(), loglog_fit(fit_N, fit_delta)});
    return res;
}

/// Normalized statistics of the three large deviation events for one vector a with
/// E|a_i|^2 = sigma^2. Each is |S| / (scale), where exceeding (log N)^xi is the event.
struct LdeStatistics {
    double linear = 0.0;         // |sum a_i A_i| / (sigma |A|_2)
    double diagonal = 0.0;       // |sum (|a_i|^2 - sigma^2) B_ii| / (sigma^2 |diag B|_2)
    double offdiagonal = 0.0;    // |sum_{i != j} conj(a_i) B_ij a_j| / (sigma^2 |offdiag B|_F)
    cplx diagonal_raw{0.0, 0.0};  // the centered diagonal form itself
};

inline LdeStatistics lde_statistics(const CVector& a, double sigma, const CVector& A, const CMatrix& B) {
    LdeStatistics s;
    s.linear = std::abs((a.array() * A.array()).sum()) / (sigma * A.norm());
    cplx diag{0.0, 0.0};
    double diag_norm = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        diag += (std::norm(a(i)) - sigma * sigma) * B(i, i);
        diag_norm += std::norm(B(i, i));
    }
    s.diagonal_raw = diag;
    s.diagonal = std::abs(diag) / (sigma * sigma * std::sqrt(diag_norm));
    const cplx full = a.dot(B * a);  // sum conj(a_i) B_ij a_j
    cplx on_diag{0.0, 0.0};
    for (Index i = 0; i < a.size(); ++i) on_diag += std::norm(a(i)) * B(i, i);
    const double off_norm = std::sqrt(std::max(B.squaredNorm() - B.diagonal().squaredNorm(), 0.0));
    s.offdiagonal = off_norm > 0.0 ? std::abs(full - on_diag) / (sigma * sigma * off_norm) : 0.0;
    return s;
}

/// Exceedance of the three events per (trial, N) for xi in cfg.xi_values, with fixed
/// coefficients per N: A = e_1 ("unit"), A complex Gaussian ("random"), B = identity
/// ("equal") and B complex Gaussian ("random"). Records both the statistics
/// ("lde.<event>.stat") and indicators ("lde.<event>.xi=<xi>"); summary means are
/// exceedance frequencies.
inline SweepResult lde_check(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.trials < 1000) throw precondition_error("lde_check: needs at least 1000 trials");
    if (cfg.spec.entry_law == EntryLaw::zero) throw precondition_error("lde_check: zero law has no variance");
    SweepResult res;
    res.sweep = "lde";
    struct Coeffs {
        CVector A_unit, A_rand;
        CMatrix B_equal, B_rand;
    };
    std::map<int, Coeffs> coeffs;
    for (int N : cfg.N_ladder) {
        RngStream rng(substream_seed(cfg.spec.master_seed, 0x1DE00000ULL + static_cast<std::uint64_t>(N)));
        Coeffs c;
        c.A_unit = CVector::Zero(N);
        c.A_unit(0) = 1.0;
        c.A_rand = CVector(N);
        for (Index i = 0; i < N; ++i) c.A_rand(i) = draw_standardized(EntryLaw::complex_gaussian, rng);
        c.B_equal = CMatrix::Identity(N, N);
        c.B_rand = sample_factor(N, EntryLaw::complex_gaussian, rng);
        coeffs.emplace(N, std::move(c));
    }
    const int n = cfg.spec.n;
    detail::run_tasks(cfg, res, [&](const detail::Task& t, detail::TaskOut& out) {
        const auto& c = coeffs.at(t.N);
        RngStream rng(t.seed);
        const double sigma = 1.0 / std::sqrt(static_cast<double>(t.N));
        CVector a(t.N);
        for (Index i = 0; i < t.N; ++i) a(i) = sigma * draw_standardized(cfg.spec.entry_law, rng);
        const auto s_unit = lde_statistics(a, sigma, c.A_unit, c.B_equal);
        const auto s_rand = lde_statistics(a, sigma, c.A_rand, c.B_rand);
        const std::pair<const char*, double> events[] = {
            {"linear_unit", s_unit.linear},
            {"linear_random", s_rand.linear},
            {"diagonal_equal", s_unit.diagonal},
            {"diagonal_random", s_rand.diagonal},
            {"offdiagonal_random", s_rand.offdiagonal},
        };
        const double logN = std::log(static_cast<double>(t.N));
        for (const auto& [name, stat] : events) {
            detail::push(out, t, n, std::string("lde.") + name + ".stat", stat);
            for (double xi : cfg.xi_values) {
                char buf[32];
                std::snprintf(buf, sizeof buf, ".xi=%g", xi);
                detail::push(out, t, n, std::string("lde.") + name + buf, stat >= std::pow(logN, xi) ? 1.0 : 0.0);
            }
        }
    });
    finalize(res);
    res.fits.clear();  // frequencies and raw statistics have no power-law trend to report
    return res;
}

/// Window for the self-consistent scan: 0 <= E < lambda_-(z), 0 < eta <= 1.
inline bool in_scan_window(cplx z, cplx w) {
    return w.real() >= 0.0 && w.real() < support_endpoints(z).lambda_minus && w.imag() > 0.0 &&
           w.imag() <= 1.0;
}

/// Per (trial, N, z, w): the largest self-consistent residual over blocks and both resolvents
/// ("sce_max_residual"), Lambda ("Lambda"), and the sampled entrywise deviations
/// ("entry_diag_max", "entry_offdiag_max", "entry_offdiag_median").
inline SweepResult sce_and_entrywise_scan(const ExperimentConfig& cfg) {
    cfg.validate();
    for (const cplx& z : cfg.z_values)
        for (const cplx& w : cfg.w_values)
            if (!in_scan_window(z, w))
                throw precondition_error("sce_and_entrywise_scan: w outside 0 <= E < lambda_-(z), 0 < eta <= 1");
    SweepResult res;
    res.sweep = "sce";
    detail::note_annulus(cfg, res);
    const int n = cfg.spec.n;
    detail::run_tasks(cfg, res, [&](const detail::Task& t, detail::TaskOut& out) {
        const auto chain = sample_chain(detail::spec_for(cfg, t.N, t.seed));
        const auto base = build_linearization(chain, cfg.z_values.front());
        for (const cplx& z : cfg.z_values) {
            const auto sys = reshift(base, z);
            for (const cplx& w : cfg.w_values) {
                const auto rp = resolvent_pair(sys, w);
                const auto pt = partial_traces(rp);
                const cplx m_c = solve_mc(z, w).m_c;
                detail::push(out, t, n, "sce_max_residual", sce_residual(pt, z, w).max_abs, z, w);
                detail::push(out, t, n, "Lambda", deviation_stats(pt, m_c, w.imag(), t.N).Lambda, z, w);
                const auto ent = entrywise_law_check(rp, m_c, cfg.entrywise_samples, t.seed);
                detail::push(out, t, n, "entry_diag_max", ent.max_diag_dev, z, w);
                detail::push(out, t, n, "entry_offdiag_max", ent.max_offdiag, z, w);
                detail::push(out, t, n, "entry_offdiag_median", ent.median_offdiag, z, w);
            }
        }
    });
    finalize(res);
    return res;
}

}  // namespace prodspec
