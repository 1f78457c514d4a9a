#pragma once

// Command-line front end: configuration (JSON file plus flag overrides), dispatch to the
// library, and CSV / JSON / plot-data emission.
//
// Complex literals: `a`, `a+bi`, `a-bi`, `bi`, `i`, `-i`; a and b are decimal floats
// (exponents allowed, e.g. `1e-3+2.5e-1i`). Whitespace is ignored.
//
// Exit codes: 0 success, 1 violation found, 2 configuration error, 3 I/O error.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prodspec/core.hpp"
#include "prodspec/ensembles.hpp"
#include "prodspec/experiments.hpp"
#include "prodspec/gamma.hpp"
#include "prodspec/resolvent.hpp"
#include "prodspec/selfconsistent.hpp"
#include "prodspec/spectral.hpp"

namespace prodspec::cli {

using json = nlohmann::json;

enum ExitCode : int { exit_ok = 0, exit_violation = 1, exit_config = 2, exit_io = 3 };

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"sample",      "mc-solve",    "support", "density",
                                            "radius",      "outliers",    "concentration",
                                            "esd",         "identities",  "gamma-sweep",
                                            "compare",     "lde",         "sce"};
    return c;
}

// ---------------------------------------------------------------------------------------
// Number formatting and parsing

/// Shortest round-trip representation.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string format_complex(cplx v) {
    std::string s = format_double(v.real());
    const double im = v.imag();
    if (std::signbit(im))
        s += "-" + format_double(-im) + "i";
    else
        s += "+" + format_double(im) + "i";
    return s;
}

namespace detail {

inline double parse_real(std::string_view s, std::string_view whole) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw config_error("malformed complex literal '" + std::string(whole) + "'");
    return v;
}

}  // namespace detail

inline cplx parse_complex(std::string_view text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw config_error("empty complex literal");
    if (s.back() != 'i') return {detail::parse_real(s, text), 0.0};
    s.pop_back();
    // split at the last sign that is not leading and not part of an exponent
    std::size_t split = std::string::npos;
    for (std::size_t p = s.size(); p-- > 1;) {
        if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E') {
            split = p;
            break;
        }
    }
    auto imag_of = [&](std::string_view t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return detail::parse_real(t, text);
    };
    if (split == std::string::npos) return {0.0, imag_of(s)};
    return {detail::parse_real(std::string_view(s).substr(0, split), text),
            imag_of(std::string_view(s).substr(split))};
}

// ---------------------------------------------------------------------------------------
// Configuration

struct CliConfig {
    std::string command;
    std::string config_file;
    std::vector<std::string> overrides;  // key=value
    std::string output_dir = ".";
    std::vector<std::string> formats{"csv"};
    json settings = json::object();  // merged: command defaults < config file < overrides
};

/// Recognized configuration keys.
inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> k{
        "seed",  "trials", "N",      "n",      "z",     "w",     "law", "theta", "delta",
        "bins",  "reference_law",    "xi",     "entrywise_samples",    "workers",
        "E_min", "E_max", "points", "eta",    "tau",   "grid_E", "grid_eta", "eta_min",
        "instances", "output_dir", "format"};
    return k;
}

inline json command_defaults(const std::string& cmd) {
    json d = {{"seed", 1}, {"n", 2}, {"law", "complex-gaussian"}, {"trials", 20},
              {"N", json::array({64, 128, 256, 512})}, {"z", json::array({"1.5"})},
              {"w", json::array({"0.02+0.3i"})}, {"delta", 0.1}, {"bins", 40},
              {"reference_law", "real-gaussian"}, {"xi", json::array({1.5, 2.0})},
              {"entrywise_samples", 200}, {"workers", 0}, {"eta", 1e-6}, {"points", 201},
              {"instances", 50}, {"eta_min", 1e-3}, {"grid_E", 5}, {"grid_eta", 7},
              {"tau", json::array({1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01})}};
    if (cmd == "sample") d["N"] = json::array({8}), d["trials"] = 1;
    if (cmd == "mc-solve") d["w"] = json::array({"0.05+0.2i"});
    if (cmd == "support" || cmd == "density") d["z"] = json::array({"1.5"});
    if (cmd == "identities") d["N"] = json::array({8}), d["w"] = json::array({"0.1+0.5i"});
    if (cmd == "gamma-sweep") d["z"] = json::array({"1.2", "1.5", "3", "6"});
    if (cmd == "compare")
        d["law"] = "rademacher", d["N"] = json::array({32, 64, 128}), d["trials"] = 200,
        d["w"] = json::array({"0.1+0.5i"});
    if (cmd == "lde") d["N"] = json::array({256}), d["trials"] = 1000;
    if (cmd == "sce") d["w"] = json::array({"0.05+0.2i"});
    return d;
}

namespace detail {

/// Scalars are promoted to one-element lists for list-valued keys.
inline json as_list(const json& v) { return v.is_array() ? v : json::array({v}); }

/// Override values are parsed as JSON when possible, otherwise kept as strings.
inline json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

inline void merge_checked(json& into, const json& from, const std::string& origin) {
    if (!from.is_object()) throw config_error(origin + ": top level must be a JSON object");
    for (const auto& [key, value] : from.items()) {
        if (!known_keys().count(key)) throw config_error("unknown configuration key '" + key + "' in " + origin);
        into[key] = value;
    }
}

template <class T>
T get_as(const json& s, const std::string& key) {
    try {
        return s.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error("configuration key '" + key + "' has the wrong type");
    }
}

inline cplx complex_of(const json& v, const std::string& key) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_string()) return parse_complex(v.get<std::string>());
    if (v.is_object() && v.contains("re") && v.contains("im"))
        return {v.at("re").get<double>(), v.at("im").get<double>()};
    throw config_error("configuration key '" + key + "' must hold complex literals");
}

inline std::vector<cplx> complex_list(const json& s, const std::string& key) {
    std::vector<cplx> out;
    for (const auto& v : as_list(s.at(key))) out.push_back(complex_of(v, key));
    if (out.empty()) throw config_error("configuration key '" + key + "' must not be empty");
    return out;
}

template <class T>
std::vector<T> number_list(const json& s, const std::string& key) {
    std::vector<T> out;
    for (const auto& v : as_list(s.at(key))) {
        if (!v.is_number()) throw config_error("configuration key '" + key + "' must hold numbers");
        out.push_back(v.get<T>());
    }
    if (out.empty()) throw config_error("configuration key '" + key + "' must not be empty");
    return out;
}

}  // namespace detail

/// Parses argv. Throws config_error (exit 2) for unknown keys, malformed values or a missing
/// config file; the message names the key or the path.
inline CliConfig parse_config(int argc, const char* const* argv) {
    CLI::App app{"Spectral experiments for products of random matrices"};
    app.set_help_flag("-h,--help");
    CliConfig cfg;
    std::optional<std::string> seed, trials, N, n, z, w, law;
    std::vector<std::string> formats;
    app.add_option("command", cfg.command, "Command to run")
        ->required()
        ->check(CLI::IsMember(commands()));
    app.add_option("-c,--config", cfg.config_file, "JSON configuration file");
    app.add_option("--set", cfg.overrides, "Override key=value (value parsed as JSON if possible)");
    app.add_option("-o,--output-dir", cfg.output_dir, "Directory for result files");
    app.add_option("--format", formats, "csv, json, plotdata (repeatable)")
        ->check(CLI::IsMember({"csv", "json", "plotdata"}));
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--trials", trials, "Trials per ladder size");
    app.add_option("--N", N, "Matrix size or comma-separated ladder");
    app.add_option("--n", n, "Number of factors");
    app.add_option("--z", z, "Shift(s), comma-separated complex literals");
    app.add_option("--w", w, "Spectral parameter(s), comma-separated complex literals");
    app.add_option("--law", law, "Entry law");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        throw;
    } catch (const CLI::ParseError& e) {
        throw config_error(e.what());
    }

    json s = command_defaults(cfg.command);
    bool output_dir_flag = app.count("--output-dir") > 0;
    if (!cfg.config_file.empty()) {
        std::ifstream in(cfg.config_file);
        if (!in) throw config_error("cannot open config file '" + cfg.config_file + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw config_error("malformed JSON in '" + cfg.config_file + "': " + e.what());
        }
        detail::merge_checked(s, doc, cfg.config_file);
    }
    auto split = [](const std::string& text) {
        json arr = json::array();
        std::stringstream ss(text);
        std::string part;
        while (std::getline(ss, part, ',')) arr.push_back(part);
        return arr;
    };
    auto ints = [&](const std::string& key, const std::string& text) {
        json arr = json::array();
        for (const auto& p : split(text)) {
            const auto str = p.get<std::string>();
            long long v = 0;
            const auto r = std::from_chars(str.data(), str.data() + str.size(), v);
            if (r.ec != std::errc{} || r.ptr != str.data() + str.size())
                throw config_error("option --" + key + " expects integers, got '" + str + "'");
            arr.push_back(v);
        }
        return arr.size() == 1 ? arr[0] : arr;
    };
    for (const auto& ov : cfg.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw config_error("override '" + ov + "' must be key=value");
        detail::merge_checked(s, json{{ov.substr(0, eq), detail::parse_override_value(ov.substr(eq + 1))}},
                              "--set");
    }
    if (seed) s["seed"] = ints("seed", *seed);
    if (trials) s["trials"] = ints("trials", *trials);
    if (N) s["N"] = ints("N", *N);
    if (n) s["n"] = ints("n", *n);
    if (z) s["z"] = split(*z);
    if (w) s["w"] = split(*w);
    if (law) s["law"] = *law;
    if (!formats.empty())
        cfg.formats = formats;
    else if (s.contains("format"))
        cfg.formats = detail::as_list(s["format"]).get<std::vector<std::string>>();
    if (!output_dir_flag && s.contains("output_dir")) cfg.output_dir = detail::get_as<std::string>(s, "output_dir");
    for (const auto& f : cfg.formats)
        if (f != "csv" && f != "json" && f != "plotdata")
            throw config_error("configuration key 'format' has unknown value '" + f + "'");
    cfg.settings = std::move(s);
    return cfg;
}

/// ExperimentConfig from merged settings; validates ranges.
inline ExperimentConfig experiment_config(const json& s) {
    using detail::get_as;
    ExperimentConfig cfg;
    const auto law = parse_entry_law(get_as<std::string>(s, "law"));
    const auto seed = s.at("seed");
    if (!seed.is_number_integer() || seed.get<long long>() < 0)
        throw config_error("configuration key 'seed' must be a non-negative integer");
    cfg.spec = EnsembleSpec::make(get_as<int>(s, "n"), 1, law, seed.get<std::uint64_t>());
    if (s.contains("theta")) cfg.spec.theta = get_as<double>(s, "theta");
    cfg.trials = get_as<int>(s, "trials");
    cfg.N_ladder = detail::number_list<int>(s, "N");
    cfg.z_values = detail::complex_list(s, "z");
    cfg.w_values = detail::complex_list(s, "w");
    cfg.delta = get_as<double>(s, "delta");
    cfg.bins = get_as<int>(s, "bins");
    cfg.reference_law = parse_entry_law(get_as<std::string>(s, "reference_law"));
    cfg.xi_values = detail::number_list<double>(s, "xi");
    cfg.entrywise_samples = get_as<std::size_t>(s, "entrywise_samples");
    cfg.workers = get_as<unsigned>(s, "workers");
    try {
        cfg.validate();
    } catch (const config_error& e) {
        throw config_error(std::string("out-of-range value: ") + e.what());
    }
    return cfg;
}

// ---------------------------------------------------------------------------------------
// Emission

inline const char* csv_header() { return "seed,n,N,z_re,z_im,w_re,w_im,metric,value"; }

inline std::string to_csv(const SweepResult& res) {
    std::string out = csv_header();
    out += '\n';
    auto opt = [](const std::optional<cplx>& v, bool re) {
        return v ? format_double(re ? v->real() : v->imag()) : std::string();
    };
    for (const auto& r : res.records) {
        out += std::to_string(r.seed) + ',' + std::to_string(r.n) + ',' + std::to_string(r.N) + ',' +
               opt(r.z, true) + ',' + opt(r.z, false) + ',' + opt(r.w, true) + ',' + opt(r.w, false) +
               ',' + r.metric + ',' + format_double(r.value) + '\n';
    }
    return out;
}

namespace detail {

inline json complex_json(const std::optional<cplx>& v) {
    if (!v) return nullptr;
    return json{{"re", v->real()}, {"im", v->imag()}};
}

}  // namespace detail

inline json to_json(const SweepResult& res) {
    using detail::complex_json;
    json j;
    j["sweep"] = res.sweep;
    j["records"] = json::array();
    for (const auto& r : res.records)
        j["records"].push_back({{"seed", r.seed}, {"N", r.N}, {"n", r.n}, {"metric_name", r.metric},
                                {"value", r.value}, {"z", complex_json(r.z)}, {"w", complex_json(r.w)}});
    j["fits"] = json::array();
    for (const auto& f : res.fits)
        j["fits"].push_back({{"metric", f.metric}, {"z", complex_json(f.z)}, {"w", complex_json(f.w)},
                             {"slope", f.fit.slope}, {"intercept", f.fit.intercept}, {"r2", f.fit.r2}});
    j["summary"] = json::array();
    for (const auto& s : res.summary)
        j["summary"].push_back({{"metric", s.metric}, {"z", complex_json(s.z)}, {"w", complex_json(s.w)},
                                {"N", s.N}, {"count", s.count}, {"median", s.median}, {"mean", s.mean},
                                {"sem", s.sem}, {"min", s.min}, {"max", s.max}});
    j["aggregates"] = json::array();
    for (const auto& a : res.aggregates)
        j["aggregates"].push_back({{"name", a.name}, {"N", a.N}, {"z", complex_json(a.z)},
                                   {"w", complex_json(a.w)}, {"value", a.value}});
    j["violations"] = json::array();
    for (const auto& v : res.violations)
        j["violations"].push_back({{"seed", v.seed}, {"N", v.N}, {"metric", v.metric}, {"value", v.value},
                                   {"threshold", v.threshold}, {"z", complex_json(v.z)}});
    j["errors"] = json::array();
    for (const auto& e : res.errors)
        j["errors"].push_back({{"seed", e.seed}, {"N", e.N}, {"message", e.message}});
    j["notes"] = res.notes;
    return j;
}

/// One series per (metric, z, w): "x y" lines with y the median over trials. x is N, or
/// Re w for records without a matrix size (N == 0). Series of one metric are separated by
/// two blank lines.
inline std::map<std::string, std::string> to_plotdata(const SweepResult& res) {
    using prodspec::detail::opt_key;
    using GroupKey = std::tuple<std::tuple<int, double, double>, std::tuple<int, double, double>>;
    std::map<std::string, std::map<GroupKey, std::map<double, std::vector<double>>>> by_metric;
    for (const auto& r : res.records) {
        const bool by_E = r.N == 0 && r.w;
        const double x = by_E ? r.w->real() : static_cast<double>(r.N);
        // a series indexed by E carries E in w, so it is grouped by z only
        const GroupKey key{opt_key(r.z), by_E ? opt_key(std::nullopt) : opt_key(r.w)};
        by_metric[r.metric][key][x].push_back(r.value);
    }
    std::map<std::string, std::string> files;
    for (const auto& [metric, groups] : by_metric) {
        std::string text;
        for (const auto& [key, series] : groups) {
            if (!text.empty()) text += "\n\n";
            for (const auto& [x, ys] : series) text += format_double(x) + ' ' + format_double(median(ys)) + '\n';
        }
        std::string name;
        for (char c : metric) name += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ? c : '_';
        files.emplace(name, std::move(text));
    }
    return files;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw io_error("failed writing '" + path.string() + "'");
}

/// Writes <stem>.csv, <stem>.json and <stem>.<metric>.dat into `dir`. Returns the paths.
inline std::vector<std::filesystem::path> emit_results(const SweepResult& res,
                                                       const std::vector<std::string>& formats,
                                                       const std::filesystem::path& dir,
                                                       const std::string& stem) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw io_error("output directory '" + dir.string() + "' is not writable");
    std::vector<std::filesystem::path> written;
    for (const auto& f : formats) {
        if (f == "csv") {
            written.push_back(dir / (stem + ".csv"));
            write_file(written.back(), to_csv(res));
        } else if (f == "json") {
            written.push_back(dir / (stem + ".json"));
            write_file(written.back(), to_json(res).dump(2) + "\n");
        } else if (f == "plotdata") {
            for (const auto& [metric, text] : to_plotdata(res)) {
                written.push_back(dir / (stem + "." + metric + ".dat"));
                write_file(written.back(), text);
            }
        } else {
            throw config_error("unknown output format '" + f + "'");
        }
    }
    return written;
}

// ---------------------------------------------------------------------------------------
// Commands that are not Monte Carlo sweeps

inline TrialRecord scalar_record(std::string metric, double value, std::optional<cplx> z = std::nullopt,
                                 std::optional<cplx> w = std::nullopt, int N = 0, int n = 0,
                                 std::uint64_t seed = 0) {
    return {seed, N, n, std::move(metric), value, z, w};
}

/// Eigenvalues of the product for each trial and size.
inline SweepResult sample_command(const ExperimentConfig& cfg) {
    SweepResult res;
    res.sweep = "sample";
    for (int t = 0; t < cfg.trials; ++t)
        for (int N : cfg.N_ladder) {
            EnsembleSpec s = cfg.spec;
            s.N = N;
            s.master_seed = trial_seed(cfg.spec.master_seed, t);
            const auto ev = eigenvalues(build_product(sample_chain(s)));
            for (const auto& l : ev.eigenvalues) {
                res.records.push_back(scalar_record("eigenvalue_re", l.real(), std::nullopt, std::nullopt, N, s.n, s.master_seed));
                res.records.push_back(scalar_record("eigenvalue_im", l.imag(), std::nullopt, std::nullopt, N, s.n, s.master_seed));
            }
            res.records.push_back(scalar_record("spectral_radius", ev.radius, std::nullopt, std::nullopt, N, s.n, s.master_seed));
        }
    finalize(res);
    return res;
}

inline SweepResult mc_solve_command(const ExperimentConfig& cfg) {
    SweepResult res;
    res.sweep = "mc-solve";
    for (const cplx& z : cfg.z_values)
        for (const cplx& w : cfg.w_values) {
            const auto sol = solve_mc(z, w);
            res.records.push_back(scalar_record("m_c_re", sol.m_c.real(), z, w));
            res.records.push_back(scalar_record("m_c_im", sol.m_c.imag(), z, w));
            res.records.push_back(scalar_record("residual", sol.residual, z, w));
        }
    finalize(res);
    return res;
}

inline SweepResult support_command(const ExperimentConfig& cfg) {
    SweepResult res;
    res.sweep = "support";
    for (const cplx& z : cfg.z_values) {
        const auto sup = support_endpoints(z);
        res.records.push_back(scalar_record("a_frak", sup.a_frak, z));
        res.records.push_back(scalar_record("lambda_minus", sup.lambda_minus, z));
        res.records.push_back(scalar_record("lambda_plus", sup.lambda_plus, z));
        res.records.push_back(scalar_record("gap_threshold", sup.lambda_minus / 2.0, z));
    }
    finalize(res);
    return res;
}

/// Density on `points` equally spaced E in [E_min, E_max]; records carry w = E + i eta.
inline SweepResult density_command(const ExperimentConfig& cfg, const json& s) {
    SweepResult res;
    res.sweep = "density";
    const double eta = detail::get_as<double>(s, "eta");
    const int points = detail::get_as<int>(s, "points");
    if (points < 2) throw config_error("configuration key 'points' must be >= 2");
    for (const cplx& z : cfg.z_values) {
        const auto sup = support_endpoints(z);
        const double lo = s.contains("E_min") ? detail::get_as<double>(s, "E_min") : 0.0;
        const double hi = s.contains("E_max") ? detail::get_as<double>(s, "E_max") : 1.05 * sup.lambda_plus;
        if (!(lo < hi)) throw config_error("configuration keys 'E_min' < 'E_max' required");
        for (int k = 0; k < points; ++k) {
            const double E = lo + (hi - lo) * k / (points - 1);
            res.records.push_back(scalar_record("density", density(z, E, eta), z, cplx{E, eta}));
        }
        res.aggregates.push_back({"integral", 0, z, std::nullopt,
                                  integrate_density(z, sup.lambda_minus, sup.lambda_plus, 1001, eta)});
    }
    finalize(res);
    return res;
}

/// Identity suite on random instances; sizes from N_ladder, n from the ensemble spec.
inline SweepResult identities_command(const ExperimentConfig& cfg, const json& s) {
    SweepResult res;
    res.sweep = "identities";
    const int instances = detail::get_as<int>(s, "instances");
    if (instances < 1) throw config_error("configuration key 'instances' must be >= 1");
    const cplx w = cfg.w_values.front();
    for (int N : cfg.N_ladder)
        for (int t = 0; t < instances; ++t) {
            EnsembleSpec es = cfg.spec;
            es.N = N;
            es.master_seed = trial_seed(cfg.spec.master_seed, t);
            const auto sys = build_linearization(sample_chain(es), cfg.z_values.front());
            RngStream rng(substream_seed(es.master_seed, 0x1D));
            const auto sample = draw_identity_sample(sys.dim(), rng);
            const auto rep = identity_suite(sys, w, std::span<const IdentitySample>(&sample, 1));
            const std::pair<const char*, double> rows[] = {
                {"schur_complement", rep.schur_complement},   {"woodbury", rep.woodbury},
                {"im_identity", rep.im_identity},             {"minor_diff_index", rep.minor_diff_index},
                {"minor_diff_rank1", rep.minor_diff_rank1},   {"schur_expansion_G", rep.schur_expansion_G},
                {"schur_expansion_Gc", rep.schur_expansion_Gc}, {"trace_minor_ratio", rep.trace_minor_ratio},
            };
            for (const auto& [name, v] : rows) {
                res.records.push_back(scalar_record(name, v, cfg.z_values.front(), w, N, es.n, es.master_seed));
                const bool ratio = std::string_view(name) == "trace_minor_ratio";
                const double limit = ratio ? 1.0 : 1e-10;
                if (!(v <= limit))
                    res.violations.push_back({es.master_seed, N, name, v, limit, cfg.z_values.front()});
            }
        }
    finalize(res);
    return res;
}

inline SweepResult gamma_command(const ExperimentConfig& cfg, const json& s) {
    SweepResult res;
    res.sweep = "gamma-sweep";
    double E_max = 1.0;
    for (const cplx& z : cfg.z_values) E_max = std::min(E_max, support_endpoints(z).lambda_minus / 2.0);
    SpectralWindow win{E_max, detail::get_as<double>(s, "eta_min"), 1.0};
    const auto grid = win.grid(detail::get_as<int>(s, "grid_E"), detail::get_as<int>(s, "grid_eta"));
    const auto rep = inverse_norm_sweep(cfg.spec.n, cfg.z_values, grid, detail::number_list<double>(s, "tau"));
    for (const auto& p : rep.points) {
        res.records.push_back(scalar_record("inv_norm", p.inv_norm, p.z, p.w, 0, cfg.spec.n));
        res.records.push_back(scalar_record("min_abs_l", p.min_abs_l, p.z, p.w, 0, cfg.spec.n));
        res.records.push_back(scalar_record("circulant_mismatch", p.circulant_mismatch, p.z, p.w, 0, cfg.spec.n));
        res.records.push_back(scalar_record("det_residual", p.det_residual, p.z, p.w, 0, cfg.spec.n));
    }
    for (const auto& p : rep.counterexamples)
        res.violations.push_back({0, 0, "singular_gamma", p.inv_norm, 0.0, p.z});
    res.aggregates.push_back({"tau", 0, std::nullopt, std::nullopt, rep.tau});
    res.aggregates.push_back({"max_inv_norm", 0, std::nullopt, std::nullopt, rep.max_inv_norm});
    res.aggregates.push_back({"max_circulant_mismatch", 0, std::nullopt, std::nullopt, rep.max_circulant_mismatch});
    res.aggregates.push_back({"max_det_residual", 0, std::nullopt, std::nullopt, rep.max_det_residual});
    if (!(rep.tau > 0.0)) res.violations.push_back({0, 0, "tau", rep.tau, 0.0, std::nullopt});
    finalize(res);
    return res;
}

inline SweepResult dispatch(const CliConfig& cli, const ExperimentConfig& cfg) {
    const auto& c = cli.command;
    const auto& s = cli.settings;
    if (c == "sample") return sample_command(cfg);
    if (c == "mc-solve") return mc_solve_command(cfg);
    if (c == "support") return support_command(cfg);
    if (c == "density") return density_command(cfg, s);
    if (c == "radius") return radius_sweep(cfg);
    if (c == "outliers") return outlier_scan(cfg);
    if (c == "concentration") return concentration_sweep(cfg);
    if (c == "esd") return esd_compare(cfg, cfg.bins);
    if (c == "identities") return identities_command(cfg, s);
    if (c == "gamma-sweep") return gamma_command(cfg, s);
    if (c == "compare") return ensemble_comparison(cfg);
    if (c == "lde") return lde_check(cfg);
    if (c == "sce") return sce_and_entrywise_scan(cfg);
    throw config_error("unknown command '" + c + "'");
}

inline std::string opt_label(const std::optional<cplx>& v) { return v ? format_complex(*v) : "-"; }

/// Short human-readable report on `out`.
inline void print_summary(const SweepResult& res, std::ostream& out) {
    out << res.sweep << ": " << res.records.size() << " records\n";
    if (res.summary.size() <= 64) {
        for (const auto& s : res.summary) {
            out << "  " << s.metric << " z=" << opt_label(s.z) << " w=" << opt_label(s.w);
            if (s.N) out << " N=" << s.N;
            if (s.count == 1)
                out << "  " << format_double(s.median) << '\n';
            else
                out << "  median=" << format_double(s.median) << " max=" << format_double(s.max)
                    << " (n=" << s.count << ")\n";
        }
    }
    for (const auto& f : res.fits)
        out << "  fit " << f.metric << ": slope=" << format_double(f.fit.slope)
            << " r2=" << format_double(f.fit.r2) << '\n';
    for (const auto& a : res.aggregates) {
        out << "  " << a.name;
        if (a.N) out << " N=" << a.N;
        if (a.z) out << " z=" << format_complex(*a.z);
        out << "  " << format_double(a.value) << '\n';
    }
    for (const auto& n : res.notes) out << "  note: " << n << '\n';
    if (!res.errors.empty()) out << "  " << res.errors.size() << " trial errors\n";
    if (!res.violations.empty()) out << "  " << res.violations.size() << " violations\n";
}

/// Full command-line entry point; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        pin_blas_threads();
        const auto cli = parse_config(argc, argv);
        const auto cfg = experiment_config(cli.settings);
        const auto res = dispatch(cli, cfg);
        print_summary(res, out);
        emit_results(res, cli.formats, cli.output_dir, cli.command);
        for (const auto& e : res.errors) err << "trial error (seed " << e.seed << ", N " << e.N << "): " << e.message << '\n';
        return res.violations.empty() ? exit_ok : exit_violation;
    } catch (const CLI::CallForHelp&) {
        return exit_ok;
    } catch (const io_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return exit_io;
    } catch (const config_error& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const precondition_error& e) {
        err << "precondition failed: " << e.what() << '\n';
        return exit_config;
    } catch (const domain_error& e) {
        err << "invalid value: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_violation;
    }
}

}  // namespace prodspec::cli
