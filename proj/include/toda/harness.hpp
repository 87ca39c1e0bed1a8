#pragma once
// Commands behind the toda-gge CLI. Each writes into an output directory and returns an exit code.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "toda/core.hpp"
#include "toda/gge.hpp"
#include "toda/hyperelliptic.hpp"
#include "toda/io.hpp"
#include "toda/measures.hpp"
#include "toda/rate.hpp"
#include "toda/rng.hpp"
#include "toda/spectral.hpp"

namespace toda {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_integration = 2, exit_tuning = 3, exit_identity = 4, exit_io = 5 };

inline Json default_config() {
    Json j;
    j["seed"] = 1;
    j["N"] = 8;
    j["N_list"] = {32, 64, 128};
    j["model"] = "constrained";
    j["ell"] = 1.0;
    j["theta"] = 1.0;
    j["V"] = {0.0, 0.0, 1.0};
    j["t"] = 5.0;
    j["t_steps"] = 10;
    j["rk_tol"] = 1e-10;
    j["samples"] = 2000;
    j["burn_in"] = 500;
    j["thin"] = 2;
    j["chains"] = 4;
    j["proposal_scale"] = 0.5;
    j["family"] = "lambda_plus";
    j["input"] = "samples.csv";
    j["grid"] = {{"R", 8.0}, {"n", 2048}};
    j["solver"] = {{"kind", "nu"}, {"P", 1.0}, {"alpha", 0.3}, {"tol", 1e-10}, {"max_iter", 20000}, {"init", "gaussian"}};
    j["threshold"] = 0.05;
    j["cases"] = 10;
    j["fuzz"] = 0.0;
    return j;
}

// recursive merge, user keys win
inline void merge_into(Json& base, const Json& over) {
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object()) merge_into(base[it.key()], it.value());
        else base[it.key()] = it.value();
    }
}

struct ExperimentConfig {
    Json j = default_config();

    static ExperimentConfig from_json(const Json& user) {
        ExperimentConfig c;
        if (!user.is_null()) {
            if (!user.is_object()) throw DomainError("config: top level must be an object");
            merge_into(c.j, user);
        }
        return c;
    }

    std::string hash() const { return hex64(fnv1a(j.dump())); }
    std::uint64_t seed() const { return j.at("seed").get<std::uint64_t>(); }
    int N() const { return j.at("N").get<int>(); }
    double ell() const { return j.at("ell").get<double>(); }
    double theta() const { return j.at("theta").get<double>(); }
    bool constrained() const {
        auto m = j.at("model").get<std::string>();
        if (m != "constrained" && m != "theta") throw DomainError("config: model must be 'constrained' or 'theta'");
        return m == "constrained";
    }
    Potential V() const { return Potential::polynomial(j.at("V").get<std::vector<double>>()); }
    GridSpec grid() const {
        return GridSpec::symmetric(j.at("grid").at("R").get<double>(), j.at("grid").at("n").get<std::size_t>());
    }

    SamplerConfig sampler(int n) const {
        SamplerConfig s;
        s.n = n;
        if (constrained()) s.ell = ell();
        else s.theta = theta();
        s.n_samples = j.at("samples").get<std::size_t>();
        s.burn_in = j.at("burn_in").get<std::size_t>();
        s.thin = j.at("thin").get<std::size_t>();
        s.chains = j.at("chains").get<int>();
        s.proposal_scale = j.at("proposal_scale").get<double>();
        s.seed = seed();
        return s;
    }

    RateParams rate_params() const {
        RateParams p;
        p.ell = ell();
        p.V = V();
        p.grid = grid();
        const auto& s = j.at("solver");
        p.fixed_point.alpha = s.at("alpha").get<double>();
        p.fixed_point.tol = s.at("tol").get<double>();
        p.fixed_point.max_iter = s.at("max_iter").get<int>();
        p.validate();
        return p;
    }

    Json metadata(const std::string& command) const {
        Json m;
        m["tool"] = "toda-gge";
        m["version"] = kVersion;
        m["command"] = command;
        m["seed"] = seed();
        m["config_hash"] = hash();
        return m;
    }
};

namespace detail {

inline RootFamily family_from(const std::string& s) {
    if (s == "lambda_plus") return RootFamily::lambda_plus;
    if (s == "lambda_minus") return RootFamily::lambda_minus;
    if (s == "eta") return RootFamily::eta;
    throw DomainError("config: family must be lambda_plus, lambda_minus or eta");
}

inline SampleBatch draw(const ExperimentConfig& cfg, int n) {
    auto sc = cfg.sampler(n);
    return cfg.constrained() ? sample_constrained(sc, cfg.V()) : sample_unconstrained(sc, cfg.V());
}

inline Json batch_json(const SampleBatch& b) {
    Json j;
    j["N"] = b.n;
    j["samples"] = b.states.size();
    j["method"] = b.method;
    j["acceptance"] = b.acceptance;
    j["tuning_ok"] = b.tuning_ok;
    return j;
}

inline double rel_drift(const std::vector<double>& x, const std::vector<double>& x0) {
    double scale = 1.0, d = 0.0;
    for (double v : x0) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::fabs(x[i] - x0[i]));
    return d / scale;
}

inline std::vector<double> increasing(std::mt19937_64& g, std::size_t n) {
    std::uniform_real_distribution<double> gap(0.3, 1.5);
    std::vector<double> x{std::uniform_real_distribution<double>(-2, 2)(g)};
    while (x.size() < n) x.push_back(x.back() + gap(g));
    return x;
}

inline SpectralData admissible(std::mt19937_64& g, std::size_t n) {
    auto eta = increasing(g, n);
    double m = INFINITY;
    for (double z : critical_points(eta)) m = std::min(m, std::fabs(product_eval(eta, z).value()));
    double frac = std::exp(std::uniform_real_distribution<double>(std::log(1e-3), std::log(0.5))(g));
    return spectral_data_from_eta(eta, frac * m / 2.0);
}

inline FlaschkaState random_state(std::mt19937_64& g, std::size_t n) {
    std::normal_distribution<double> z(0.0, 1.0);
    FlaschkaState s{std::vector<double>(n), std::vector<double>(n)};
    for (auto& a : s.a) a = std::exp(0.5 * z(g));
    for (auto& b : s.b) b = z(g);
    return s;
}

}  // namespace detail

inline int cmd_simulate_flow(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const int n = cfg.N();
    FlaschkaState s0;
    if (cfg.j.contains("state")) {
        s0.a = cfg.j["state"].at("a").get<std::vector<double>>();
        s0.b = cfg.j["state"].at("b").get<std::vector<double>>();
    } else {
        auto g = make_stream(cfg.seed(), 0);
        s0 = detail::random_state(g, std::size_t(n));
    }
    s0.validate();
    const double T = cfg.j.at("t").get<double>(), tol = cfg.j.at("rk_tol").get<double>();
    const int steps = T == 0.0 ? 0 : std::max(1, cfg.j.at("t_steps").get<int>());
    auto l0 = eig_periodic(s0, Sign::plus);
    auto tr0 = conserved_traces(s0, 4);
    const double h0 = hamiltonian(s0), p0 = prod_a(s0);
    std::string csv = meta_line(cfg.metadata("simulate-flow"));
    csv += "t,eig_drift,hamiltonian_drift,trace1_drift,trace2_drift,trace3_drift,trace4_drift,prod_a_drift\r\n";
    Json rows = Json::array();
    double max_eig = 0.0, max_h = 0.0;
    FlowStats stats;
    FlaschkaState s = s0;
    for (int k = 0; k <= steps; ++k) {
        double t = steps == 0 ? 0.0 : T * k / steps;
        if (k > 0) {
            try {
                s = flow(s, T / steps, tol, &stats);
            } catch (const IntegrationError& e) {
                std::cerr << "simulate-flow: " << e.what() << "\n";
                return exit_integration;
            }
        }
        double de = detail::rel_drift(eig_periodic(s, Sign::plus), l0);
        double dh = std::fabs(hamiltonian(s) - h0) / std::max(1.0, std::fabs(h0));
        auto tr = conserved_traces(s, 4);
        std::vector<double> dt(4);
        for (int q = 0; q < 4; ++q) dt[q] = std::fabs(tr[q] - tr0[q]) / std::max(1.0, std::fabs(tr0[q]));
        double dp = std::fabs(prod_a(s) - p0) / p0;
        max_eig = std::max(max_eig, de);
        max_h = std::max(max_h, dh);
        csv += fmt17(t) + "," + fmt17(de) + "," + fmt17(dh);
        for (double v : dt) csv += "," + fmt17(v);
        csv += "," + fmt17(dp) + "\r\n";
    }
    Json rep = cfg.metadata("simulate-flow");
    rep["config"] = cfg.j;
    rep["N"] = n;
    rep["t"] = T;
    rep["max_eig_drift"] = max_eig;
    rep["max_hamiltonian_drift"] = max_h;
    rep["accepted_steps"] = stats.accepted;
    rep["rejected_steps"] = stats.rejected;
    write_text(out / "flow_drift.csv", csv);
    write_json(out / "flow_report.json", rep);
    return exit_ok;
}

inline int cmd_sample(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    auto b = detail::draw(cfg, cfg.N());
    Json meta = cfg.metadata("sample");
    write_text(out / "samples.csv", samples_csv(b.states, meta));
    Json rep = meta;
    rep["config"] = cfg.j;
    rep["batch"] = detail::batch_json(b);
    write_json(out / "samples.json", rep);
    if (!b.tuning_ok) {
        std::cerr << "sample: acceptance outside [0.1, 0.7]\n";
        return exit_tuning;
    }
    return exit_ok;
}

inline int cmd_spectrum_hist(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    auto states = parse_samples_csv(read_text(cfg.j.at("input").get<std::string>()));
    auto mu = empirical_spectral_measure(states, detail::family_from(cfg.j.at("family").get<std::string>()), cfg.grid());
    Json meta = cfg.metadata("spectrum-hist");
    write_text(out / "histogram.csv", measure_csv(mu, meta));
    Json rep = meta;
    rep["config"] = cfg.j;
    rep["measure"] = measure_header(mu);
    rep["samples"] = states.size();
    rep["mass"] = mu.mass();
    write_json(out / "histogram.json", rep);
    return exit_ok;
}

inline int cmd_minimize(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    auto p = cfg.rate_params();
    const auto& s = cfg.j.at("solver");
    const std::string kind = s.at("kind").get<std::string>();
    const std::string init = s.at("init").get<std::string>();
    if (init != "gaussian" && init != "uniform") throw DomainError("config: solver.init must be gaussian or uniform");
    FixedPointResult r;
    if (kind == "nu") r = minimize_nu(p, init == "uniform" ? InitialGuess::uniform : InitialGuess::gaussian);
    else if (kind == "beta") r = beta_equilibrium(s.at("P").get<double>(), p);
    else throw DomainError("config: solver.kind must be nu or beta");
    Json meta = cfg.metadata("minimize");
    write_text(out / "measure.csv", measure_csv(r.mu, meta));
    Json rep = meta;
    rep["config"] = cfg.j;
    rep["measure"] = measure_header(r.mu);
    rep["iterations"] = r.iterations;
    rep["residual"] = r.residual;
    rep["alpha_final"] = r.alpha;
    if (kind == "nu") {
        rep["margin"] = r.margin;
        rep["rate"] = rate_I(r.mu, p);
    }
    Json tr = Json::array();
    for (auto& t : r.trace) tr.push_back({{"iteration", t.iteration}, {"residual", t.residual}, {"rate", t.rate}});
    rep["trace"] = tr;
    write_json(out / "minimize.json", rep);
    return exit_ok;
}

inline int cmd_ldp_check(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    auto V = cfg.V();
    if (!V.is_even()) throw DomainError("ldp-check: even potential required");
    auto p = cfg.rate_params();
    const bool constrained = cfg.constrained();
    std::vector<double> target;
    if (constrained) target = minimize_nu(p).mu.density;
    else target = chi_density(cfg.theta(), 1e-3 * cfg.theta(), p);
    GriddedMeasure ref(p.grid, target);

    Json rows = Json::array();
    std::string csv = meta_line(cfg.metadata("ldp-check"));
    csv += "N,samples,d_bl,acceptance\r\n";
    std::vector<double> d;
    bool tuning = true;
    for (int n : cfg.j.at("N_list").get<std::vector<int>>()) {
        auto b = detail::draw(cfg, n);
        tuning = tuning && b.tuning_ok;
        auto emp = empirical_spectral_measure(b.states, RootFamily::lambda_plus, p.grid);
        d.push_back(bl_distance(emp, ref));
        Json r = detail::batch_json(b);
        r["d_bl"] = d.back();
        rows.push_back(r);
        csv += std::to_string(n) + "," + std::to_string(b.states.size()) + "," + fmt17(d.back()) + "," +
               fmt17(b.mean_acceptance()) + "\r\n";
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < d.size(); ++i) decreasing = decreasing && d[i] < d[i - 1];
    const double thr = cfg.j.at("threshold").get<double>();
    Json rep = cfg.metadata("ldp-check");
    rep["config"] = cfg.j;
    rep["branch"] = constrained ? "constrained" : "theta";
    rep["reference"] = constrained ? "nu_ell" : "chi_theta";
    rep["runs"] = rows;
    rep["strictly_decreasing"] = decreasing;
    rep["final_d_bl"] = d.empty() ? 0.0 : d.back();
    rep["final_within_threshold"] = !d.empty() && d.back() <= thr;
    write_text(out / "ldp.csv", csv);
    write_json(out / "ldp_report.json", rep);
    if (!tuning) {
        std::cerr << "ldp-check: sampler tuning failed\n";
        return exit_tuning;
    }
    return exit_ok;
}

struct IdentityResult {
    std::string name;
    int cases = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass() const { return max_residual <= tolerance; }
};

inline std::vector<IdentityResult> run_identities(std::uint64_t seed, int cases, double fuzz) {
    std::vector<IdentityResult> out;
    auto add = [&](std::string name, double tol, std::uint64_t stream, auto&& body) {
        IdentityResult r{std::move(name), 0, 0.0, tol};
        auto g = make_stream(seed, stream);
        for (int c = 0; c < cases; ++c) {
            r.max_residual = std::max(r.max_residual, body(g, c));
            ++r.cases;
        }
        out.push_back(r);
    };
    add("isospectral_flow", 1e-8, 101, [](std::mt19937_64& g, int) {
        auto s = detail::random_state(g, 8);
        return detail::rel_drift(eig_periodic(flow(s, 2.0, 1e-11), Sign::plus), eig_periodic(s, Sign::plus));
    });
    add("interlacing", 1e-10, 102, [](std::mt19937_64& g, int c) {
        auto s = detail::random_state(g, std::size_t(3 + c % 8));
        return check_interlacing(eig_periodic(s, Sign::plus), eig_periodic(s, Sign::minus), dirichlet_spectrum(s)).worst;
    });
    add("lax_membership", 0.0, 103, [](std::mt19937_64& g, int c) {
        auto s = detail::random_state(g, std::size_t(2 + c % 9));
        return membership_AN(eig_periodic(s, Sign::plus), prod_a(s)).ok() ? 0.0 : 1.0;
    });
    add("root_roundtrip", 1e-9, 104, [](std::mt19937_64& g, int c) {
        auto sd = detail::admissible(g, std::size_t(2 + c % 7));
        auto back = roots_from_lambda_plus(sd.lambda_plus, sd.eps);
        return std::max(detail::rel_drift(back.eta, sd.eta), detail::rel_drift(back.lambda_minus, sd.lambda_minus));
    });
    add("jacobian", 1e-6, 105, [fuzz](std::mt19937_64& g, int c) {
        auto sd = detail::admissible(g, std::size_t(2 + c % 3));
        auto lm = sd.lambda_minus;
        if (fuzz != 0.0) {
            std::uniform_real_distribution<double> u(-1, 1);
            for (double& x : lm) x += fuzz * u(g);
        }
        double ratio = std::exp(log_vandermonde(lm).log_abs - log_vandermonde(sd.lambda_plus).log_abs);
        double fd = fd_jacobian_det(sd.lambda_minus, sd.eps, RootMap::minus_to_plus);
        return std::fabs(fd / ratio - 1.0);
    });
    add("appendix_product", 1e-8, 106, [](std::mt19937_64& g, int c) {
        return appendix_identities(detail::increasing(g, std::size_t(2 + c % 7))).product_residual;
    });
    add("appendix_inequalities", 0.0, 107, [](std::mt19937_64& g, int c) {
        auto r = appendix_identities(detail::increasing(g, std::size_t(2 + c % 7)));
        return (r.young_ok && r.neighbour_ok) ? 0.0 : std::max(-r.young_slack, -r.neighbour_slack);
    });
    add("appendix_d_inverse", 1e-8, 108, [](std::mt19937_64& g, int c) {
        return appendix_d_inverse(detail::increasing(g, std::size_t(2 + c % 7)));
    });
    add("sandwich", 0.0, 109, [](std::mt19937_64& g, int c) {
        auto sd = detail::admissible(g, std::size_t(2 + c % 4));
        double lo = lower_bound_detA(sd).log_abs, mid = integral_I(sd).log_abs, hi = upper_envelope(sd).log_abs;
        return std::max({0.0, lo - mid - 1e-9 * std::fabs(mid), mid - hi - 1e-9 * std::fabs(mid)});
    });
    add("phi_closed_form", 1e-10, 110, [](std::mt19937_64& g, int c) {
        auto sd = detail::admissible(g, std::size_t(2 + c % 4));
        auto rule = gauss_legendre(96);
        double worst = 0.0;
        for (int vs : {1, -1})
            for (std::size_t j = 0; j + 1 < sd.n(); ++j)
                for (int sg : {0, 1}) {
                    auto a = detail::envelope_column(sd, vs, j, sg, rule, true);
                    auto b = detail::envelope_column(sd, vs, j, sg, rule, false);
                    worst = std::max(worst, std::fabs(a[j + std::size_t(sg)] - b[j + std::size_t(sg)]));
                }
        return worst;
    });
    return out;
}

inline int cmd_identity_suite(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    auto res = run_identities(cfg.seed(), cfg.j.at("cases").get<int>(), cfg.j.at("fuzz").get<double>());
    Json rep = cfg.metadata("identity-suite");
    rep["config"] = cfg.j;
    Json list = Json::array();
    bool all = true;
    for (auto& r : res) {
        list.push_back({{"name", r.name}, {"cases", r.cases}, {"max_residual", r.max_residual}, {"tolerance", r.tolerance},
                        {"pass", r.pass()}});
        all = all && r.pass();
    }
    rep["identities"] = list;
    rep["all_pass"] = all;
    write_json(out / "identity_report.json", rep);
    if (!all) {
        for (auto& r : res)
            if (!r.pass()) std::cerr << "identity failed: " << r.name << " (residual " << r.max_residual << ")\n";
        return exit_identity;
    }
    return exit_ok;
}

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"simulate-flow", "sample", "spectrum-hist", "minimize", "ldp-check", "identity-suite"};
    return names;
}

// Maps library errors onto exit codes.
inline int run_command(const std::string& name, const ExperimentConfig& cfg, const std::filesystem::path& out) {
    try {
        if (name == "simulate-flow") return cmd_simulate_flow(cfg, out);
        if (name == "sample") return cmd_sample(cfg, out);
        if (name == "spectrum-hist") return cmd_spectrum_hist(cfg, out);
        if (name == "minimize") return cmd_minimize(cfg, out);
        if (name == "ldp-check") return cmd_ldp_check(cfg, out);
        if (name == "identity-suite") return cmd_identity_suite(cfg, out);
        std::cerr << "unknown command: " << name << "\n";
        return exit_usage;
    } catch (const IoError& e) {
        std::cerr << name << ": " << e.what() << "\n";
        return exit_io;
    } catch (const IntegrationError& e) {
        std::cerr << name << ": " << e.what() << "\n";
        return exit_integration;
    } catch (const TuningError& e) {
        std::cerr << name << ": " << e.what() << "\n";
        return exit_tuning;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << name << ": bad config: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        std::cerr << name << ": " << e.what() << "\n";
        return exit_usage;
    }
}

}  // namespace toda
