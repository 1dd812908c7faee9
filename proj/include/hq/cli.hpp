#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hq/barrier.hpp"
#include "hq/construct.hpp"
#include "hq/errors.hpp"
#include "hq/radial_solver.hpp"
#include "hq/symfun.hpp"
#include "hq/viscosity.hpp"

namespace hq::cli {

using nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_certificate_fail = 2;
inline constexpr int exit_config_error = 64;
inline constexpr int exit_numerical = 70;

struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    json params = json::object();
    bool strict = true;

    static RunConfig parse(const json& j, bool strict);
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where, bool strict)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) {
            const std::string msg = "unknown key '" + it.key() + "' in " + where;
            if (strict) throw configuration_error(msg);
            std::cerr << "warning: " << msg << "\n";
        }
    }
}

inline double need_number(const json& p, const char* key, const std::string& where)
{
    if (!p.contains(key) || !p[key].is_number())
        throw configuration_error(where + ": missing numeric key '" + key + "'");
    return p[key].get<double>();
}

inline int need_int(const json& p, const char* key, const std::string& where)
{
    if (!p.contains(key) || !p[key].is_number_integer())
        throw configuration_error(where + ": missing integer key '" + key + "'");
    return p[key].get<int>();
}

inline double opt_number(const json& p, const char* key, double fallback)
{
    return p.contains(key) ? p[key].get<double>() : fallback;
}

inline symfun::QuotientIndices indices_of(const json& p, const std::string& where)
{
    symfun::QuotientIndices idx{need_int(p, "n", where), need_int(p, "k", where),
                                need_int(p, "l", where)};
    idx.validate();
    return idx;
}

inline symfun::SpdDiagonal matrix_of(const json& p, int n, const std::string& where)
{
    if (p.contains("a") && p["a"].is_array()) {
        Vec a = p["a"].get<Vec>();
        if (int(a.size()) != n) throw configuration_error(where + ": 'a' has wrong length");
        return symfun::SpdDiagonal::of(std::move(a));
    }
    if (p.contains("a_iso"))
        return symfun::SpdDiagonal::isotropic(n, p["a_iso"].get<double>());
    throw configuration_error(where + ": need 'a' (array) or 'a_iso' (number)");
}

inline construct::SourceEnvelope envelope_of(const json& p, const std::string& where)
{
    const double C0 = opt_number(p, "C0", 0.0);
    const double beta = opt_number(p, "beta", 4.0);
    const double s0 = opt_number(p, "s0", 2.0);
    return construct::SourceEnvelope::power_law(C0, beta, s0);
}

inline std::function<double(std::span<const double>)> phi_of(const json& p,
                                                             const std::string& where)
{
    if (!p.contains("phi")) return [](std::span<const double>) { return 0.0; };
    const json& ph = p["phi"];
    const std::string type = ph.value("type", "zero");
    if (type == "zero") return [](std::span<const double>) { return 0.0; };
    if (type == "const") {
        const double v = ph.value("value", 0.0);
        return [v](std::span<const double>) { return v; };
    }
    if (type == "linear") {
        Vec coeffs = ph["coeffs"].get<Vec>();
        return [coeffs](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size() && i < coeffs.size(); ++i) s += coeffs[i] * x[i];
            return s;
        };
    }
    throw configuration_error(where + ": unknown phi type '" + type + "'");
}

inline std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw configuration_error("cannot open output file " + path.string());
    os << text;
}

inline void write_json(const std::filesystem::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

/// CSV of sampled profile data, 17 significant digits.
inline std::string profile_csv(const Vec& s, const std::vector<Vec>& columns,
                               const std::string& header)
{
    std::ostringstream os;
    os << header << "\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << format_double(s[i]);
        for (const Vec& col : columns) os << ',' << format_double(col[i]);
        os << "\n";
    }
    return os.str();
}

} // namespace detail

inline RunConfig RunConfig::parse(const json& j, bool strict)
{
    if (!j.is_object()) throw configuration_error("config root must be a JSON object");
    detail::check_keys(j, {"command", "seed", "params"}, "config root", strict);
    RunConfig cfg;
    cfg.strict = strict;
    if (!j.contains("command") || !j["command"].is_string())
        throw configuration_error("config requires a string 'command'");
    cfg.command = j["command"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw configuration_error("'params' must be an object");
        cfg.params = j["params"];
    }
    return cfg;
}

int run(const RunConfig& cfg, const std::filesystem::path& out_dir);

namespace detail {

inline int cmd_check_matrix(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p, {"n", "k", "l", "a", "a_iso"}, "check-matrix params", cfg.strict);
    const auto idx = indices_of(p, "check-matrix");
    const auto A = matrix_of(p, idx.n, "check-matrix");
    const symfun::Membership m = symfun::membership(idx, A);
    json j{{"n", idx.n},
           {"k", idx.k},
           {"l", idx.l},
           {"a", A.a},
           {"S_kl", m.quotient},
           {"H_k", m.h_k},
           {"h_l", m.h_l},
           {"c_star", symfun::c_star(idx)},
           {"in_A", m.in_A},
           {"in_script_A", m.in_script_A},
           {"in_tilde_A", m.in_tilde_A},
           {"index_condition", symfun::index_condition_holds(idx)}};
    write_json(out / "check_matrix.json", j);
    return exit_ok;
}

inline int cmd_construct_sub(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p,
               {"n", "k", "l", "a", "a_iso", "C0", "beta", "s0", "c1", "c2", "c", "m_s0",
                "samples"},
               "construct-sub params", cfg.strict);
    const auto idx = indices_of(p, "construct-sub");
    const auto A = matrix_of(p, idx.n, "construct-sub");
    const auto env = envelope_of(p, "construct-sub");

    double c1, c2;
    if (p.contains("c1")) {
        c1 = p["c1"].get<double>();
        c2 = opt_number(p, "c2", 0.0);
    } else if (p.contains("c")) {
        c2 = opt_number(p, "m_s0", 0.0);
        c1 = construct::invert_c1(idx, A, env, c2, p["c"].get<double>());
    } else {
        throw configuration_error("construct-sub: need 'c1' or 'c'");
    }
    construct::SubFamily f(idx, A, env, c1, c2);
    write_json(out / "family.json", f.to_json());

    double s_lo = env.s0, s_hi = 100.0 * env.s0;
    std::size_t count = 200;
    if (p.contains("samples")) {
        const json& sm = p["samples"];
        check_keys(sm, {"s_lo", "s_hi", "count"}, "construct-sub samples", cfg.strict);
        s_lo = opt_number(sm, "s_lo", s_lo);
        s_hi = opt_number(sm, "s_hi", s_hi);
        count = std::size_t(opt_number(sm, "count", double(count)));
    }
    const Vec grid = geomspace(s_lo, s_hi, count);
    Vec w(count), w1(count), w2(count), res(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto d = f.w_prime(grid[i]);
        w[i] = f.value(grid[i]);
        w1[i] = d.w1;
        w2[i] = d.w2;
        res[i] = f.ode_residual(grid[i]);
    }
    write_text(out / "profile.csv", profile_csv(grid, {w, w1, w2, res}, "s,w,w1,w2,residual"));

    const construct::FamilyCertificate cert = construct::certify_subsolution(f, cfg.seed);
    write_json(out / "certificate.json", cert.to_json());
    return cert.pass ? exit_ok : exit_certificate_fail;
}

inline int cmd_construct_super(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p, {"n", "k", "l", "a", "a_iso", "C0", "beta", "s0", "c2", "c", "samples"},
               "construct-super params", cfg.strict);
    const auto idx = indices_of(p, "construct-super");
    const auto A = matrix_of(p, idx.n, "construct-super");
    const auto env = envelope_of(p, "construct-super");

    double c2;
    if (p.contains("c2"))
        c2 = p["c2"].get<double>();
    else if (p.contains("c"))
        c2 = construct::SuperFamily::c2_for(idx, A, env, p["c"].get<double>());
    else
        throw configuration_error("construct-super: need 'c2' or 'c'");
    construct::SuperFamily f(idx, A, env, c2);
    write_json(out / "family.json", f.to_json());

    double s_lo = 1.0 + 1e-6, s_hi = 100.0 * env.s0;
    std::size_t count = 200;
    if (p.contains("samples")) {
        const json& sm = p["samples"];
        check_keys(sm, {"s_lo", "s_hi", "count"}, "construct-super samples", cfg.strict);
        s_lo = opt_number(sm, "s_lo", s_lo);
        s_hi = opt_number(sm, "s_hi", s_hi);
        count = std::size_t(opt_number(sm, "count", double(count)));
    }
    const Vec grid = geomspace(s_lo, s_hi, count);
    Vec w(count), w1(count), w2(count), res(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto e = f.at(grid[i]);
        w[i] = e.w;
        w1[i] = e.w1;
        w2[i] = e.w2;
        res[i] = f.ode_residual(grid[i]);
    }
    write_text(out / "profile.csv", profile_csv(grid, {w, w1, w2, res}, "s,w,w1,w2,residual"));

    const construct::FamilyCertificate cert = construct::certify_supersolution(f, cfg.seed);
    write_json(out / "certificate.json", cert.to_json());
    return cert.pass ? exit_ok : exit_certificate_fail;
}

inline barrier::ExteriorProblem exterior_of(const RunConfig& cfg, const std::string& where)
{
    const json& p = cfg.params;
    const auto idx = indices_of(p, where);
    barrier::ExteriorProblem prob;
    prob.idx = idx;
    prob.A = matrix_of(p, idx.n, where);
    if (!p.contains("axes") || !p["axes"].is_array())
        throw configuration_error(where + ": need ellipsoid 'axes'");
    prob.D.axes = p["axes"].get<Vec>();
    if (int(prob.D.axes.size()) != idx.n)
        throw configuration_error(where + ": 'axes' has wrong length");
    prob.phi = phi_of(p, where);
    prob.env = envelope_of(p, where);
    prob.G_sup = opt_number(p, "G_sup", 0.0);
    if (prob.G_sup <= 0.0) {
        // power-law sources are decreasing in s; the supremum sits on the boundary shell
        double g_max = 1.0;
        for (double s : geomspace(1.0, 100.0 * prob.env.s0, 257))
            g_max = std::max(g_max, prob.env.g(s));
        prob.G_sup = g_max;
    }
    prob.n_xi = std::size_t(opt_number(p, "n_xi", 512.0));
    prob.seed = cfg.seed;
    return prob;
}

inline int cmd_barriers(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p, {"n", "k", "l", "a", "a_iso", "axes", "phi", "C0", "beta", "s0", "G_sup",
                   "n_xi"},
               "barriers params", cfg.strict);
    const barrier::ExteriorProblem prob = exterior_of(cfg, "barriers");
    const barrier::BarrierEnvelope env = barrier::barrier_envelope(prob);
    const barrier::CStarReport rep = barrier::compute_c_star(prob, env);

    write_json(out / "barriers.json",
               json{{"m_s0", rep.m_s0},
                    {"M_s0", rep.M_s0},
                    {"alpha", rep.alpha},
                    {"mu_alpha", rep.mu_alpha},
                    {"c_star", rep.c_star},
                    {"boundary_max_dev", env.boundary_max_dev},
                    {"n_barriers", env.barriers.size()}});

    // envelope samples along the shell
    std::ostringstream csv;
    for (int i = 0; i < prob.idx.n; ++i) csv << "x" << i << ",";
    csv << "value\n";
    for (const Vec& u : barrier::direction_mesh(prob.idx.n, 64, prob.seed + 4)) {
        for (int j = 0; j < 5; ++j) {
            const double r0 = prob.D.gauge_radius(u);
            const double r1 = barrier::level_set_radius(prob.A, prob.env.s0, u);
            const double r = r0 + (r1 - r0) * double(j) / 4.0;
            Vec x(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) x[i] = r * u[i];
            for (double v : x) csv << format_double(v) << ',';
            csv << format_double(env.value(x)) << "\n";
        }
    }
    write_text(out / "envelope.csv", csv.str());
    return exit_ok;
}

inline int cmd_solve_radial(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p, {"n", "k", "l", "a_iso", "s_in", "s_out", "N", "g", "bc"},
               "solve-radial params", cfg.strict);
    const auto idx = indices_of(p, "solve-radial");
    radial::RadialProblem prob;
    prob.idx = idx;
    prob.a = need_number(p, "a_iso", "solve-radial");
    prob.s_in = need_number(p, "s_in", "solve-radial");
    prob.s_out = need_number(p, "s_out", "solve-radial");
    const int N = need_int(p, "N", "solve-radial");

    if (!p.contains("g")) throw configuration_error("solve-radial: need 'g'");
    const json& gj = p["g"];
    check_keys(gj, {"type", "C0", "beta"}, "solve-radial g", cfg.strict);
    const std::string gtype = gj.value("type", "one");
    if (gtype == "one") {
        prob.g = [](double) { return 1.0; };
    } else if (gtype == "power") {
        const double C0 = gj.value("C0", 0.0);
        const double beta = gj.value("beta", 4.0);
        prob.g = [C0, beta](double s) { return 1.0 + C0 * std::pow(s, -beta / 2.0); };
    } else {
        throw configuration_error("solve-radial: unknown g type '" + gtype + "'");
    }

    if (!p.contains("bc")) throw configuration_error("solve-radial: need 'bc'");
    const json& bc = p["bc"];
    check_keys(bc, {"in", "out"}, "solve-radial bc", cfg.strict);
    prob.bc_in = need_number(bc, "in", "solve-radial bc");
    prob.bc_out = need_number(bc, "out", "solve-radial bc");

    try {
        const radial::RadialSolution sol = radial::solve_bvp(prob, N);
        std::ostringstream csv;
        radial::write_solution_csv(csv, sol);
        write_text(out / "solution.csv", csv.str());
        write_json(out / "convergence.json", sol.log_json());
        return exit_ok;
    } catch (const numerical_error& e) {
        write_json(out / "convergence.json", json{{"error", e.what()}});
        return exit_numerical;
    }
}

inline int cmd_sandwich(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p, {"n", "k", "l", "a", "a_iso", "axes", "phi", "C0", "beta", "s0", "G_sup",
                   "n_xi", "c", "N", "s_out"},
               "sandwich params", cfg.strict);
    const barrier::ExteriorProblem prob = exterior_of(cfg, "sandwich");
    double a_iso = prob.A.a.front();
    for (double v : prob.A.a)
        if (std::abs(v - a_iso) > 1e-12)
            throw configuration_error("sandwich: radial certification needs isotropic a");

    const barrier::BarrierEnvelope envb = barrier::barrier_envelope(prob);
    const barrier::CStarReport rep = barrier::compute_c_star(prob, envb);
    const double c = opt_number(p, "c", rep.c_star + 1.0);
    const barrier::SplicedSubsolution spliced =
        barrier::splice_subsolution(prob, envb, rep, c);

    const double c2 = construct::SuperFamily::c2_for(prob.idx, prob.A, prob.env, c);
    construct::SuperFamily sup(prob.idx, prob.A, prob.env, c2);

    radial::RadialProblem rp;
    rp.idx = prob.idx;
    rp.a = a_iso;
    rp.s_in = prob.env.s0;
    rp.s_out = opt_number(p, "s_out", 100.0 * prob.env.s0);
    rp.g = [env = prob.env](double s) { return env.g(s); };
    rp.bc_in = spliced.sub.value(rp.s_in);
    rp.bc_out = rp.s_out + c;
    rp.initial = [f = spliced.sub](double s) { return f.value(s); };
    const int N = int(opt_number(p, "N", 24000.0));

    try {
        const radial::RadialSolution sol = radial::solve_bvp(rp, N);
        const radial::SandwichCertificate cert =
            radial::sandwich_certify(rp, sol, spliced.sub, sup);
        std::ostringstream csv;
        radial::write_solution_csv(csv, sol, &spliced.sub, &sup);
        write_text(out / "sandwich.csv", csv.str());
        json j = cert.to_json();
        j["c"] = c;
        j["c_star"] = rep.c_star;
        j["m_s0"] = rep.m_s0;
        j["M_s0"] = rep.M_s0;
        j["s_bar"] = spliced.s_bar;
        j["c1"] = spliced.sub.c1();
        j["c2"] = c2;
        write_json(out / "certificate.json", j);
        return cert.verdict == viscosity::Verdict::PASS ? exit_ok : exit_certificate_fail;
    } catch (const numerical_error& e) {
        write_json(out / "certificate.json", json{{"error", e.what()}});
        return exit_numerical;
    }
}

inline int cmd_asymptotics(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p, {"n", "k", "l", "a", "a_iso", "C0", "beta", "s0", "c1", "c2", "kind"},
               "asymptotics params", cfg.strict);
    const auto idx = indices_of(p, "asymptotics");
    const auto A = matrix_of(p, idx.n, "asymptotics");
    const auto env = envelope_of(p, "asymptotics");
    const std::string kind = p.value("kind", "sub");

    construct::AsymptoticCertificate cert;
    double H;
    if (kind == "sub") {
        construct::SubFamily f(idx, A, env, need_number(p, "c1", "asymptotics"),
                               opt_number(p, "c2", 0.0));
        cert = construct::asymptotic_certificate(f);
        H = f.script_exponent();
    } else if (kind == "super") {
        construct::SuperFamily f(idx, A, env, opt_number(p, "c2", 0.0));
        cert = construct::asymptotic_certificate(f);
        H = f.script_exponent();
    } else {
        throw configuration_error("asymptotics: kind must be 'sub' or 'super'");
    }
    write_json(out / "asymptotics.json",
               json{{"exponent_fit", cert.exponent_fit},
                    {"predicted", 1.0 - std::min(env.beta / 2.0, H)},
                    {"log_case", cert.log_case},
                    {"exact_flag", cert.exact_flag},
                    {"max_weighted_err", cert.max_weighted_err},
                    {"fit_residual", cert.fit_residual}});
    return exit_ok;
}

inline int cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out)
{
    const json& p = cfg.params;
    check_keys(p, {"runs"}, "sweep params", cfg.strict);
    if (!p.contains("runs") || !p["runs"].is_array())
        throw configuration_error("sweep: need 'runs' array");
    const json& runs = p["runs"];

    std::size_t workers = std::thread::hardware_concurrency();
    if (const char* env_threads = std::getenv("HQ_THREADS")) {
        const long parsed = std::strtol(env_threads, nullptr, 10);
        if (parsed > 0) workers = std::size_t(parsed);
    }
    workers = std::max<std::size_t>(1, std::min(workers, runs.size()));

    std::vector<int> codes(runs.size(), exit_ok);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) break;
            char name[32];
            std::snprintf(name, sizeof(name), "run-%03zu", i);
            const std::filesystem::path run_dir = out / name;
            std::filesystem::create_directories(run_dir);
            try {
                RunConfig sub = RunConfig::parse(runs[i], cfg.strict);
                if (!runs[i].contains("seed")) sub.seed = cfg.seed + i;
                codes[i] = run(sub, run_dir);
            } catch (const configuration_error&) {
                codes[i] = exit_config_error;
            } catch (const std::exception&) {
                codes[i] = exit_numerical;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    int worst = exit_ok;
    for (int c : codes) worst = std::max(worst, c);
    write_json(out / "sweep.json", json{{"codes", codes}, {"runs", runs.size()}});
    return worst;
}

} // namespace detail

/// Execute one command; artifacts land in out_dir, which is created.
/// A manifest echoing the resolved configuration is always written.
inline int run(const RunConfig& cfg, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    json manifest{{"command", cfg.command}, {"seed", cfg.seed}, {"params", cfg.params},
                  {"strict", cfg.strict}};
    detail::write_json(out_dir / "manifest.json", manifest);

    try {
        if (cfg.command == "check-matrix") return detail::cmd_check_matrix(cfg, out_dir);
        if (cfg.command == "construct-sub") return detail::cmd_construct_sub(cfg, out_dir);
        if (cfg.command == "construct-super") return detail::cmd_construct_super(cfg, out_dir);
        if (cfg.command == "barriers") return detail::cmd_barriers(cfg, out_dir);
        if (cfg.command == "solve-radial") return detail::cmd_solve_radial(cfg, out_dir);
        if (cfg.command == "sandwich") return detail::cmd_sandwich(cfg, out_dir);
        if (cfg.command == "asymptotics") return detail::cmd_asymptotics(cfg, out_dir);
        if (cfg.command == "sweep") return detail::cmd_sweep(cfg, out_dir);
        throw configuration_error("unknown command '" + cfg.command + "'");
    } catch (const configuration_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const nonconvergence_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    }
}

} // namespace hq::cli
