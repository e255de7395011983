#include "synq/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synq/errors.hpp"
#include "synq/model_io.hpp"
#include "synq/psi.hpp"
#include "synq/simulation.hpp"
#include "synq/steady_state.hpp"
#include "synq/verify.hpp"

namespace synq {

using nlohmann::json;

namespace {

Vector parse_vector(const std::string& text, const std::string& what) {
    Vector out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(what + ": not a number: '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + ": empty vector");
    return out;
}

/// Rows of comma-separated numbers; a non-numeric first line is a header.
std::vector<Vector> read_alpha_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open alpha file " + path);
    std::vector<Vector> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            rows.push_back(parse_vector(line, path));
        } catch (const ConfigError&) {
            if (!first) throw;
        }
        first = false;
    }
    return rows;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void csv_header(std::ostream& out, std::size_t n, bool factors) {
    for (std::size_t i = 1; i <= n; ++i) out << "alpha_" << i << ',';
    out << "value";
    if (factors)
        for (std::size_t i = 1; i <= n; ++i) out << ",factor_" << i;
    out << '\n';
}

json estimates(const std::vector<Estimate>& es) {
    json a = json::array();
    for (const auto& e : es) {
        a.push_back({{"value", e.value}, {"se", std::isfinite(e.se) ? json(e.se) : json(nullptr)}});
    }
    return a;
}

struct Options {
    std::string model_path;
    // phi / lst / decompose
    std::string alpha;
    std::string alpha_file;
    std::string space = "W";
    // psi
    std::size_t k = 1;
    std::string tail;
    // check-identity
    std::string grid = "0.5,1,2,5";
    // simulate / priority-check / verify
    double horizon = 5000.0;
    int replications = 200;
    std::optional<std::uint64_t> seed;
    double step = 0.01;
    double burn_in = 0.5;
    int threads = 0;
    std::vector<std::string> sim_alphas;
    std::string dump_csv;
    std::string plan_path;
    std::string out_path;
};

ValidatedModel load(const Options& o) { return validate(load_model(o.model_path)); }

SimConfig sim_config(const Options& o) {
    SimConfig c;
    c.horizon = o.horizon;
    c.replications = o.replications;
    c.seed = o.seed.value_or(42);
    c.step = o.step;
    c.burn_in_fraction = o.burn_in;
    c.threads = o.threads;
    return c;
}

std::vector<Vector> alpha_points(const Options& o) {
    if (!o.alpha_file.empty()) return read_alpha_file(o.alpha_file);
    if (o.alpha.empty()) throw ConfigError("--alpha or --alpha-file is required");
    return {parse_vector(o.alpha, "--alpha")};
}

int cmd_validate(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    const MomentTable& t = m.moments();
    out << json{{"valid", true},
                {"n", m.n()},
                {"stable", m.stable()},
                {"mean", t.mean},
                {"cumulative_mean", t.cumulative_mean},
                {"cov", t.cov}}
               .dump(2)
        << '\n';
    return kExitOk;
}

int cmd_phi(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    const Vector v = parse_vector(o.alpha, "--alpha");
    out << json{{"alpha", v}, {"phi", phi(m, v)}}.dump(2) << '\n';
    return kExitOk;
}

int cmd_psi(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    PsiQuery q;
    q.k = o.k;
    q.alpha_tail = parse_vector(o.tail, "--tail");
    const PsiResult r = psi(m, q);
    out << json{{"k", q.k},
                {"tail", q.alpha_tail},
                {"beta", r.beta},
                {"residual", r.residual},
                {"bracket", r.bracket},
                {"iterations", r.iterations}}
               .dump(2)
        << '\n';
    return kExitOk;
}

Space parse_space(const std::string& s) {
    if (s == "W" || s == "w") return Space::W;
    if (s == "Z" || s == "z") return Space::Z;
    throw ConfigError("--space must be W or Z");
}

int cmd_lst(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    const Space space = parse_space(o.space);
    const auto points = alpha_points(o);
    if (o.alpha_file.empty()) {
        const double v = lst(m, AlphaVector::make(points[0], space));
        out << json{{"space", o.space}, {"alpha", points[0]}, {"value", v}}.dump(2) << '\n';
        return kExitOk;
    }
    csv_header(out, m.n(), false);
    for (const auto& a : points) {
        const double v = lst(m, AlphaVector::make(a, space));
        for (double x : a) out << fmt(x) << ',';
        out << fmt(v) << '\n';
    }
    return kExitOk;
}

int cmd_decompose(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    const auto points = alpha_points(o);
    if (o.alpha_file.empty()) {
        const AlphaVector a = AlphaVector::w_space(points[0]);
        const DecompositionFactors d = decomposition(m, a);
        out << json{{"alpha", points[0]},
                    {"factors", d.factors},
                    {"product", d.product},
                    {"lst_W", lst_W(m, a)}}
                   .dump(2)
            << '\n';
        return kExitOk;
    }
    csv_header(out, m.n(), true);
    for (const auto& a : points) {
        const DecompositionFactors d = decomposition(m, AlphaVector::w_space(a));
        for (double x : a) out << fmt(x) << ',';
        out << fmt(d.product);
        for (double f : d.factors) out << ',' << fmt(f);
        out << '\n';
    }
    return kExitOk;
}

int cmd_moments(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    m.require_stable();
    const WorkloadMoments w = moments_W(m);
    const PsiDerivatives d = psi_derivatives_at_zero(m, 1);
    out << json{{"EW1", w.EW1},
                {"EW2", w.EW2},
                {"EZ2", w.EZ2},
                {"psi1_prime", d.first[0]},
                {"psi1_second", d.second[0][0]}}
               .dump(2)
        << '\n';
    return kExitOk;
}

int cmd_check_identity(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    const Vector grid = parse_vector(o.grid, "--grid");
    const IdentityReport r = decomposition_identity_check(m, grid);
    out << "alpha_2,lhs,rhs,gap\n";
    for (const auto& p : r.points) {
        out << fmt(p.alpha2) << ',' << fmt(p.lhs) << ',' << fmt(p.rhs) << ',' << fmt(p.gap) << '\n';
    }
    return kExitOk;
}

void dump_replications(const std::string& path, const SimEstimate& s) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "replication,estimator,value\n";
    for (std::size_t r = 0; r < s.replications.size(); ++r) {
        const ReplicationSummary& rs = s.replications[r];
        auto emit = [&](const char* name, const Vector& v) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                f << r << ',' << name << '_' << (i + 1) << ',' << fmt(v[i]) << '\n';
            }
        };
        emit("time_avg_Z", rs.time_avg_Z);
        emit("time_avg_W", rs.time_avg_W);
        emit("final_Z", rs.final_Z);
        emit("lst", rs.lst);
    }
}

int cmd_simulate(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    SimConfig c = sim_config(o);
    std::vector<Vector> alphas;
    for (const auto& s : o.sim_alphas) {
        alphas.push_back(parse_vector(s, "--alpha"));
        c.alpha_grid.push_back(AlphaVector::w_space(alphas.back()));
    }
    const SimEstimate s = simulate(m, c);
    json lsts = json::array();
    for (std::size_t g = 0; g < alphas.size(); ++g) {
        const Estimate& e = s.lst_values[g];
        lsts.push_back({{"alpha", alphas[g]},
                        {"value", e.value},
                        {"se", std::isfinite(e.se) ? json(e.se) : json(nullptr)}});
    }
    json j = {{"mode", m.model().sigma == 0.0 ? "event-driven" : "grid"},
              {"horizon", c.horizon},
              {"replications", c.replications},
              {"seed", c.seed},
              {"mean_Z", estimates(s.mean_Z)},
              {"mean_W", estimates(s.mean_W)},
              {"ensemble_Z", estimates(s.ensemble_Z)},
              {"lst", lsts},
              {"ordering_violations", s.ordering_violations},
              {"reflection_violations", s.reflection_violations},
              {"events", s.events}};
    if (s.warning) j["warning"] = *s.warning;
    out << j.dump(2) << '\n';
    if (!o.dump_csv.empty()) dump_replications(o.dump_csv, s);
    return kExitOk;
}

int cmd_priority_check(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    const SimConfig c = sim_config(o);
    const SimEstimate oracle = priority_oracle(m, c);
    const SimEstimate fluid = simulate(m, c);
    json z = json::array();
    bool ok = true;
    for (std::size_t k = 0; k < m.n(); ++k) {
        const double se = std::hypot(fluid.mean_Z[k].se, oracle.mean_Z[k].se);
        const double score = std::abs(fluid.mean_Z[k].value - oracle.mean_Z[k].value) / se;
        ok = ok && score <= 3.0;
        z.push_back(std::isfinite(score) ? json(score) : json(nullptr));
    }
    out << json{{"status", ok ? "pass" : "fail"},
                {"tolerance", 3.0},
                {"simulate_mean_Z", estimates(fluid.mean_Z)},
                {"priority_mean_Z", estimates(oracle.mean_Z)},
                {"z", z}}
               .dump(2)
        << '\n';
    return ok ? kExitOk : kExitVerify;
}

int cmd_verify(const Options& o, std::ostream& out) {
    const ValidatedModel m = load(o);
    VerifyPlan plan;
    if (o.plan_path.empty()) {
        plan = default_plan(m);
    } else {
        std::ifstream in(o.plan_path);
        if (!in) throw ConfigError("cannot open plan file " + o.plan_path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("plan: invalid JSON: ") + e.what());
        }
        plan = plan_from_json(j, m);
    }
    if (o.seed) plan.sim.seed = *o.seed;
    if (o.threads > 0) plan.sim.threads = o.threads;
    const VerifyReport r = run(m, plan);
    const std::string text = report_to_json(r).dump(2) + "\n";
    if (o.out_path.empty()) {
        out << text;
    } else {
        std::ofstream f(o.out_path);
        if (!f) throw ConfigError("cannot write " + o.out_path);
        f << text;
    }
    return r.pass ? kExitOk : kExitVerify;
}

void describe(const ValidationError& e, std::ostream& err) {
    err << "error: model violates structural assumptions\n";
    for (const auto& v : e.violations()) {
        err << "  " << to_string(v.kind);
        if (v.coordinate > 0) err << " (coordinate " << v.coordinate << ")";
        err << ": " << v.detail << '\n';
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Steady-state workload of synchronized Levy-driven fluid queues", "synq"};
    app.require_subcommand(1);
    Options o;

    auto with_model = [&](CLI::App* sub) {
        sub->add_option("-m,--model", o.model_path, "model JSON file")->required();
        return sub;
    };
    auto with_sim = [&](CLI::App* sub) {
        sub->add_option("--horizon", o.horizon, "simulated time per replication");
        sub->add_option("--replications", o.replications, "number of replications");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--step", o.step, "grid width when sigma > 0");
        sub->add_option("--burn-in", o.burn_in, "discarded fraction of the horizon");
        sub->add_option("--threads", o.threads, "worker threads (default SYNQ_THREADS or all cores)");
        return sub;
    };

    auto* validate_cmd = with_model(app.add_subcommand("validate", "check a model file"));
    auto* phi_cmd = with_model(app.add_subcommand("phi", "Laplace exponent phi(v)"));
    phi_cmd->add_option("--alpha", o.alpha, "argument v, comma-separated")->required();
    auto* psi_cmd = with_model(app.add_subcommand("psi", "root psi_k(tail)"));
    psi_cmd->add_option("-k", o.k, "level k")->required();
    psi_cmd->add_option("--tail", o.tail, "alpha_{k+1},...,alpha_n")->required();
    auto* lst_cmd = with_model(app.add_subcommand("lst", "stationary LST"));
    lst_cmd->add_option("--space", o.space, "W or Z")->default_val("W");
    auto* lst_alpha = lst_cmd->add_option("--alpha", o.alpha, "argument, comma-separated");
    lst_cmd->add_option("--alpha-file", o.alpha_file, "CSV grid of arguments")->excludes(lst_alpha);
    auto* dec_cmd = with_model(app.add_subcommand("decompose", "product-form factors (W-space)"));
    auto* dec_alpha = dec_cmd->add_option("--alpha", o.alpha, "argument, comma-separated");
    dec_cmd->add_option("--alpha-file", o.alpha_file, "CSV grid of arguments")->excludes(dec_alpha);
    auto* mom_cmd = with_model(app.add_subcommand("moments", "E W_1*, E W_2*, E Z_2* (n = 2)"));
    auto* id_cmd = with_model(app.add_subcommand("check-identity", "excess decomposition of W_2*"));
    id_cmd->add_option("--grid", o.grid, "alpha_2 values, comma-separated");
    auto* sim_cmd = with_sim(with_model(app.add_subcommand("simulate", "Monte Carlo estimates")));
    sim_cmd->add_option("--alpha", o.sim_alphas, "W-space LST argument (repeatable)");
    sim_cmd->add_option("--dump-csv", o.dump_csv, "per-replication summaries");
    auto* prio_cmd = with_sim(with_model(
        app.add_subcommand("priority-check", "compare with the preemptive priority queue")));
    auto* ver_cmd = with_model(app.add_subcommand("verify", "run a verification plan"));
    ver_cmd->add_option("--plan", o.plan_path, "plan JSON (default plan if omitted)");
    ver_cmd->add_option("--seed", o.seed, "overrides the plan seed");
    ver_cmd->add_option("--threads", o.threads, "worker threads");
    ver_cmd->add_option("--out", o.out_path, "write the report here instead of stdout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitModelError;
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(o, out);
        if (phi_cmd->parsed()) return cmd_phi(o, out);
        if (psi_cmd->parsed()) return cmd_psi(o, out);
        if (lst_cmd->parsed()) return cmd_lst(o, out);
        if (dec_cmd->parsed()) return cmd_decompose(o, out);
        if (mom_cmd->parsed()) return cmd_moments(o, out);
        if (id_cmd->parsed()) return cmd_check_identity(o, out);
        if (sim_cmd->parsed()) return cmd_simulate(o, out);
        if (prio_cmd->parsed()) return cmd_priority_check(o, out);
        if (ver_cmd->parsed()) return cmd_verify(o, out);
    } catch (const ValidationError& e) {
        describe(e, err);
        return kExitModelError;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitModelError;
    }
    return kExitModelError;
}

}  // namespace synq
