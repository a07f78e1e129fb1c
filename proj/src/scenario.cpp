#include "nldiff/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "output.hpp"

namespace nldiff::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) bad("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        bad("invalid JSON in " + where + ": " + e.what());
    }
}

double real(const json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
        if (s == "-inf" || s == "-infinity") return -kInf;
    }
    bad(what + " must be a number");
}

double real_or(const json& obj, const char* key, double fallback) {
    return obj.contains(key) ? real(obj.at(key), key) : fallback;
}

std::size_t index(const json& j, std::size_t n, const std::string& what) {
    if (!j.is_number_integer() || j.get<long long>() < 0 || std::size_t(j.get<long long>()) >= n)
        bad(what + " must be a node index in [0, " + std::to_string(n) + ")");
    return std::size_t(j.get<long long>());
}

Vec vector(const json& j, std::size_t n, const std::string& what) {
    if (j.is_number()) return Vec(n, j.get<double>());
    if (!j.is_array() || j.size() != n) bad(what + " must be a number or an array of " + std::to_string(n) + " numbers");
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = real(j[i], what);
    return v;
}

NodeSet nodes(const json& j, std::size_t n, const std::string& what) {
    if (!j.is_array()) bad(what + " must be an array of node indices");
    std::vector<std::size_t> ids;
    for (const auto& e : j) ids.push_back(index(e, n, what));
    return NodeSet(ids);
}

FiniteRandomWalkSpace graph_from_json(const json& g) {
    if (!g.contains("nodes") || !g.contains("edges")) bad("graph needs \"nodes\" and \"edges\"");
    auto n = g.at("nodes").get<long long>();
    if (n <= 0) bad("graph needs at least one node");
    std::vector<Triplet> edges;
    for (const auto& e : g.at("edges")) {
        if (!e.is_array() || e.size() != 3) bad("each edge must be [i, j, w]");
        edges.push_back({index(e[0], std::size_t(n), "edge endpoint"), index(e[1], std::size_t(n), "edge endpoint"),
                         real(e[2], "edge weight")});
    }
    return FiniteRandomWalkSpace::from_edges(std::size_t(n), edges);
}

FiniteRandomWalkSpace graph_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) bad("empty graph CSV");
    line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
    if (line != "i,j,w") bad("graph CSV header must be i,j,w");
    std::vector<Triplet> edges;
    std::size_t n = 0;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream cells(line);
        std::string a, b, c;
        if (!std::getline(cells, a, ',') || !std::getline(cells, b, ',') || !std::getline(cells, c))
            bad("graph CSV row " + std::to_string(row) + " needs three fields");
        try {
            std::size_t pos = 0;
            long long i = std::stoll(a), j = std::stoll(b);
            double w = std::stod(c, &pos);
            if (i < 0 || j < 0) throw std::invalid_argument("negative");
            edges.push_back({std::size_t(i), std::size_t(j), w});
            n = std::max({n, std::size_t(i) + 1, std::size_t(j) + 1});
        } catch (const std::logic_error&) {
            bad("graph CSV row " + std::to_string(row) + " is malformed");
        }
    }
    if (n == 0) bad("graph CSV has no edges");
    return FiniteRandomWalkSpace::from_edges(n, edges);
}

KernelProfile profile_from_json(const json& p) {
    auto type = p.value("type", std::string("indicator"));
    if (type == "indicator") return KernelProfile::indicator(real_or(p, "radius", 1.0), real_or(p, "height", 1.0));
    if (type == "gaussian") return KernelProfile::gaussian(real_or(p, "sigma", 1.0), real_or(p, "cutoff", 3.0));
    if (type == "table") {
        if (!p.contains("r") || !p.contains("j")) bad("table profile needs \"r\" and \"j\"");
        return KernelProfile::table(p.at("r").get<std::vector<double>>(), p.at("j").get<std::vector<double>>());
    }
    bad("unknown kernel profile type " + type);
}

FiniteRandomWalkSpace space_from_json(const json& s, const fs::path& base) {
    if (s.is_string()) return load_graph_file(base / s.get<std::string>());
    if (!s.is_object()) bad("space must be a file name or an object");
    if (s.contains("file")) return load_graph_file(base / s.at("file").get<std::string>());
    if (s.contains("points")) {
        std::vector<std::vector<double>> pts;
        for (const auto& p : s.at("points")) pts.push_back(p.get<std::vector<double>>());
        if (!s.contains("profile")) bad("kernel grid needs a \"profile\"");
        return from_kernel_grid(pts, real_or(s, "spacing", 1.0), profile_from_json(s.at("profile")));
    }
    return graph_from_json(s);
}

Segment segment_from_json(const json& s) {
    if (s.contains("point"))
        return Segment::point(real(s.at("point"), "point"), real(s.at("vlo"), "vlo"), real(s.at("vhi"), "vhi"));
    return Segment::piece(real_or(s, "lo", -kInf), real_or(s, "hi", kInf), real_or(s, "offset", 0.0),
                          real_or(s, "coef", 0.0), real_or(s, "expo", 1.0), real_or(s, "center", 0.0));
}

MonotoneGraph graph_from(const json& g) {
    if (g.is_string()) return graph_from(json{{"type", g}});
    auto type = g.value("type", std::string());
    if (type == "identity") return MonotoneGraph::identity();
    if (type == "zero") return MonotoneGraph::zero();
    if (type == "stefan") return MonotoneGraph::stefan(real_or(g, "latent", 1.0));
    if (type == "hele_shaw") return MonotoneGraph::hele_shaw();
    if (type == "power") return MonotoneGraph::power(real_or(g, "s", 2.0));
    if (type == "obstacle") {
        auto inner = g.contains("inner") ? graph_from(g.at("inner")) : MonotoneGraph::identity();
        return MonotoneGraph::obstacle(real_or(g, "lo", -kInf), real_or(g, "hi", kInf), inner);
    }
    if (type == "piecewise") {
        std::vector<Segment> segs;
        for (const auto& s : g.at("segments")) segs.push_back(segment_from_json(s));
        return MonotoneGraph(segs);
    }
    bad("unknown graph type \"" + type + "\"");
}

LerayLionsFlux flux_from(const json& f, std::size_t n) {
    double p = real_or(f, "p", 2.0);
    auto kind = f.value("kind", std::string("p_laplacian"));
    if (kind == "p_laplacian") return LerayLionsFlux::p_laplacian(p);
    if (kind == "weighted") {
        if (!f.contains("phi")) bad("weighted flux needs \"phi\"");
        return LerayLionsFlux::weighted(p, vector(f.at("phi"), n, "flux phi"));
    }
    bad("unknown flux kind \"" + kind + "\"");
}

Source source_from(const json& s, std::size_t n, const std::string& what) {
    if (s.is_null()) return Source::zero(n);
    if (s.is_number() || s.is_array()) return Source::constant(vector(s, n, what));
    if (s.contains("constant")) return Source::constant(vector(s.at("constant"), n, what));
    if (s.contains("times")) {
        auto times = s.at("times").get<std::vector<double>>();
        std::vector<Vec> rows;
        for (const auto& r : s.at("values")) rows.push_back(vector(r, n, what));
        return Source::table(times, rows);
    }
    bad(what + " must be a vector, {\"constant\": ...} or {\"times\": ..., \"values\": ...}");
}

Source combine(const Source& f, const Source& g, const std::vector<char>& in1, const std::vector<char>& in2) {
    return f.masked(in1).plus(g.masked(in2));
}

json number_json(double x) {
    if (std::isfinite(x)) return x;
    return output::number(x);
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(number_json(x));
    return a;
}

json range_json(const RangeReport& r) {
    return {{"r_minus", number_json(r.r_minus)}, {"r_plus", number_json(r.r_plus)},
            {"integral_phi", r.integral_phi}, {"feasible", r.feasible}, {"margin", number_json(r.margin)}};
}

json compat_json(const CompatibilityReport& c) {
    return {{"passed", c.passed}, {"first_violation_time", c.first_violation_time},
            {"min_margin", number_json(c.min_margin)}, {"message", c.message}};
}

struct Scenario {
    json cfg;
    fs::path base;
    std::shared_ptr<const FiniteRandomWalkSpace> space;
    std::size_t n = 0;
    DomainPartition partition;
    LerayLionsFlux flux = LerayLionsFlux::p_laplacian(2.0);
    MonotoneGraph gamma, beta;
    IntegrationSet q = IntegrationSet::Q1;
    std::uint64_t seed = 0;
    json data, solver;

    const json& section(const char* key) const {
        static const json empty = json::object();
        return cfg.contains(key) ? cfg.at(key) : empty;
    }
};

Scenario load(const fs::path& config) {
    Scenario s;
    s.base = config.parent_path();
    s.cfg = parse(slurp(config), config.string());
    if (!s.cfg.is_object()) bad("configuration must be a JSON object");
    if (!s.cfg.contains("space")) bad("configuration needs a \"space\"");
    s.space = std::make_shared<const FiniteRandomWalkSpace>(space_from_json(s.cfg.at("space"), s.base));
    s.n = s.space->node_count();
    s.seed = s.cfg.value("seed", std::uint64_t(0));
    const auto& part = s.section("partition");
    NodeSet o1 = part.contains("omega1") ? nodes(part.at("omega1"), s.n, "omega1") : NodeSet();
    NodeSet o2 = part.contains("omega2") ? nodes(part.at("omega2"), s.n, "omega2") : NodeSet();
    if (!part.contains("omega1") && !part.contains("omega2")) o1 = NodeSet::all(s.n);
    s.partition = DomainPartition(o1, o2);
    if (s.cfg.contains("flux")) s.flux = flux_from(s.cfg.at("flux"), s.n);
    s.gamma = s.cfg.contains("gamma") ? graph_from(s.cfg.at("gamma")) : MonotoneGraph::identity();
    s.beta = s.cfg.contains("beta") ? graph_from(s.cfg.at("beta")) : MonotoneGraph::identity();
    auto qs = s.cfg.value("integration_set", std::string("Q1"));
    if (qs == "Q2") s.q = IntegrationSet::Q2;
    else if (qs != "Q1") bad("integration_set must be Q1 or Q2");
    s.data = s.section("data");
    s.solver = s.section("solver");
    return s;
}

StationaryProblem stationary_problem(const Scenario& s) {
    StationaryProblem p;
    p.space = s.space;
    p.partition = s.partition;
    p.flux = s.flux;
    p.gamma = s.gamma;
    p.beta = s.beta;
    p.integration_set = s.q;
    if (!s.data.contains("phi")) bad("stationary data needs \"phi\"");
    p.phi = vector(s.data.at("phi"), s.n, "phi");
    return p;
}

EvolutionProblem evolution_problem(const Scenario& s) {
    EvolutionProblem e;
    e.space = s.space;
    e.partition = s.partition;
    e.flux = s.flux;
    e.gamma = s.gamma;
    e.beta = s.beta;
    e.integration_set = s.q;
    auto mode = s.cfg.value("mode", std::string("dynamical"));
    if (mode == "dynamical" || mode == "evolve-dynamical") e.mode = EvolutionMode::Dynamical;
    else if (mode == "static" || mode == "static_boundary" || mode == "evolve-static")
        e.mode = EvolutionMode::StaticBoundary;
    else bad("mode must be dynamical or static");
    e.v0 = s.data.contains("v0") ? vector(s.data.at("v0"), s.n, "v0") : Vec(s.n, 0.0);
    e.w0 = s.data.contains("w0") ? vector(s.data.at("w0"), s.n, "w0") : Vec(s.n, 0.0);
    e.horizon = real_or(s.data, "horizon", 1.0);
    auto f = source_from(s.data.value("f", json()), s.n, "f");
    auto g = source_from(s.data.value("g", json()), s.n, "g");
    auto in1 = e.partition.omega1.mask(s.n), in2 = e.partition.omega2.mask(s.n);
    if (e.mode == EvolutionMode::StaticBoundary) std::fill(in2.begin(), in2.end(), 0);
    e.source = combine(f, g, in1, in2);
    return e;
}

struct Run {
    json summary = json::object();
    std::vector<std::string> outputs;
    fs::path out;

    void write(const std::string& name, const std::string& content) {
        output::write_atomic(out / name, content);
        outputs.push_back((out / name).string());
    }
};

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

int do_stationary(const Scenario& s, Run& r) {
    auto p = stationary_problem(s);
    auto range = check_range(p);
    r.summary["range"] = range_json(range);
    if (!range.feasible) {
        r.write("report.json", pretty({{"range", range_json(range)}, {"status", "infeasible"}}));
        return 2;
    }
    SolverOptions opt;
    opt.tol = real_or(s.solver, "tol", 1e-10);
    opt.max_stages = s.solver.value("max_stages", 48);
    auto sol = solve_gp(p, opt);
    auto ver = verify_solution(p, sol, std::max(opt.tol, 1e-9) * 10.0);
    auto en = energy_report(p, sol, s.solver.value("poincare_probes", 100), s.seed);
    output::CsvWriter csv("node,u,v");
    for (auto x : p.omega()) csv.row(x, sol.u[x], sol.v[x]);
    r.write("solution.csv", csv.text());
    json trace = json::array();
    for (const auto& t : sol.schedule_trace) trace.push_back({{"n", t.n}, {"k", t.k}, {"change", number_json(t.change)}});
    json rep = {{"range", range_json(range)},
                {"method", sol.method},
                {"iterations", sol.iterations},
                {"residual_inf", sol.residual_inf},
                {"verify",
                 {{"inclusion", ver.inclusion},
                  {"residual", ver.residual},
                  {"conservation", ver.conservation},
                  {"worst_inclusion_node", ver.worst_inclusion_node},
                  {"worst_residual_node", ver.worst_residual_node},
                  {"passed", ver.passed()}}},
                {"energy",
                 {{"gradient_energy", en.gradient_energy},
                  {"bound", number_json(en.bound)},
                  {"lambda1", number_json(en.lambda1)},
                  {"lambda2", number_json(en.lambda2)},
                  {"within_bound", en.gradient_energy <= en.bound}}},
                {"schedule_trace", trace}};
    r.write("report.json", pretty(rep));
    r.summary["residual_inf"] = sol.residual_inf;
    r.summary["method"] = sol.method;
    r.summary["verified"] = ver.passed();
    return ver.passed() ? 0 : 3;
}

void write_trajectory(const EvolutionProblem& e, const MildSolution& sol, Run& r, json& diag) {
    output::CsvWriter traj("t,node,u,v,w");
    auto omega = e.partition.omega();
    for (const auto& st : sol.states)
        for (auto x : omega) traj.row(st.t, x, st.u[x], st.v[x], st.w[x]);
    r.write("trajectory.csv", traj.text());
    output::CsvWriter mass("t,mass_omega1,mass_omega2,source_integral");
    for (const auto& m : sol.mass_series) mass.row(m.t, m.mass_omega1, m.mass_omega2, m.source_integral);
    r.write("mass.csv", mass.text());
    diag["residuals"] = vec_json(sol.residuals);
    diag["methods"] = sol.methods;
}

int do_evolve(const Scenario& s, Run& r, const EvolutionProblem& e) {
    int probes = s.solver.value("compat_probes", 200);
    auto compat = compatibility_check(e, probes);
    r.summary["compatibility"] = compat_json(compat);
    json diag = {{"compatibility", compat_json(compat)}};
    if (!compat.passed) {
        diag["status"] = "infeasible";
        r.write("diagnostics.json", pretty(diag));
        return 2;
    }
    int steps = s.solver.value("n_steps", 64);
    double tol = real_or(s.solver, "tol", 1e-10);
    auto sol = mild_solve(e, steps, tol);
    write_trajectory(e, sol, r, diag);
    int doublings = s.solver.value("refine_doublings", 0);
    if (doublings > 0) {
        json table = json::array();
        for (auto [n, d] : refine_and_compare(e, steps, doublings)) table.push_back({{"n", n}, {"distance", d}});
        diag["refinement"] = table;
    }
    try {
        auto led = strong_residual(e, sol);
        diag["ledger"] = {{"step_residuals", vec_json(led.step_residuals)},
                          {"energy_series", vec_json(led.energy_series)},
                          {"energy_initial", led.energy_initial},
                          {"energy_final", led.energy_final},
                          {"dissipation", led.dissipation},
                          {"source_work", led.source_work},
                          {"gap", led.gap},
                          {"holds", led.holds}};
    } catch (const Error& err) {
        diag["ledger"] = {{"skipped", err.what()}};
    }
    r.write("diagnostics.json", pretty(diag));
    double worst = 0.0;
    for (double x : sol.residuals) worst = std::max(worst, x);
    r.summary["steps"] = steps;
    r.summary["max_residual"] = worst;
    r.summary["final_mass"] = sol.mass_series.back().mass_omega1 + sol.mass_series.back().mass_omega2;
    return 0;
}

int do_dtn(const Scenario& s, Run& r) {
    if (!s.data.contains("W")) bad("dtn data needs the interior set \"W\"");
    auto w = nodes(s.data.at("W"), s.n, "W");
    auto bdry = m_boundary(*s.space, w);
    bool any = false;
    if (s.data.contains("f_boundary")) {
        auto full = vector(s.data.at("f_boundary"), s.n, "f_boundary");
        Vec fb;
        for (auto x : bdry) fb.push_back(full[x]);
        auto out = dtn_apply(*s.space, w, s.flux, fb);
        output::CsvWriter csv("node,f,n1");
        for (std::size_t i = 0; i < fb.size(); ++i) csv.row(bdry.ids()[i], fb[i], out[i]);
        r.write("dtn.csv", csv.text());
        any = true;
    }
    if (s.data.contains("w0") || s.data.contains("g")) {
        auto w0 = s.data.contains("w0") ? vector(s.data.at("w0"), s.n, "w0") : Vec(s.n, 0.0);
        auto g = source_from(s.data.value("g", json()), s.n, "g");
        auto e = dtn_problem(s.space, w, s.flux, g, w0, real_or(s.data, "horizon", 1.0));
        return do_evolve(s, r, e);
    }
    if (!any) bad("dtn data needs \"f_boundary\" or evolution data (\"w0\", \"g\")");
    return 0;
}

int do_check(const Scenario& s, Run& r) {
    json checks = json::object();
    bool structural = true, feasible = true;
    auto omega = s.partition.omega();
    double numax = *std::max_element(s.space->nu().begin(), s.space->nu().end());
    bool rev = s.space->reversibility_defect() <= 1e-12 * numax && s.space->max_row_defect() <= 1e-12;
    checks["reversibility"] = {{"passed", rev}, {"defect", s.space->reversibility_defect()},
                               {"row_defect", s.space->max_row_defect()}};
    structural &= rev;
    bool conn = is_m_connected(*s.space, omega);
    json c = {{"passed", conn}, {"omega", conn ? "m-connected" : "omega is not m-connected"}};
    if (s.q == IntegrationSet::Q2) {
        bool q2 = is_connected_under(*s.space, omega, CouplingSet::q2(s.partition.omega2));
        c["q2"] = q2;
        conn = conn && q2;
        c["passed"] = conn;
    }
    checks["connectivity"] = c;
    structural &= conn;
    if (s.data.contains("phi")) {
        auto range = check_range(stationary_problem(s));
        checks["range"] = range_json(range);
        feasible &= range.feasible;
    }
    if (s.data.contains("v0") || s.data.contains("f")) {
        auto e = evolution_problem(s);
        auto compat = compatibility_check(e, s.solver.value("compat_probes", 200));
        checks["compatibility"] = compat_json(compat);
        feasible &= compat.passed;
    }
    if (conn) {
        auto qs = s.q == IntegrationSet::Q2 ? CouplingSet::q2(s.partition.omega2) : CouplingSet::q1();
        double p = s.flux.p();
        double l = real_or(s.solver, "poincare_l", s.space->measure(omega) / 2.0);
        double est = estimate_poincare_constant(*s.space, omega, qs, p, l, s.solver.value("poincare_probes", 100), s.seed);
        checks["poincare"] = {{"estimate", number_json(est)}, {"l", l}, {"lower_bound", true}};
    }
    r.write("check.json", pretty(checks));
    json failed = json::array();
    for (auto& [k, v] : checks.items())
        if (v.contains("passed") && !v.at("passed").get<bool>()) failed.push_back(k);
        else if (v.contains("feasible") && !v.at("feasible").get<bool>()) failed.push_back(k);
    r.summary["failed"] = failed;
    if (!structural) return 1;
    return feasible ? 0 : 2;
}

}

Command parse_command(const std::string& name) {
    if (name == "stationary") return Command::Stationary;
    if (name == "evolve") return Command::Evolve;
    if (name == "dtn") return Command::Dtn;
    if (name == "check") return Command::Check;
    throw Error(ErrorKind::ConfigError, "unknown command " + name);
}

std::string to_string(Command c) {
    switch (c) {
    case Command::Stationary: return "stationary";
    case Command::Evolve: return "evolve";
    case Command::Dtn: return "dtn";
    case Command::Check: return "check";
    }
    return "?";
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::RangeInfeasible:
    case ErrorKind::CompatibilityViolated: return 2;
    case ErrorKind::SolverDiverged:
    case ErrorKind::NumericalFailure: return 3;
    default: return 1;
    }
}

FiniteRandomWalkSpace load_graph_file(const fs::path& file) {
    auto text = slurp(file);
    if (file.extension() == ".csv") return graph_from_csv(text);
    return space_from_json(parse(text, file.string()), file.parent_path());
}

FiniteRandomWalkSpace parse_space_json(const std::string& text, const fs::path& base) {
    return space_from_json(parse(text, "space"), base);
}

MonotoneGraph parse_graph_json(const std::string& text) { return graph_from(parse(text, "graph")); }

Outcome run(Command command, const fs::path& config, const fs::path& out_dir) {
    Outcome o;
    Run r;
    r.out = out_dir;
    r.summary["command"] = to_string(command);
    r.summary["config"] = config.string();
    const char* status[] = {"ok", "config_error", "infeasible", "solver_failure"};
    try {
        auto s = load(config);
        switch (command) {
        case Command::Stationary: o.exit_code = do_stationary(s, r); break;
        case Command::Evolve: o.exit_code = do_evolve(s, r, evolution_problem(s)); break;
        case Command::Dtn: o.exit_code = do_dtn(s, r); break;
        case Command::Check: o.exit_code = do_check(s, r); break;
        }
        if (o.exit_code == 3) o.diagnostics = "solution failed verification";
    } catch (const Error& e) {
        o.exit_code = exit_code_for(e.kind());
        o.diagnostics = e.what();
        r.summary["error"] = to_string(e.kind());
        r.summary["message"] = e.what();
    } catch (const json::exception& e) {
        o.exit_code = 1;
        o.diagnostics = std::string("configuration: ") + e.what();
        r.summary["error"] = "ConfigError";
        r.summary["message"] = o.diagnostics;
    } catch (const std::exception& e) {
        o.exit_code = 1;
        o.diagnostics = e.what();
        r.summary["error"] = "ConfigError";
        r.summary["message"] = e.what();
    }
    r.summary["status"] = status[o.exit_code];
    r.summary["exit_code"] = o.exit_code;
    r.summary["outputs"] = r.outputs;
    o.summary = r.summary.dump();
    return o;
}

}
