#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "nldiff/evolution.hpp"
#include "nldiff/scenario.hpp"

namespace py = pybind11;
using namespace nldiff;

namespace {

using SpacePtr = std::shared_ptr<const FiniteRandomWalkSpace>;

SpacePtr share(const FiniteRandomWalkSpace& s) { return std::make_shared<const FiniteRandomWalkSpace>(s); }

NodeSet nodes(const std::vector<std::size_t>& ids) { return NodeSet(ids); }

template <class P>
void bind_space_field(py::class_<P>& c) {
    c.def_property(
        "space", [](const P& p) -> py::object { return p.space ? py::cast(*p.space) : py::none(); },
        [](P& p, const FiniteRandomWalkSpace& s) { p.space = share(s); });
}

py::tuple interval(const Interval& i) { return py::make_tuple(i.lo, i.hi); }

}

PYBIND11_MODULE(_nldiff, m) {
    static py::exception<Error> error_type(m, "NldiffError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::handle(error_type.ptr())(e.what());
            err.attr("kind") = to_string(e.kind());
            PyErr_SetObject(error_type.ptr(), err.ptr());
        }
    });

    py::class_<NodeSet>(m, "NodeSet")
        .def(py::init(&nodes), py::arg("ids"))
        .def_static("all", &NodeSet::all)
        .def_property_readonly("ids", &NodeSet::ids)
        .def("contains", &NodeSet::contains)
        .def("__len__", &NodeSet::size)
        .def("__repr__", [](const NodeSet& s) { return "NodeSet(" + py::repr(py::cast(s.ids())).cast<std::string>() + ")"; });

    py::class_<DomainPartition>(m, "DomainPartition")
        .def(py::init([](const std::vector<std::size_t>& o1, const std::vector<std::size_t>& o2) {
                 return DomainPartition(NodeSet(o1), NodeSet(o2));
             }),
             py::arg("omega1"), py::arg("omega2") = std::vector<std::size_t>{})
        .def_readonly("omega1", &DomainPartition::omega1)
        .def_readonly("omega2", &DomainPartition::omega2)
        .def("omega", &DomainPartition::omega);

    py::class_<KernelProfile>(m, "KernelProfile")
        .def_static("indicator", &KernelProfile::indicator, py::arg("radius"), py::arg("height") = 1.0)
        .def_static("gaussian", &KernelProfile::gaussian, py::arg("sigma"), py::arg("cutoff"))
        .def_static("table", &KernelProfile::table, py::arg("r"), py::arg("j"))
        .def("__call__", &KernelProfile::operator());

    py::class_<FiniteRandomWalkSpace>(m, "Space")
        .def_static(
            "from_edges",
            [](std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges) {
                std::vector<Triplet> t;
                for (auto [i, j, w] : edges) t.push_back({i, j, w});
                return FiniteRandomWalkSpace::from_edges(n, t);
            },
            py::arg("n"), py::arg("edges"))
        .def_static("from_kernel_grid", &from_kernel_grid, py::arg("points"), py::arg("spacing"), py::arg("profile"))
        .def_property_readonly("node_count", &FiniteRandomWalkSpace::node_count)
        .def_property_readonly("nu", py::overload_cast<>(&FiniteRandomWalkSpace::nu, py::const_))
        .def("m", &FiniteRandomWalkSpace::m)
        .def("measure", [](const FiniteRandomWalkSpace& s, const std::vector<std::size_t>& a) { return s.measure(NodeSet(a)); })
        .def("reversibility_defect", &FiniteRandomWalkSpace::reversibility_defect);

    m.def("m_boundary", [](const FiniteRandomWalkSpace& s, const std::vector<std::size_t>& w) { return m_boundary(s, NodeSet(w)).ids(); });
    m.def("m_closure", [](const FiniteRandomWalkSpace& s, const std::vector<std::size_t>& w) { return m_closure(s, NodeSet(w)).ids(); });
    m.def("interaction", [](const FiniteRandomWalkSpace& s, const std::vector<std::size_t>& a,
                            const std::vector<std::size_t>& b) { return interaction(s, NodeSet(a), NodeSet(b)); });
    m.def("is_m_connected", [](const FiniteRandomWalkSpace& s, const std::vector<std::size_t>& o) { return is_m_connected(s, NodeSet(o)); });

    py::class_<Segment>(m, "Segment")
        .def_static("point", &Segment::point, py::arg("at"), py::arg("vlo"), py::arg("vhi"))
        .def_static("piece", &Segment::piece, py::arg("lo"), py::arg("hi"), py::arg("offset"), py::arg("coef"),
                    py::arg("expo") = 1.0, py::arg("center") = 0.0);

    py::class_<MonotoneGraph>(m, "MonotoneGraph")
        .def(py::init<std::vector<Segment>>(), py::arg("segments"))
        .def_static("identity", &MonotoneGraph::identity)
        .def_static("zero", &MonotoneGraph::zero)
        .def_static("stefan", &MonotoneGraph::stefan, py::arg("latent"))
        .def_static("hele_shaw", &MonotoneGraph::hele_shaw)
        .def_static("power", &MonotoneGraph::power, py::arg("s"))
        .def_static("obstacle", &MonotoneGraph::obstacle, py::arg("lo"), py::arg("hi"), py::arg("inner"))
        .def("values", [](const MonotoneGraph& g, double r) { return interval(g.values(r)); })
        .def("minimal_section", &MonotoneGraph::minimal_section)
        .def("resolvent", &MonotoneGraph::resolvent, py::arg("mu"), py::arg("s"))
        .def("yosida", &MonotoneGraph::yosida, py::arg("lam"), py::arg("s"))
        .def("primitive", &MonotoneGraph::primitive)
        .def("conjugate", &MonotoneGraph::conjugate)
        .def("inverse", &MonotoneGraph::inverse)
        .def("split_plus", &MonotoneGraph::split_plus)
        .def("split_minus", &MonotoneGraph::split_minus)
        .def("range_bounds", &MonotoneGraph::range_bounds)
        .def("domain", &MonotoneGraph::domain);

    py::class_<LerayLionsFlux>(m, "Flux")
        .def_static("p_laplacian", &LerayLionsFlux::p_laplacian, py::arg("p"))
        .def_static("weighted", &LerayLionsFlux::weighted, py::arg("p"), py::arg("phi"))
        .def_property_readonly("p", &LerayLionsFlux::p)
        .def("value", &LerayLionsFlux::value, py::arg("x"), py::arg("y"), py::arg("r"));

    py::enum_<IntegrationSet>(m, "IntegrationSet").value("Q1", IntegrationSet::Q1).value("Q2", IntegrationSet::Q2);
    py::enum_<EvolutionMode>(m, "EvolutionMode")
        .value("DYNAMICAL", EvolutionMode::Dynamical)
        .value("STATIC_BOUNDARY", EvolutionMode::StaticBoundary);

    m.def(
        "divergence",
        [](const FiniteRandomWalkSpace& s, const LerayLionsFlux& f, const Vec& u, const std::vector<std::size_t>& omega) {
            return divergence(s, f, u, NodeSet(omega));
        },
        py::arg("space"), py::arg("flux"), py::arg("u"), py::arg("omega"));
    m.def("neumann_n1", [](const FiniteRandomWalkSpace& s, const LerayLionsFlux& f, const Vec& u,
                           const std::vector<std::size_t>& w) { return neumann_n1(s, f, u, NodeSet(w)); });
    m.def("neumann_n2", [](const FiniteRandomWalkSpace& s, const LerayLionsFlux& f, const Vec& u,
                           const std::vector<std::size_t>& w) { return neumann_n2(s, f, u, NodeSet(w)); });

    py::class_<StationaryProblem> sp(m, "StationaryProblem");
    sp.def(py::init<>())
        .def_readwrite("partition", &StationaryProblem::partition)
        .def_readwrite("flux", &StationaryProblem::flux)
        .def_readwrite("gamma", &StationaryProblem::gamma)
        .def_readwrite("beta", &StationaryProblem::beta)
        .def_readwrite("phi", &StationaryProblem::phi)
        .def_readwrite("integration_set", &StationaryProblem::integration_set)
        .def_readwrite("lambda_scale", &StationaryProblem::lambda_scale)
        .def("validate", &StationaryProblem::validate);
    bind_space_field(sp);

    py::class_<SolutionPair>(m, "SolutionPair")
        .def_readonly("u", &SolutionPair::u)
        .def_readonly("v", &SolutionPair::v)
        .def_readonly("residual_inf", &SolutionPair::residual_inf)
        .def_readonly("iterations", &SolutionPair::iterations)
        .def_readonly("method", &SolutionPair::method)
        .def_property_readonly("schedule_trace", [](const SolutionPair& s) {
            py::list out;
            for (const auto& e : s.schedule_trace) out.append(py::make_tuple(e.n, e.k, e.change));
            return out;
        });

    py::class_<RangeReport>(m, "RangeReport")
        .def_readonly("r_minus", &RangeReport::r_minus)
        .def_readonly("r_plus", &RangeReport::r_plus)
        .def_readonly("integral_phi", &RangeReport::integral_phi)
        .def_readonly("feasible", &RangeReport::feasible)
        .def_readonly("margin", &RangeReport::margin);

    py::class_<VerifyReport>(m, "VerifyReport")
        .def_readonly("inclusion", &VerifyReport::inclusion)
        .def_readonly("residual", &VerifyReport::residual)
        .def_readonly("conservation", &VerifyReport::conservation)
        .def_property_readonly("passed", &VerifyReport::passed);

    m.def("check_range", &check_range);
    m.def("solve_gp", py::overload_cast<const StationaryProblem&, double>(&solve_gp), py::arg("problem"),
          py::arg("tol") = 1e-10);
    m.def("verify_solution", &verify_solution, py::arg("problem"), py::arg("pair"), py::arg("tol") = 1e-10);

    py::class_<Source>(m, "Source")
        .def_static("zero", &Source::zero)
        .def_static("constant", &Source::constant)
        .def_static("table", &Source::table, py::arg("times"), py::arg("values"))
        .def_static("callable", &Source::callable, py::arg("f"), py::arg("n"))
        .def("at", &Source::at)
        .def("integral", &Source::integral);

    py::class_<EvolutionProblem> ep(m, "EvolutionProblem");
    ep.def(py::init<>())
        .def_readwrite("partition", &EvolutionProblem::partition)
        .def_readwrite("flux", &EvolutionProblem::flux)
        .def_readwrite("gamma", &EvolutionProblem::gamma)
        .def_readwrite("beta", &EvolutionProblem::beta)
        .def_readwrite("integration_set", &EvolutionProblem::integration_set)
        .def_readwrite("mode", &EvolutionProblem::mode)
        .def_readwrite("v0", &EvolutionProblem::v0)
        .def_readwrite("w0", &EvolutionProblem::w0)
        .def_readwrite("source", &EvolutionProblem::source)
        .def_readwrite("horizon", &EvolutionProblem::horizon)
        .def("validate", &EvolutionProblem::validate);
    bind_space_field(ep);

    py::class_<StepState>(m, "StepState")
        .def_readonly("t", &StepState::t)
        .def_readonly("u", &StepState::u)
        .def_readonly("v", &StepState::v)
        .def_readonly("w", &StepState::w);

    py::class_<MassRecord>(m, "MassRecord")
        .def_readonly("t", &MassRecord::t)
        .def_readonly("mass_omega1", &MassRecord::mass_omega1)
        .def_readonly("mass_omega2", &MassRecord::mass_omega2)
        .def_readonly("source_integral", &MassRecord::source_integral);

    py::class_<MildSolution>(m, "MildSolution")
        .def_readonly("n", &MildSolution::n)
        .def_readonly("times", &MildSolution::times)
        .def_readonly("states", &MildSolution::states)
        .def_readonly("mass_series", &MildSolution::mass_series)
        .def_readonly("residuals", &MildSolution::residuals)
        .def_readonly("methods", &MildSolution::methods);

    py::class_<CompatibilityReport>(m, "CompatibilityReport")
        .def_readonly("passed", &CompatibilityReport::passed)
        .def_readonly("first_violation_time", &CompatibilityReport::first_violation_time)
        .def_readonly("min_margin", &CompatibilityReport::min_margin)
        .def_readonly("message", &CompatibilityReport::message);

    py::class_<LedgerReport>(m, "LedgerReport")
        .def_readonly("step_residuals", &LedgerReport::step_residuals)
        .def_readonly("energy_series", &LedgerReport::energy_series)
        .def_readonly("gap", &LedgerReport::gap)
        .def_readonly("holds", &LedgerReport::holds);

    m.def("compatibility_check", &compatibility_check, py::arg("problem"), py::arg("n_probe") = 64);
    m.def("mild_solve", &mild_solve, py::arg("problem"), py::arg("n_steps"), py::arg("tol") = 1e-10);
    m.def("refine_and_compare", &refine_and_compare, py::arg("problem"), py::arg("n_start"), py::arg("doublings"));
    m.def("strong_residual", &strong_residual);
    m.def(
        "dtn_apply",
        [](const FiniteRandomWalkSpace& s, const std::vector<std::size_t>& w, const LerayLionsFlux& f,
           const Vec& fb) { return dtn_apply(s, NodeSet(w), f, fb); },
        py::arg("space"), py::arg("w"), py::arg("flux"), py::arg("f_boundary"));

    m.def(
        "run_scenario",
        [](const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out) {
            auto o = scenario::run(scenario::parse_command(command), config, out);
            return py::make_tuple(o.exit_code, o.summary, o.diagnostics);
        },
        py::arg("command"), py::arg("config"), py::arg("out_dir"));
}
