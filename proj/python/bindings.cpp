// Python bindings: meshes, FEM operators, eigensystems and the registration pipeline.

#include <lbbp/config.hpp>
#include <lbbp/correspondence.hpp>
#include <lbbp/eigensolver.hpp>
#include <lbbp/errors.hpp>
#include <lbbp/evaluation.hpp>
#include <lbbp/fem.hpp>
#include <lbbp/geodesic.hpp>
#include <lbbp/mesh_io.hpp>
#include <lbbp/sampling.hpp>
#include <lbbp/solver.hpp>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace lbbp;

namespace {

// Config travels as a JSON string; the Python side wraps it in a dict API.
LbbpConfig parse_config(const std::string& text)
{
    LbbpConfig config;
    from_json(nlohmann::json::parse(text.empty() ? "{}" : text), config);
    config.validate();
    return config;
}

py::dict energy_dict(const EnergyBreakdown& e)
{
    py::dict d;
    d["coeff"] = e.coeff;
    d["eigen"] = e.eigen;
    d["harmonic"] = e.harmonic;
    d["area_residual"] = e.area_residual;
    d["total"] = e.total;
    return d;
}

} // namespace

PYBIND11_MODULE(_lbbp, m)
{
    m.doc() = "Conformal Laplace-Beltrami basis pursuit";

    // Messages lead with the error name, e.g. "InvalidK: ...".
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    py::class_<TriangleMesh>(m, "TriangleMesh")
        .def(py::init([](Vertices v, Faces f, bool allow_boundary) {
                 return TriangleMesh(std::move(v), std::move(f), MeshOptions{allow_boundary});
             }),
             py::arg("vertices"), py::arg("faces"), py::arg("allow_boundary") = false)
        .def_property_readonly("vertices", &TriangleMesh::vertices)
        .def_property_readonly("faces", &TriangleMesh::faces)
        .def_property_readonly("num_vertices", &TriangleMesh::num_vertices)
        .def_property_readonly("num_faces", &TriangleMesh::num_faces)
        .def_property_readonly("surface_area", &TriangleMesh::surface_area)
        .def("__repr__", [](const TriangleMesh& mesh) {
            return "<TriangleMesh " + std::to_string(mesh.num_vertices()) + " vertices, " +
                   std::to_string(mesh.num_faces()) + " faces>";
        });

    m.def("load_mesh", [](const std::filesystem::path& path) { return load_mesh(path); }, py::arg("path"));
    m.def("save_off", &save_off, py::arg("path"), py::arg("mesh"));

    m.def("mass", [](const TriangleMesh& mesh) -> Eigen::VectorXd { return assemble_mass(mesh).diagonal(); },
          "Lumped mass diagonal", py::arg("mesh"));
    m.def("stiffness", &assemble_stiffness, "Cotangent stiffness (scipy.sparse CSC)", py::arg("mesh"));

    m.def(
        "eigs",
        [](const TriangleMesh& mesh, int k, std::optional<Eigen::VectorXd> w2) {
            MassMatrix mass = assemble_mass(mesh);
            if (w2) mass = weighted_mass(mass, *w2);
            const Eigensystem sys = solve_eigs(assemble_stiffness(mesh), mass, k);
            return py::make_tuple(sys.values, sys.vectors);
        },
        "k smallest eigenpairs of S phi = lambda diag(w2) M phi, constant mode first",
        py::arg("mesh"), py::arg("k"), py::arg("w2") = py::none());

    m.def(
        "geodesic_distance",
        [](const TriangleMesh& mesh, int source) { return geodesic_distance(mesh, source); },
        py::arg("mesh"), py::arg("source"));

    m.def(
        "sample",
        [](const TriangleMesh& mesh, std::vector<int> counts, std::uint64_t seed) {
            const SampleHierarchy h = farthest_point_sample(mesh, counts, seed);
            return py::make_tuple(h.levels, h.masses);
        },
        "Nested farthest-point levels and their Voronoi masses", py::arg("mesh"), py::arg("counts"), py::arg("seed"));

    m.def("default_config", [] {
        nlohmann::json j;
        to_json(j, LbbpConfig{});
        return j.dump();
    });

    m.def(
        "register_meshes",
        [](const TriangleMesh& source, const TriangleMesh& target, const IndexPairs& landmarks,
           const std::string& config_json) {
            const LbbpConfig config = parse_config(config_json);
            LbbpResult result;
            Correspondence corr;
            {
                py::gil_scoped_release release;
                const SolverInputs inputs = prepare_inputs(source, target, landmarks, config);
                result = solve(inputs, config);
                corr = point_to_point(inputs.phi, result.psi_star);
            }
            py::dict out;
            out["correspondence"] = corr.index_map;
            out["w"] = result.state.w;
            out["psi"] = result.psi_star;
            out["iterations"] = result.state.iterations;
            out["reinit_count"] = result.state.reinit_count;
            out["termination"] = std::string(to_string(result.state.termination));
            out["energy"] = energy_dict(result.state.trace.back().energy);
            std::vector<double> totals;
            for (const TraceRow& row : result.state.trace) totals.push_back(row.energy.total);
            out["trace_total"] = totals;
            out["warm_start"] = static_cast<bool>(result.warm);
            return out;
        },
        py::arg("source"), py::arg("target"), py::arg("landmarks"), py::arg("config_json") = "{}");

    m.def(
        "geodesic_errors",
        [](const std::vector<int>& corr, const std::vector<int>& truth, const TriangleMesh& target) {
            Correspondence c, t;
            c.index_map = corr;
            t.index_map = truth;
            const ErrorReport r = geodesic_errors(c, t, target);
            py::dict out;
            out["errors"] = r.errors;
            out["thresholds"] = r.thresholds;
            out["fractions"] = r.fractions;
            out["fraction_exact"] = r.fraction_exact;
            out["fraction_within_0_05"] = r.fraction_within_5pct;
            out["mean_error"] = r.mean_error;
            out["max_error"] = r.max_error;
            return out;
        },
        py::arg("corr"), py::arg("truth"), py::arg("target"));
}
