#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "exwkb/borel_engine.hpp"
#include "exwkb/errors.hpp"
#include "exwkb/resummation.hpp"
#include "exwkb/trajectories.hpp"
#include "exwkb/wkb.hpp"

namespace py = pybind11;
using namespace exwkb;

namespace {

Potential potential_from_json(const std::string& s) { return Potential::from_json(nlohmann::json::parse(s)); }

std::string classify_json(const Potential& p) {
    auto j = nlohmann::json::array();
    for (const auto& cp : classify(p)) j.push_back(to_json(cp));
    return j.dump();
}

py::dict borel_ray(const Potential& p, cplx x, cplx y0, double alpha, double tau, int M, int K) {
    const auto g = continue_phi(p, geodesic_ray(p, x, y0, alpha, tau, M), K);
    std::vector<double> r;
    for (int n = 0; n <= g.M(); ++n) r.push_back(g.r(n));
    py::dict d;
    d["r"] = r;
    d["phi"] = g.phi_total;
    d["C"] = g.bound.C;
    d["K_exp"] = g.bound.K_exp;
    d["self_check_error"] = g.self_check_error;
    return d;
}

std::string singularities_json(const Potential& p, cplx x, int sheet, double radius, int depth, int germ) {
    const SpectralPoint sp{x, sheet};
    PredictOptions o;
    o.depth = depth;
    SingularityReport r;
    r.predicted = predict_singularities(p, sp, radius, o);
    r.detected = detect_pade(borel_germ(p, x, liouville(p, sp), germ));
    r.matches = match_singularities(r.predicted, r.detected, 2e-2);
    return to_json(r).dump();
}

std::vector<py::tuple> resum(const Potential& p, const std::vector<cplx>& vertices, cplx y0, double alpha,
                             const std::vector<cplx>& hbars, int K, int M, double tau) {
    std::vector<py::tuple> out;
    for (const auto& v : resum_wkb(p, vertices, y0, alpha, hbars, {K, M, tau, 8}))
        out.push_back(py::make_tuple(v.hbar, v.value, v.derivative, v.tail_bound));
    return out;
}

}  // namespace

PYBIND11_MODULE(_exwkb, m) {
    m.doc() = "Exact WKB engine: formal series, Borel continuation, Stokes graphs, resummation";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<Potential>(m, "Potential")
        .def_static("from_json", &potential_from_json)
        .def("to_json", [](const Potential& p) { return p.to_json().dump(); })
        .def("evaluate", &Potential::evaluate, py::arg("x"), py::arg("hbar"))
        .def("transition_points", &Potential::transition_points)
        .def_property_readonly("hbar_degree", &Potential::hbar_degree);

    m.def("classify_json", &classify_json);
    m.def("liouville", [](const Potential& p, cplx x, int sheet) { return liouville(p, {x, sheet}); },
          py::arg("p"), py::arg("x"), py::arg("sheet") = 1);
    m.def("wkb_coefficients", [](const Potential& p, cplx x, cplx y0, int N) { return wkb_recursion(p, x, y0, N).y; },
          py::arg("p"), py::arg("x"), py::arg("y0"), py::arg("N"));
    m.def("borel_germ", &borel_germ, py::arg("p"), py::arg("x"), py::arg("y0"), py::arg("n"));
    m.def("borel_ray", &borel_ray, py::arg("p"), py::arg("x"), py::arg("y0"), py::arg("alpha"), py::arg("tau"),
          py::arg("M") = 512, py::arg("K") = 16);
    m.def("singularities_json", &singularities_json, py::arg("p"), py::arg("x"), py::arg("sheet") = 1,
          py::arg("radius") = 10.0, py::arg("depth") = 3, py::arg("germ") = 24);
    m.def("motzkin", &motzkin_bound, py::arg("k_max"));
    m.def("stokes_graph_json", [](const Potential& p, double alpha) { return to_json(stokes_graph(p, alpha)).dump(); });
    m.def("stokes_svg", [](const Potential& p, double alpha, double radius) {
        return to_svg(p, stokes_graph(p, alpha), radius);
    }, py::arg("p"), py::arg("alpha"), py::arg("view_radius") = 3.0);
    m.def("stokes_diagram_json", [](const Potential& p, cplx x, int sheet, int n) {
        return to_json(stokes_diagram(p, {x, sheet}, n)).dump();
    }, py::arg("p"), py::arg("x"), py::arg("sheet") = 1, py::arg("n_phases") = 36);
    m.def("resum_wkb", &resum, py::arg("p"), py::arg("vertices"), py::arg("y0"), py::arg("alpha"), py::arg("hbars"),
          py::arg("K") = 16, py::arg("M") = 512, py::arg("tau") = 4.0);
    m.def("ode_oracle", [](const Potential& p, const std::vector<cplx>& path, cplx hbar, cplx value, cplx derivative) {
        const auto o = ode_oracle(p, path, hbar, {value, derivative});
        return py::make_tuple(o.value, o.derivative);
    }, py::arg("p"), py::arg("path"), py::arg("hbar"), py::arg("value"), py::arg("derivative"));
    m.def("jump_fit_json", [](const Potential& p, cplx x, cplx y0, double alpha, const std::vector<double>& hbar_abs) {
        return to_json(jump_fit(p, x, y0, alpha, hbar_abs)).dump();
    });
}
