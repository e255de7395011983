#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "synq/errors.hpp"
#include "synq/model.hpp"
#include "synq/model_io.hpp"
#include "synq/psi.hpp"
#include "synq/simulation.hpp"
#include "synq/steady_state.hpp"
#include "synq/verify.hpp"

namespace py = pybind11;
using namespace synq;

namespace {

Space parse_space(const std::string& s) {
    if (s == "W" || s == "w") return Space::W;
    if (s == "Z" || s == "z") return Space::Z;
    throw ConfigError("space must be \"W\" or \"Z\", got \"" + s + "\"");
}

py::dict estimates(const std::vector<Estimate>& es) {
    py::list values, ses;
    for (const auto& e : es) {
        values.append(e.value);
        ses.append(e.se);
    }
    py::dict d;
    d["value"] = values;
    d["se"] = ses;
    return d;
}

SimConfig sim_config(double horizon, int replications, std::uint64_t seed, double step,
                     double burn_in, int threads, const std::vector<Vector>& alphas) {
    SimConfig c;
    c.horizon = horizon;
    c.replications = replications;
    c.seed = seed;
    c.step = step;
    c.burn_in_fraction = burn_in;
    c.threads = threads;
    for (const auto& a : alphas) c.alpha_grid.push_back(AlphaVector::w_space(a));
    return c;
}

py::dict sim_to_dict(const SimEstimate& s) {
    py::dict d;
    d["mean_Z"] = estimates(s.mean_Z);
    d["mean_W"] = estimates(s.mean_W);
    d["ensemble_Z"] = estimates(s.ensemble_Z);
    d["lst"] = estimates(s.lst_values);
    d["ordering_violations"] = s.ordering_violations;
    d["reflection_violations"] = s.reflection_violations;
    d["events"] = s.events;
    d["warning"] = s.warning ? py::cast(*s.warning) : py::none();
    return d;
}

}  // namespace

PYBIND11_MODULE(_synq, mod) {
    mod.doc() = "Stationary workloads of Levy-driven tandem queues";

    auto error = py::register_exception<Error>(mod, "Error");
    py::register_exception<DomainError>(mod, "DomainError", error.ptr());
    py::register_exception<InstabilityError>(mod, "InstabilityError", error.ptr());
    py::register_exception<ConfigError>(mod, "ConfigError", error.ptr());
    py::register_exception<UnsupportedModel>(mod, "UnsupportedModel", error.ptr());
    py::register_exception<ValidationError>(mod, "ValidationError", error.ptr());
    auto numeric = py::register_exception<NumericError>(mod, "NumericError", error.ptr());
    py::register_exception<NearPole>(mod, "NearPole", numeric.ptr());
    py::register_exception<BracketOverflow>(mod, "BracketOverflow", numeric.ptr());
    py::register_exception<InfiniteMean>(mod, "InfiniteMean", numeric.ptr());

    py::class_<ValidatedModel>(mod, "Model")
        .def_static(
            "from_json", [](const std::string& text) { return validate(parse_model(text)); },
            py::arg("text"), "Parse and validate a model given as JSON text.")
        .def_property_readonly("n", &ValidatedModel::n)
        .def_property_readonly("stable", &ValidatedModel::stable)
        .def_property_readonly("mean", [](const ValidatedModel& m) { return m.moments().mean; })
        .def_property_readonly("cumulative_mean",
                               [](const ValidatedModel& m) { return m.moments().cumulative_mean; })
        .def_property_readonly("cov", [](const ValidatedModel& m) { return m.moments().cov; })
        .def("to_json", [](const ValidatedModel& m) { return model_to_json(m.model()).dump(); });

    mod.def("phi", [](const ValidatedModel& m, const Vector& v) { return phi(m, v); },
            py::arg("model"), py::arg("v"));
    mod.def(
        "psi",
        [](const ValidatedModel& m, std::size_t k, const Vector& tail) {
            const PsiResult r = psi(m, {k, tail});
            py::dict d;
            d["beta"] = r.beta;
            d["residual"] = r.residual;
            d["bracket"] = py::make_tuple(r.bracket[0], r.bracket[1]);
            d["iterations"] = r.iterations;
            return d;
        },
        py::arg("model"), py::arg("k"), py::arg("tail"));
    mod.def(
        "lst",
        [](const ValidatedModel& m, const Vector& alpha, const std::string& space) {
            return lst(m, AlphaVector::make(alpha, parse_space(space)));
        },
        py::arg("model"), py::arg("alpha"), py::arg("space") = "W");
    mod.def(
        "decomposition",
        [](const ValidatedModel& m, const Vector& alpha) {
            return decomposition(m, AlphaVector::w_space(alpha)).factors;
        },
        py::arg("model"), py::arg("alpha"), "Per-level factors of the joint LST in W-space.");
    mod.def(
        "moments",
        [](const ValidatedModel& m) {
            const WorkloadMoments w = moments_W(m);
            py::dict d;
            d["EW1"] = w.EW1;
            d["EW2"] = w.EW2;
            d["EZ2"] = w.EZ2;
            return d;
        },
        py::arg("model"));
    mod.def(
        "simulate",
        [](const ValidatedModel& m, double horizon, int replications, std::uint64_t seed, double step,
           double burn_in, int threads, const std::vector<Vector>& alphas) {
            const SimConfig c = sim_config(horizon, replications, seed, step, burn_in, threads, alphas);
            SimEstimate s;
            {
                py::gil_scoped_release release;
                s = simulate(m, c);
            }
            return sim_to_dict(s);
        },
        py::arg("model"), py::arg("horizon") = 5000.0, py::arg("replications") = 200,
        py::arg("seed") = 42, py::arg("step") = 0.01, py::arg("burn_in") = 0.5, py::arg("threads") = 0,
        py::arg("alphas") = std::vector<Vector>{});
    mod.def(
        "verify",
        [](const ValidatedModel& m, const std::string& plan_json) {
            const VerifyPlan plan =
                plan_json.empty() ? default_plan(m) : plan_from_json(nlohmann::json::parse(plan_json), m);
            VerifyReport r;
            {
                py::gil_scoped_release release;
                r = run(m, plan);
            }
            return report_to_json(r).dump();
        },
        py::arg("model"), py::arg("plan") = "", "Run a plan (JSON text; empty for the default). Returns JSON text.");
}
