#include "blackbandit/attack.hpp"
#include "blackbandit/bandit.hpp"
#include "blackbandit/errors.hpp"
#include "blackbandit/estimators.hpp"
#include "blackbandit/experiments.hpp"
#include "blackbandit/geometry.hpp"
#include "blackbandit/oracle.hpp"
#include "blackbandit/suite.hpp"
#include "blackbandit/tiling.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bb;

namespace {

std::optional<ImageShape> shape_from(const std::optional<std::tuple<std::size_t, std::size_t, std::size_t>>& s) {
  if (!s) return std::nullopt;
  return ImageShape{std::get<0>(*s), std::get<1>(*s), std::get<2>(*s)};
}

py::object shape_to_py(const std::optional<ImageShape>& s) {
  if (!s) return py::none();
  return py::make_tuple(s->height, s->width, s->channels);
}

LabeledInput labeled(const Vector& x, int label, const Oracle& oracle) {
  return {Point(x, oracle.shape()), label};
}

using PyOracle = std::shared_ptr<Oracle>;

// pybind11 holders cannot be shared_ptr<const T>.
PyOracle mutable_ptr(OraclePtr p) { return std::const_pointer_cast<Oracle>(std::move(p)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Query-counted black-box gradient estimation and attacks";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<BudgetExhausted>(m, "BudgetExhausted", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<Unsupported>(m, "Unsupported", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::enum_<Norm>(m, "Norm").value("L2", Norm::L2).value("Linf", Norm::Linf);
  py::enum_<Method>(m, "Method")
      .value("Whitebox", Method::Whitebox)
      .value("CoordinateFd", Method::CoordinateFd)
      .value("Nes", Method::Nes)
      .value("Bandit", Method::Bandit);

  py::class_<Oracle, PyOracle>(m, "Oracle")
      .def_property_readonly("kind", [](const Oracle& o) { return to_string(o.kind()); })
      .def_property_readonly("dimension", &Oracle::dimension)
      .def_property_readonly("num_classes", &Oracle::num_classes)
      .def_property_readonly("shape", [](const Oracle& o) { return shape_to_py(o.shape()); })
      .def_property_readonly("has_gradient", &Oracle::has_gradient)
      .def("loss",
           [](const Oracle& o, const Vector& x, int label) {
             return o.losses(std::span<const Vector>(&x, 1), label).front();
           })
      .def("top_class",
           [](const Oracle& o, const Vector& x) { return o.top_classes(std::span<const Vector>(&x, 1)).front(); })
      .def("gradient", &Oracle::gradient, py::arg("x"), py::arg("label") = 0)
      .def("weights_json", [](const Oracle& o) { return weights_document(o).dump(); });

  m.def(
      "make_oracle",
      [](const std::string& kind, std::size_t dimension, std::size_t num_classes, std::uint64_t seed,
         std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> shape, std::size_t hidden,
         double filter_smoothing, const std::string& endpoint) {
        OracleDescriptor d;
        d.kind = parse_oracle_kind(kind);
        d.dimension = dimension;
        d.num_classes = num_classes;
        d.seed = seed;
        d.shape = shape_from(shape);
        d.hidden = hidden;
        d.filter_smoothing = filter_smoothing;
        d.endpoint = endpoint;
        return mutable_ptr(make_oracle(d));
      },
      py::arg("kind") = "mlp", py::arg("dimension") = 256, py::arg("num_classes") = 10, py::arg("seed") = 7,
      py::arg("shape") = std::make_tuple(16, 16, 1), py::arg("hidden") = 64, py::arg("filter_smoothing") = 1.5,
      py::arg("endpoint") = "");
  m.def("oracle_from_weights", [](const std::string& text) {
    return mutable_ptr(oracle_from_weights(nlohmann::json::parse(text)));
  });
  m.def("load_weights_file", [](const std::string& path) { return mutable_ptr(load_weights_file(path)); });

  py::class_<OracleHandle>(m, "OracleHandle")
      .def(py::init([](PyOracle o, std::optional<std::uint64_t> budget) { return OracleHandle(o, budget); }),
           py::arg("oracle"), py::arg("budget") = py::none())
      .def("loss", py::overload_cast<const Vector&, int>(&OracleHandle::loss), py::arg("x"), py::arg("label") = 0)
      .def("top_class", &OracleHandle::top_class)
      .def_property_readonly("queries", &OracleHandle::queries)
      .def_property_readonly("remaining", &OracleHandle::remaining);

  m.def(
      "fd_full_gradient",
      [](OracleHandle& h, const Vector& x, int label, double delta, bool central) {
        auto est = fd_full_gradient(h, labeled(x, label, h.oracle()), delta,
                                    central ? FiniteDifference::Central : FiniteDifference::Forward);
        return py::make_tuple(est.raw, est.queries_spent);
      },
      py::arg("handle"), py::arg("x"), py::arg("label") = 0, py::arg("delta") = 1e-3, py::arg("central") = false);
  m.def(
      "nes_estimate",
      [](OracleHandle& h, const Vector& x, int label, std::size_t samples, double delta, bool antithetic,
         std::uint64_t seed) {
        Rng rng(seed);
        auto [est, probe] = nes_estimate(h, labeled(x, label, h.oracle()), {samples, delta, antithetic}, rng);
        return py::make_tuple(est.raw, probe.rows, probe.responses);
      },
      py::arg("handle"), py::arg("x"), py::arg("label") = 0, py::arg("samples") = 100, py::arg("delta") = 0.01,
      py::arg("antithetic") = true, py::arg("seed") = 0);
  m.def("nes_closed_form", [](const Matrix& a, const Vector& y) { return nes_closed_form({a, y}); });
  m.def("lsq_estimate", [](const Matrix& a, const Vector& y) { return lsq_estimate({a, y}).raw; });
  m.def("equivalence_gap", [](const Vector& g, const Matrix& a, const Vector& y) { return equivalence_gap(g, {a, y}); });
  m.def(
      "equivalence_bound", [](std::size_t k, std::size_t d, double p) { return equivalence_bound({k, d, p}); },
      py::arg("k"), py::arg("d"), py::arg("p"));
  m.def(
      "equivalence_experiment",
      [](std::size_t k, std::size_t d, double p, std::size_t trials, std::uint64_t seed) {
        const auto r = equivalence_experiment(k, d, p, trials, seed);
        return py::dict(py::arg("gap_q99") = r.gap_q99, py::arg("bound") = r.bound,
                        py::arg("exceed_fraction") = r.exceed_fraction);
      },
      py::arg("k"), py::arg("d"), py::arg("p"), py::arg("trials"), py::arg("seed") = 0);

  m.def("boundary_project", &boundary_project);
  m.def("ball_project", &ball_project, py::arg("x"), py::arg("x0"), py::arg("epsilon"), py::arg("norm"),
        py::arg("clamp") = true);
  m.def("fgsm_step", &fgsm_step);

  m.def("downsample", [](const Vector& image, std::size_t tile, std::size_t h, std::size_t w, std::size_t c) {
    return downsample(image, TilingSpec(tile, {h, w, c}));
  });
  m.def("upsample", [](const Vector& latent, std::size_t tile, std::size_t h, std::size_t w, std::size_t c) {
    return upsample(latent, TilingSpec(tile, {h, w, c}));
  });
  m.def("eg_update", [](const Vector& v, const Vector& delta, double eta) {
    return eg_update(LatentState::from(v, Constraint::Box), delta, eta).v;
  });
  m.def("gd_update", [](const Vector& v, const Vector& delta, double eta) {
    return gd_update(LatentState::from(v, Constraint::Unconstrained), delta, eta).v;
  });

  m.def(
      "make_suite",
      [](const Oracle& oracle, std::size_t size, std::uint64_t seed) {
        SuiteSpec spec;
        spec.size = size;
        spec.seed = seed;
        py::list out;
        for (const auto& in : make_suite(oracle, spec)) out.append(py::make_tuple(in.point.data, in.label));
        return out;
      },
      py::arg("oracle"), py::arg("size") = 100, py::arg("seed") = 2024);

  m.def(
      "run_attack",
      [](PyOracle oracle, const Vector& x, int label, const std::string& method, const std::string& norm,
         double epsilon, double step, std::uint64_t max_queries, std::size_t nes_samples, bool data_prior,
         std::size_t tile, std::uint64_t seed) {
        AttackConfig c;
        c.method = parse_method(method);
        c.norm = parse_norm(norm);
        c.epsilon = epsilon;
        c.step = step;
        c.max_queries = max_queries;
        c.nes.samples = nes_samples;
        c.bandit = c.norm == Norm::Linf ? BanditHyper::imagenet_linf() : BanditHyper::imagenet_l2();
        c.priors.data = data_prior;
        c.priors.tile = tile;
        Rng rng(seed);
        const auto r = run_attack(oracle, labeled(x, label, *oracle), c, rng);
        return py::dict(py::arg("success") = r.outcome.success, py::arg("aborted") = r.outcome.aborted,
                        py::arg("queries") = r.outcome.queries_used,
                        py::arg("iterations") = r.outcome.iterations,
                        py::arg("adversarial") = r.outcome.adversarial_point.data);
      },
      py::arg("oracle"), py::arg("x"), py::arg("label"), py::arg("method") = "nes", py::arg("norm") = "linf",
      py::arg("epsilon") = 0.05, py::arg("step") = 0.005, py::arg("max_queries") = 2000,
      py::arg("nes_samples") = 50, py::arg("data_prior") = false, py::arg("tile") = 2, py::arg("seed") = 0);
}
