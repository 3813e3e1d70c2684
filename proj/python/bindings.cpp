#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ergolab/entropy.hpp"
#include "ergolab/labcli.hpp"
#include "ergolab/modelio.hpp"
#include "ergolab/recode.hpp"
#include "ergolab/schemes.hpp"
#include "ergolab/towers.hpp"

namespace py = pybind11;
using namespace ergolab;

namespace {

py::dict distribution_dict(const BlockDistribution& d) {
  py::dict out;
  for (const auto& [w, p] : d.weights()) out[py::tuple(py::cast(w))] = p;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stationary-process entropy estimators, towers and column recoding";

  static py::exception<Error> error_type(m, "ErgolabError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<ProcessModel, std::shared_ptr<ProcessModel>>(m, "ProcessModel")
      .def_property_readonly("kind", [](const ProcessModel& x) { return std::string(x.kind()); })
      .def_property_readonly("alphabet_size", &ProcessModel::alphabet_size)
      .def("sample", &ProcessModel::sample, py::arg("n"), py::arg("seed"))
      .def("entropy_rate", &ProcessModel::exact_entropy_rate)
      .def("cylinder_measure",
           [](const ProcessModel& x, const Word& u) { return x.cylinder_measure(u); },
           py::arg("word"))
      .def("block_distribution",
           [](const ProcessModel& x, std::size_t n) { return distribution_dict(x.block_distribution(n)); },
           py::arg("n"))
      .def("block_entropy", [](const ProcessModel& x, std::size_t n) { return block_entropy(x, n); },
           py::arg("n"))
      .def("to_json", [](const ProcessModel& x) { return model_to_text(x); });

  py::class_<JointModel, std::shared_ptr<JointModel>>(m, "JointModel")
      .def_property_readonly("kind", [](const JointModel& x) { return std::string(x.kind()); })
      .def_property_readonly("alphabet_p", &JointModel::alphabet_p)
      .def_property_readonly("alphabet_q", &JointModel::alphabet_q)
      .def("sample", &JointModel::sample, py::arg("n"), py::arg("seed"))
      .def("joint_cylinder_measure",
           [](const JointModel& x, const Word& u, const Word& v) { return x.joint_cylinder_measure(u, v); },
           py::arg("u"), py::arg("v"))
      .def("conditional_measure",
           [](const JointModel& x, const Word& u, const Word& v) { return x.conditional_measure(u, v); },
           py::arg("u"), py::arg("v"))
      .def("conditional_entropies",
           [](const JointModel& x, std::size_t n) {
             const auto c = conditional_entropies(x, n);
             return py::make_tuple(c.s, c.t);
           },
           py::arg("n"));

  auto as_python = [](const LoadedModel& loaded) -> py::object {
    if (loaded.is_joint()) return py::cast(std::const_pointer_cast<JointModel>(loaded.joint));
    return py::cast(std::const_pointer_cast<ProcessModel>(loaded.process));
  };
  m.def("load_model", [as_python](const std::filesystem::path& path) { return as_python(load_model(path)); },
        py::arg("path"), "Model from a JSON file; joint files give a JointModel.");
  m.def("parse_model",
        [as_python](const std::string& text, const std::filesystem::path& base_dir) {
          return as_python(parse_model(text, base_dir));
        },
        py::arg("text"), py::arg("base_dir") = std::filesystem::path{});

  m.def("plugin", [](const Word& w, const std::string& policy) {
          return plugin_scheme(w, plugin_policy_from_string(policy));
        },
        py::arg("word"), py::arg("policy") = "conditional");
  m.def("lz78", [](const Word& w) { return lz78_scheme(w); }, py::arg("word"));
  m.def("returntime", [](const Word& w) { return returntime_scheme(w); }, py::arg("word"));
  m.def("freq", [](const Word& w, Symbol a, std::size_t r) { return freq_scheme(w, a, r); },
        py::arg("word"), py::arg("symbol"), py::arg("alphabet_size"));
  m.def("estimate",
        [](const std::string& scheme, const Word& w, std::size_t alphabet_size) {
          const auto s = SchemeDescriptor::parse(scheme);
          s.validate(alphabet_size);
          return s.evaluate(w, alphabet_size);
        },
        py::arg("scheme"), py::arg("word"), py::arg("alphabet_size"));
  m.def("smb_trajectory",
        [](const ProcessModel& model, const Word& path) { return smb_trajectory(model, path).values; },
        py::arg("model"), py::arg("path"));

  py::class_<Tower>(m, "Tower")
      .def_readonly("base", &Tower::base)
      .def_readonly("height", &Tower::height)
      .def("__repr__", [](const Tower& t) {
        return "Tower(base=" + std::to_string(t.base) + ", height=" + std::to_string(t.height) + ")";
      });
  py::class_<TowerDecomposition>(m, "TowerDecomposition")
      .def_readonly("path_length", &TowerDecomposition::path_length)
      .def_readonly("towers", &TowerDecomposition::towers)
      .def_readonly("leftover", &TowerDecomposition::leftover)
      .def("leftover_fraction", &TowerDecomposition::leftover_fraction)
      .def("is_partition", &TowerDecomposition::is_partition);
  m.def("rohlin_tower", &rohlin_tower, py::arg("path_length"), py::arg("height"), py::arg("epsilon"));
  m.def("kakutani_decompose",
        [](const Word& path, const Word& pattern, std::size_t min_height) {
          return kakutani_decompose(path, pattern, min_height);
        },
        py::arg("path"), py::arg("pattern"), py::arg("min_height"));

  m.def("compute_M",
        [](std::size_t n, double h, double h_prime, std::size_t k, double epsilon) {
          const auto b = compute_M(n, h, h_prime, k, epsilon);
          return py::make_tuple(b.M, b.C);
        },
        py::arg("n"), py::arg("h"), py::arg("h_prime"), py::arg("k"), py::arg("epsilon"));
  m.def("minimal_feasible_n", &minimal_feasible_n, py::arg("epsilon"), py::arg("h"), py::arg("h_prime"),
        py::arg("k"), py::arg("limit") = std::size_t{1} << 16);

  m.def("codebooks_roundtrip",
        [](const JointModel& model, std::size_t height, std::size_t k, double epsilon,
           std::size_t path_length, std::uint64_t seed) {
          const auto [p, q] = model.sample(path_length, seed);
          const auto c = conditional_entropies(model, 8);
          const auto decomposition = rohlin_tower(path_length, height, 0.5);
          auto family = observed_codebooks(model, p, q, decomposition, k, epsilon, c.s, c.t);
          std::ostringstream out;
          write_codebooks(out, family.books);
          std::istringstream in(out.str());
          const bool same = read_codebooks(in) == family.books;
          return py::make_tuple(py::bytes(out.str()), same);
        },
        py::arg("model"), py::arg("height"), py::arg("k"), py::arg("epsilon"), py::arg("path_length"),
        py::arg("seed") = 1,
        "Observed codebooks of one sampled path, serialized; second item is the reload check.");

  py::class_<Verdict>(m, "Verdict")
      .def_readonly("name", &Verdict::name)
      .def_readonly("passed", &Verdict::passed)
      .def_readonly("detail", &Verdict::detail);
  py::class_<ExperimentReport>(m, "ExperimentReport")
      .def_readonly("experiment", &ExperimentReport::experiment)
      .def_readonly("verdicts", &ExperimentReport::verdicts)
      .def_readonly("errors", &ExperimentReport::errors)
      .def_property_readonly("passed", &ExperimentReport::passed)
      .def_property_readonly("rows", [](const ExperimentReport& r) { return r.rows.size(); })
      .def("csv", [](const ExperimentReport& r) { return report_csv(r); })
      .def("json", [](const ExperimentReport& r) { return report_json(r); })
      .def("text", [](const ExperimentReport& r) { return report_text(r); });
  m.def("run_experiment",
        [](const std::filesystem::path& config) {
          const auto c = load_config(config);
          py::gil_scoped_release release;
          return run_experiment(c);
        },
        py::arg("config"));
}
