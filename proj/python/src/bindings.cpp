#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "exf/budget.hpp"
#include "exf/elementary.hpp"
#include "exf/errors.hpp"
#include "exf/evaluator.hpp"
#include "exf/fixtures.hpp"
#include "exf/model_io.hpp"
#include "exf/pfloat.hpp"

namespace py = pybind11;
using namespace exf;

namespace {

py::object py_int(const BigInt& x) {
  return py::reinterpret_steal<py::object>(PyLong_FromString(x.str().c_str(), nullptr, 10));
}

BigInt to_bigint(const py::handle& h) { return BigInt::parse(py::str(h).cast<std::string>()); }

// int, Fraction, or anything with integer numerator/denominator
Rat to_rat(const py::object& x) {
  if (py::isinstance<py::str>(x)) return Rat::parse(x.cast<std::string>());
  if (!py::hasattr(x, "numerator") || !py::hasattr(x, "denominator")) {
    throw py::type_error("expected an int, a fractions.Fraction or an 'a/b' string");
  }
  const py::object num = x.attr("numerator"), den = x.attr("denominator");
  if (!py::isinstance<py::int_>(num) || !py::isinstance<py::int_>(den)) {
    throw py::type_error("numerator and denominator must be integers (floats are not exact)");
  }
  return Rat(to_bigint(num), to_bigint(den));
}

py::object to_fraction(const Rat& x) {
  static py::object fraction = py::module_::import("fractions").attr("Fraction");
  return fraction(py_int(x.num()), py_int(x.den()));
}

std::vector<PFloat> to_floats(const py::iterable& xs) {
  std::vector<PFloat> out;
  for (const auto& x : xs) out.push_back(x.cast<PFloat>());
  return out;
}

py::dict budget_dict(const ErrorBudget& b) {
  py::list sites;
  for (const auto& s : b.sites) {
    py::dict d;
    d["name"] = s.name;
    d["kind"] = s.kind == SiteKind::softmax ? "softmax" : "inv_sqrt";
    d["layer"] = s.layer;
    d["index"] = s.index;
    d["tolerance"] = to_fraction(s.tolerance);
    d["delta"] = to_fraction(s.delta);
    d["bits"] = s.bits;
    sites.append(d);
  }
  py::dict out;
  out["epsilon"] = to_fraction(b.epsilon);
  out["n"] = b.n;
  out["activation_bound"] = to_fraction(b.activation_bound);
  out["output_tolerance"] = to_fraction(b.output_tolerance);
  out["input_tolerance"] = to_fraction(b.input_tolerance);
  out["sites"] = sites;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact rational, p-bit float and error-budgeted transformer evaluation";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<OverflowError>(m, "FloatOverflowError", PyExc_OverflowError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_ValueError);
  py::register_exception<ModeError>(m, "ModeError", PyExc_ValueError);
  py::register_exception<TieError>(m, "TieError", PyExc_ArithmeticError);

  py::class_<PFloat>(m, "PFloat")
      .def(py::init([](const py::object& mant, const py::object& e, int p) {
             return PFloat::make(to_bigint(mant), to_bigint(e), p);
           }),
           py::arg("m"), py::arg("e"), py::arg("p"))
      .def_property_readonly("m", [](const PFloat& x) { return py_int(x.m()); })
      .def_property_readonly("e", [](const PFloat& x) { return py_int(x.e()); })
      .def_property_readonly("p", &PFloat::p)
      .def("to_fraction", [](const PFloat& x) { return to_fraction(x.to_rat()); })
      .def("__float__", &PFloat::to_double)
      .def("__eq__", [](const PFloat& a, const PFloat& b) { return a == b; })
      .def("__hash__", [](const PFloat& x) { return py::hash(py::make_tuple(py_int(x.m()), py_int(x.e()), x.p())); })
      .def("__repr__", [](const PFloat& x) { return "PFloat" + x.str(); });

  m.def("round_p", [](const py::object& x, int p) { return round_p(to_rat(x), p); }, py::arg("x"), py::arg("p"));
  m.def("f_add", &f_add);
  m.def("f_sub", &f_sub);
  m.def("f_mul", &f_mul);
  m.def("f_div", &f_div);
  m.def("f_sqrt", &f_sqrt);
  m.def("f_exp", &f_exp);
  m.def("f_sum", [](const py::iterable& xs, int p) { return f_sum_blocks(to_floats(xs), p); }, py::arg("xs"), py::arg("p"));
  m.def("f_sum_exact", [](const py::iterable& xs, int p) { return f_sum_oracle(to_floats(xs), p); }, py::arg("xs"), py::arg("p"));
  m.def("block_gap", &block_gap);

  py::class_<Model>(m, "Model")
      .def_readonly("alphabet", &Model::alphabet)
      .def_readonly("dim", &Model::dim)
      .def_readonly("param_bits", &Model::param_bits)
      .def_property_readonly("num_layers", [](const Model& x) { return x.layers.size(); })
      .def("to_json", &serialize_model)
      .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

  m.def("load_model", &load_model, py::arg("path"), "Load a model file, or builtin:NAME");
  m.def("parse_model", [](const std::string& text) { return parse_model(text); }, py::arg("text"));
  m.def("builtin_model", [](const std::string& name) { return builtin_model(name); }, py::arg("name"));
  m.def("builtin_model_names", &builtin_model_names);

  m.def("eval_ahat", [](const Model& model, const std::string& w) { return to_fraction(eval_ahat(model, w).value); },
        py::arg("model"), py::arg("w"));
  m.def("eval_smat", [](const Model& model, const std::string& w, int p) { return eval_smat_pbit(model, w, p); },
        py::arg("model"), py::arg("w"), py::arg("p"));
  m.def("eval_budgeted",
        [](const Model& model, const std::string& w, const py::object& eps) {
          return to_fraction(eval_budgeted(model, w, to_rat(eps)).value);
        },
        py::arg("model"), py::arg("w"), py::arg("epsilon"));
  m.def("plan_budget",
        [](const Model& model, std::size_t n, const py::object& eps) { return budget_dict(plan_budget(model, n, to_rat(eps))); },
        py::arg("model"), py::arg("n"), py::arg("epsilon"));
  m.def("recognize",
        [](const Model& model, const std::string& w, const std::string& mode, std::optional<int> p, std::optional<py::object> eps) {
          EvalContext ctx;
          if (mode == "ahat") {
            ctx = EvalContext::ahat();
          } else if (mode == "smat") {
            if (!p) throw DomainError("smat mode needs p");
            ctx = EvalContext::pbit(*p);
          } else if (mode == "budgeted") {
            if (!eps) throw DomainError("budgeted mode needs epsilon");
            ctx = EvalContext::budgeted(to_rat(*eps));
          } else {
            throw DomainError("mode must be ahat, smat or budgeted");
          }
          return std::string(to_string(recognize(model, w, ctx)));
        },
        py::arg("model"), py::arg("w"), py::arg("mode") = "ahat", py::arg("p") = py::none(), py::arg("epsilon") = py::none());
  m.def("margin_recognize",
        [](const Model& model, const std::string& w, const py::object& margin) {
          return std::string(to_string(margin_recognize(model, w, to_rat(margin))));
        },
        py::arg("model"), py::arg("w"), py::arg("margin"));
  m.def("bit_growth",
        [](const Model& model, const std::vector<std::size_t>& lengths) {
          const BitGrowthReport r = bit_growth_trace(model, lengths);
          py::list rows;
          for (const auto& row : r.rows) {
            py::dict d;
            d["n"] = row.n;
            d["layer_max_bits"] = row.layer_max_bits;
            d["max_bits"] = row.max_bits;
            rows.append(d);
          }
          py::dict out;
          out["rows"] = rows;
          out["slope"] = r.slope;
          return out;
        },
        py::arg("model"), py::arg("lengths"));
}
