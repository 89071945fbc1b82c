#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rdiaudit/classifier.hpp"
#include "rdiaudit/discovery.hpp"
#include "rdiaudit/lang_registry.hpp"
#include "rdiaudit/ledger.hpp"
#include "rdiaudit/pipeline.hpp"
#include "rdiaudit/rdi.hpp"
#include "rdiaudit/reporting.hpp"
#include "rdiaudit/util/text.hpp"
#include "rdiaudit/validation.hpp"

namespace py = pybind11;
using namespace rdiaudit;
using nlohmann::json;

namespace {

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<long long>());
    case json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get_ref<const std::string&>());
    case json::value_t::array: {
      py::list out;
      for (const auto& x : j) out.append(to_py(x));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
    default: return py::none();
  }
}

json from_py(const py::handle& h) {
  if (h.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(h)) return h.cast<bool>();
  if (py::isinstance<py::int_>(h)) return h.cast<long long>();
  if (py::isinstance<py::float_>(h)) return h.cast<double>();
  if (py::isinstance<py::str>(h)) return h.cast<std::string>();
  if (py::isinstance<py::dict>(h)) {
    json out = json::object();
    for (auto [k, v] : h.cast<py::dict>()) out[py::str(k).cast<std::string>()] = from_py(v);
    return out;
  }
  if (py::isinstance<py::list>(h) || py::isinstance<py::tuple>(h)) {
    json out = json::array();
    for (auto x : h) out.push_back(from_py(x));
    return out;
  }
  throw py::type_error("unsupported value in options");
}

py::dict verdict_dict(const ClassifierVerdict& v) { return to_py(verdict_to_json(v)).cast<py::dict>(); }

cli::Stage stage_arg(const std::string& name) {
  auto s = cli::stage_from_string(name);
  if (!s || *s == cli::Stage::Serve) throw Error(ErrorCode::ConfigError, "unknown stage " + name);
  return *s;
}

}  // namespace

PYBIND11_MODULE(_rdiaudit, m) {
  m.doc() = "Dataset visibility audit core";

  static py::exception<Error> error_type(m, "RdiauditError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(py::str(e.what()));
      exc.attr("code") = py::str(std::string(to_string(e.code())));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("compute_rdi", &rdi::compute_rdi, py::arg("count"), py::arg("population_millions"));
  m.def("average_catalogue_rdi", [](long lre, long ldc, double population) {
    rdi::RdiEntry e;
    e.population_millions = population;
    e.per_source[catalogue::Source::LreMap] = {lre, rdi::compute_rdi(lre, population)};
    e.per_source[catalogue::Source::Ldc] = {ldc, rdi::compute_rdi(ldc, population)};
    return rdi::average_catalogue_rdi(e);
  }, py::arg("lre_count"), py::arg("ldc_count"), py::arg("population_millions"));
  m.def("display", &rdi::display, py::arg("rdi"));
  m.def("round_half_up", &text::round_half_up, py::arg("value"), py::arg("places") = 2);
  m.def("distribution_summary", [](const std::vector<double>& values) {
    auto edges = rdi::default_bin_edges();
    auto s = rdi::distribution_summary(values, edges);
    py::list rows;
    for (const auto& r : report::histogram_rows(s)) {
      py::dict d;
      d["class"] = r.label;
      d["count"] = r.count;
      rows.append(d);
    }
    py::dict out;
    out["total"] = s.total;
    out["zero"] = s.zero_count;
    out["over_one"] = s.over_one_count;
    out["classes"] = rows;
    return out;
  }, py::arg("values"));
  m.def("classify_pattern", [](long mined, long lre, long ldc) {
    return std::string(report::to_string(report::classify_pattern(mined, lre, ldc)));
  }, py::arg("mined"), py::arg("lre"), py::arg("ldc"));
  m.def("median_lag", [](const std::vector<std::pair<std::optional<int>, std::vector<int>>>& datasets) {
    std::vector<report::DatasetTimeline> tl;
    for (const auto& [emergence, usage] : datasets) {
      report::DatasetTimeline t;
      t.emergence_year = emergence;
      for (int y : usage) ++t.usage[y];
      tl.push_back(std::move(t));
    }
    return report::emergence_usage_trends(tl).median_lag;
  }, py::arg("datasets"), "Median of first usage year minus emergence year over (emergence, usage_years) pairs.");

  m.def("normalize_label", [](const std::string& raw, const std::filesystem::path& languages,
                              const std::filesystem::path& rules) {
    auto registry = lang::LanguageRegistry::load(languages);
    auto rs = lang::RuleSet::load(rules);
    auto o = lang::normalize_label(raw, rs, registry);
    return py::make_tuple(std::string(lang::to_string(o.kind)), o.kind == lang::NormalizationOutcome::Kind::Mapped
                                                                    ? py::object(py::str(o.code))
                                                                    : py::object(py::none()));
  }, py::arg("raw"), py::arg("languages_csv"), py::arg("rules_tsv"));

  m.def("build_query", [](const std::string& name, std::optional<std::vector<std::string>> terms) {
    return discovery::build_query(name, terms.value_or(discovery::DiscoveryConfig{}.query_terms));
  }, py::arg("language_name"), py::arg("terms") = py::none());
  m.def("mention_id", &make_mention_id, py::arg("language"), py::arg("citing_id"), py::arg("cited_id"),
        py::arg("context"));
  m.def("heuristic_verdict", [](const std::string& text) { return verdict_dict(classify::heuristic_verdict(text)); },
        py::arg("context"));
  m.def("parse_llm_answer", [](const std::string& raw, const std::string& context) {
    return verdict_dict(classify::parse_llm_answer(raw, context_digest(context)));
  }, py::arg("raw"), py::arg("context"));

  m.def("ledger_summary", [](const std::filesystem::path& workspace) {
    cli::Workspace ws(workspace);
    auto corpus = cli::load_corpus(ws);
    auto events = validation::LedgerFile(ws.ledger()).load();
    auto store = validation::replay(std::move(corpus.candidates), events);
    json out = validation::pipeline_summary(store).to_json();
    try {
      out["precision_pct"] = validation::precision(store);
    } catch (const Error&) {
      out["precision_pct"] = nullptr;
    }
    out["revision"] = store.revision();
    return to_py(out);
  }, py::arg("workspace"));

  m.def("run_stage", [](const std::string& stage, const std::filesystem::path& workspace, py::dict options) {
    auto cfg = cli::load_config(workspace, from_py(options));
    cli::StageResult r;
    {
      py::gil_scoped_release release;
      r = cli::run_stage(stage_arg(stage), cfg);
    }
    py::dict out;
    out["stage"] = stage;
    out["exit_code"] = r.exit_code;
    out["skipped"] = r.skipped;
    out["summary"] = r.summary;
    out["details"] = to_py(r.details);
    return out;
  }, py::arg("stage"), py::arg("workspace"), py::arg("options") = py::dict());
  m.def("status", [](const std::filesystem::path& workspace) {
    return to_py(cli::workspace_status(cli::Workspace(workspace)));
  }, py::arg("workspace"));
}
