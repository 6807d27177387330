#include "wobble/serialize.hpp"

#include <cmath>
#include <sstream>

namespace wobble {

using nlohmann::json;

namespace {

// JSON has no infinities; encode them as strings so nothing is lost.
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

json to_json(const DistributionMeta& m) {
  json j = {{"sigma", m.sigma},
            {"n_samples", m.n_samples},
            {"kind", std::string(to_string(m.kind))},
            {"c", m.c},
            {"clip", std::string(to_string(m.clip))},
            {"seed", m.seed},
            {"prob_source", std::string(to_string(m.prob_source))},
            {"prob_source_degraded", m.prob_source_degraded},
            {"oracle", m.oracle},
            {"point_count", m.point_count},
            {"class_filter", m.class_filter ? json(*m.class_filter) : json(nullptr)}};
  if (!m.label.empty()) j["label"] = m.label;
  return j;
}

DistributionMeta meta_from_json(const json& j) {
  try {
    DistributionMeta m;
    m.sigma = j.at("sigma").get<double>();
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.kind = parse_measure_kind(j.at("kind").get<std::string>());
    m.c = j.at("c").get<double>();
    m.clip = parse_clip(j.at("clip").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.prob_source = parse_prob_source(j.value("prob_source", std::string("top1_onehot")));
    m.prob_source_degraded = j.value("prob_source_degraded", false);
    m.oracle = j.value("oracle", std::string());
    m.point_count = j.at("point_count").get<std::size_t>();
    if (j.contains("class_filter") && !j["class_filter"].is_null()) {
      m.class_filter = j["class_filter"].get<std::uint32_t>();
    }
    m.label = j.value("label", std::string());
    return m;
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("distribution meta: ") + e.what());
  }
}

json to_json(const WobblinessDistribution& d) {
  return {{"meta", to_json(d.meta)}, {"values", d.values}};
}

WobblinessDistribution distribution_from_json(const json& j) {
  if (!j.is_object() || !j.contains("meta") || !j.contains("values")) {
    fail(Errc::parse_error, "distribution must be {\"meta\":{...},\"values\":[...]}");
  }
  WobblinessDistribution d;
  d.meta = meta_from_json(j["meta"]);
  try {
    d.values = j["values"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("distribution values: ") + e.what());
  }
  for (double v : d.values) {
    if (!std::isfinite(v)) fail(Errc::parse_error, "distribution values must be finite");
  }
  if (d.values.size() != d.meta.point_count) {
    fail(Errc::parse_error, "distribution point_count disagrees with its values");
  }
  return d;
}

json to_json(const BoxplotSummary& b) {
  return {{"q25", b.q25},
          {"q50", b.q50},
          {"q75", b.q75},
          {"iqr", b.iqr()},
          {"lower_fence", b.lower_fence},
          {"upper_fence", b.upper_fence},
          {"mean", b.mean},
          {"outlier_indices", b.outlier_indices}};
}

json to_json(const TestResult& r) {
  return {{"test", r.test_name},
          {"statistic", number(r.statistic)},
          {"p_value", r.p_value},
          {"n_a", r.n_a},
          {"n_b", r.n_b},
          {"outliers_removed", r.outliers_removed},
          {"degenerate", r.degenerate},
          {"permutations", r.permutations}};
}

json to_json(const RocCurve& roc) {
  json pts = json::array();
  for (const auto& p : roc.points) {
    pts.push_back({{"threshold", number(p.threshold)}, {"fpr", p.fpr}, {"tpr", p.tpr}});
  }
  return {{"auc", roc.auc}, {"points", pts}};
}

json to_json(const DecompositionReport& r) {
  return {{"bias2", number(r.bias2)},
          {"var_f", r.var_f},
          {"var_y", r.var_y},
          {"loss", number(r.loss)}};
}

json to_json(const ComparisonReport& r) {
  json tests = json::array();
  for (const auto& t : r.results) tests.push_back(to_json(t));
  return {{"first", {{"meta", to_json(r.first_meta)}, {"boxplot", to_json(r.first_box)}}},
          {"second", {{"meta", to_json(r.second_meta)}, {"boxplot", to_json(r.second_box)}}},
          {"tests", tests},
          {"iqr_order", r.iqr_order == 0 ? "equal" : (r.iqr_order < 0 ? "first_smaller"
                                                                      : "first_larger")}};
}

json to_json(const DetectionReport& r) {
  json tests = json::array();
  for (const auto& t : r.results) tests.push_back(to_json(t));
  return {{"trigger", r.trigger_id},
          {"sigma", r.sigma},
          {"tests", tests},
          {"target_hit_rate", r.target_hit_rate ? json(*r.target_hit_rate) : json(nullptr)},
          {"clean", to_json(r.clean)},
          {"triggered", to_json(r.triggered)}};
}

json to_json(const BatteryResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cj = {{"network", c.network_id},
               {"trigger", c.trigger_id},
               {"implanted", c.implanted},
               {"failed", c.failed},
               {"p_values", c.p_values}};
    if (c.failed) cj["error"] = c.error;
    if (c.target_hit_rate) cj["target_hit_rate"] = *c.target_hit_rate;
    cells.push_back(std::move(cj));
  }
  json roc = json::object();
  for (const auto& [name, curve] : r.roc) roc[name] = to_json(curve);
  return {{"cells", cells}, {"failed_cells", r.failed_cells}, {"roc", roc}};
}

std::string roc_to_csv(const RocCurve& roc) {
  std::ostringstream ss;
  ss << "threshold,fpr,tpr\n";
  for (const auto& p : roc.points) {
    ss << format_double(p.threshold) << ',' << format_double(p.fpr) << ','
       << format_double(p.tpr) << '\n';
  }
  return ss.str();
}

std::string boxplot_csv_header() {
  return "n,mean,q25,q50,q75,lower_fence,upper_fence,outliers\n";
}

std::string boxplot_csv_row(const BoxplotSummary& b, std::size_t n) {
  std::ostringstream ss;
  ss << n << ',' << format_double(b.mean) << ',' << format_double(b.q25) << ','
     << format_double(b.q50) << ',' << format_double(b.q75) << ','
     << format_double(b.lower_fence) << ',' << format_double(b.upper_fence) << ','
     << b.outlier_indices.size() << '\n';
  return ss.str();
}

}  // namespace wobble
