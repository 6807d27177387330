#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "wobble/detect.hpp"
#include "wobble/measure.hpp"
#include "wobble/stats.hpp"

// JSON forms of the result types. Field names are stable; the CLI writes
// these and reads distributions back for `compare`.
namespace wobble {

nlohmann::json to_json(const DistributionMeta& meta);
DistributionMeta meta_from_json(const nlohmann::json& j);

/// {"meta":{...},"values":[f64,...]}
nlohmann::json to_json(const WobblinessDistribution& d);
WobblinessDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BoxplotSummary& b);
nlohmann::json to_json(const TestResult& r);
nlohmann::json to_json(const RocCurve& roc);
nlohmann::json to_json(const DecompositionReport& r);
nlohmann::json to_json(const ComparisonReport& r);
nlohmann::json to_json(const DetectionReport& r);
nlohmann::json to_json(const BatteryResult& r);

/// threshold,fpr,tpr rows with a header line.
std::string roc_to_csv(const RocCurve& roc);

/// Header plus one row: n,mean,q25,q50,q75,lower_fence,upper_fence,outliers
std::string boxplot_csv_header();
std::string boxplot_csv_row(const BoxplotSummary& b, std::size_t n);

}  // namespace wobble
