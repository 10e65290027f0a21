#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pacl2o/algorithms.hpp"
#include "pacl2o/pac.hpp"
#include "pacl2o/prior_training.hpp"
#include "pacl2o/problems.hpp"
#include "pacl2o/sampler.hpp"

namespace pacl2o {

using Json = nlohmann::json;

Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);

/// Row-major nested arrays.
Json mat_to_json(const Mat& m);
Mat mat_from_json(const Json& j);

void to_json(Json& j, const QuadraticInstance& inst);
void from_json(const Json& j, QuadraticInstance& inst);
void to_json(Json& j, const LassoInstance& inst);
void from_json(const Json& j, LassoInstance& inst);
void to_json(Json& j, const LassoClassContext& ctx);
void from_json(const Json& j, LassoClassContext& ctx);

/// {"kind": ..., "context": ... (LASSO only), "instances": [...]}. All problems
/// must be of one kind and share the LASSO context.
Json problems_to_json(std::span<const Problem> problems);
std::vector<Problem> problems_from_json(const Json& j);

void to_json(Json& j, const ProbabilityEstimate& est);
void from_json(const Json& j, ProbabilityEstimate& est);
void to_json(Json& j, const SampleSet& s);
void from_json(const Json& j, SampleSet& s);
void to_json(Json& j, const DiscreteMeasure& m);
void from_json(const Json& j, DiscreteMeasure& m);
void to_json(Json& j, const SufficientStats& s);
void from_json(const Json& j, SufficientStats& s);

/// Architecture, tau unit and the flat parameter vector.
Json rule_to_json(const LearnedRule& rule);
std::unique_ptr<LearnedRule> rule_from_json(const Json& j);

Json certificate_to_json(const PacCertificate& c, const std::string& config_hash);
PacCertificate certificate_from_json(const Json& j);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& data);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace pacl2o
