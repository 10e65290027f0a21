#include "pacl2o/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pacl2o {

Json vec_to_json(const Vec& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array of numbers");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

Json mat_to_json(const Mat& m) {
  Json j = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a nonempty array of rows");
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw std::invalid_argument("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

void to_json(Json& j, const QuadraticInstance& inst) {
  j = Json{{"kind", "quadratic"}, {"diag", vec_to_json(inst.diag)}, {"rhs", vec_to_json(inst.rhs)}};
}

void from_json(const Json& j, QuadraticInstance& inst) {
  if (j.at("kind") != "quadratic") throw std::invalid_argument("not a quadratic instance");
  inst.diag = vec_from_json(j.at("diag"));
  inst.rhs = vec_from_json(j.at("rhs"));
}

void to_json(Json& j, const LassoInstance& inst) {
  j = Json{{"kind", "lasso"}, {"rhs", vec_to_json(inst.rhs)}, {"reg", inst.reg}};
}

void from_json(const Json& j, LassoInstance& inst) {
  if (j.at("kind") != "lasso") throw std::invalid_argument("not a lasso instance");
  inst.rhs = vec_from_json(j.at("rhs"));
  inst.reg = j.at("reg").get<double>();
}

void to_json(Json& j, const LassoClassContext& ctx) {
  j = Json{{"design", mat_to_json(ctx.design)}, {"lipschitz", ctx.lipschitz}};
}

void from_json(const Json& j, LassoClassContext& ctx) {
  ctx.design = mat_from_json(j.at("design"));
  ctx.lipschitz = j.at("lipschitz").get<double>();
}

Json problems_to_json(std::span<const Problem> problems) {
  Json j;
  Json list = Json::array();
  if (problems.empty()) {
    j["kind"] = "quadratic";
    j["instances"] = list;
    return j;
  }
  const ProblemKind kind = problems.front().kind();
  for (const Problem& p : problems) {
    if (p.kind() != kind) throw std::invalid_argument("problems_to_json: mixed problem kinds");
    if (kind == ProblemKind::quadratic) {
      list.push_back(p.as_quadratic());
    } else {
      if (p.shared_context() != problems.front().shared_context()) {
        throw std::invalid_argument("problems_to_json: instances do not share one context");
      }
      list.push_back(p.as_lasso());
    }
  }
  j["kind"] = kind == ProblemKind::quadratic ? "quadratic" : "lasso";
  if (kind == ProblemKind::lasso) j["context"] = problems.front().context();
  j["instances"] = std::move(list);
  return j;
}

std::vector<Problem> problems_from_json(const Json& j) {
  std::vector<Problem> out;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") {
    for (const Json& e : j.at("instances")) out.push_back(Problem::quadratic(e.get<QuadraticInstance>()));
  } else if (kind == "lasso") {
    auto ctx = std::make_shared<const LassoClassContext>(j.at("context").get<LassoClassContext>());
    for (const Json& e : j.at("instances")) out.push_back(Problem::lasso(e.get<LassoInstance>(), ctx));
  } else {
    throw std::invalid_argument("unknown problem kind: " + kind);
  }
  return out;
}

void to_json(Json& j, const ProbabilityEstimate& est) {
  j = Json{{"point", est.point},
           {"a", est.posterior.a},
           {"b", est.posterior.b},
           {"draws", est.draws_used},
           {"conclusive", est.conclusive}};
}

void from_json(const Json& j, ProbabilityEstimate& est) {
  est.point = j.at("point").get<double>();
  est.posterior.a = j.at("a").get<double>();
  est.posterior.b = j.at("b").get<double>();
  est.draws_used = j.at("draws").get<int>();
  est.conclusive = j.at("conclusive").get<bool>();
}

void to_json(Json& j, const SampleSet& s) {
  Json pts = Json::array();
  for (const Vec& p : s.points) pts.push_back(vec_to_json(p));
  j = Json{{"points", std::move(pts)},
           {"accepted", s.accepted_flags},
           {"estimates", s.estimates},
           {"proposals", s.proposals},
           {"accepted_total", s.accepted}};
}

void from_json(const Json& j, SampleSet& s) {
  s.points.clear();
  for (const Json& p : j.at("points")) s.points.push_back(vec_from_json(p));
  s.accepted_flags = j.at("accepted").get<std::vector<bool>>();
  s.estimates = j.at("estimates").get<std::vector<ProbabilityEstimate>>();
  s.proposals = j.at("proposals").get<int>();
  s.accepted = j.at("accepted_total").get<int>();
  if (s.points.size() != s.estimates.size() || s.points.size() != s.accepted_flags.size()) {
    throw std::invalid_argument("sample set fields differ in length");
  }
}

void to_json(Json& j, const DiscreteMeasure& m) {
  j = Json{{"support_ids", m.support_ids}, {"log_weights", m.log_weights}};
}

void from_json(const Json& j, DiscreteMeasure& m) {
  m.support_ids = j.at("support_ids").get<std::vector<std::size_t>>();
  m.log_weights = j.at("log_weights").get<std::vector<double>>();
  if (m.support_ids.size() != m.log_weights.size()) throw std::invalid_argument("measure fields differ in length");
}

void to_json(Json& j, const SufficientStats& s) { j = Json{{"t1", s.t1}, {"t2", s.t2}}; }

void from_json(const Json& j, SufficientStats& s) {
  s.t1 = j.at("t1").get<std::vector<double>>();
  s.t2 = j.at("t2").get<std::vector<double>>();
}

Json rule_to_json(const LearnedRule& rule) {
  Json j{{"architecture", to_string(rule.architecture())}, {"alpha", vec_to_json(rule.parameters())}};
  if (const auto* lasso = dynamic_cast<const LearnedLassoRule*>(&rule)) j["tau_unit"] = lasso->tau_unit();
  return j;
}

std::unique_ptr<LearnedRule> rule_from_json(const Json& j) {
  const Architecture arch = architecture_from_string(j.at("architecture").get<std::string>());
  auto rule = make_learned_rule(arch, j.value("tau_unit", 1.0));
  rule->set_parameters(vec_from_json(j.at("alpha")));
  return rule;
}

Json certificate_to_json(const PacCertificate& c, const std::string& config_hash) {
  Json weights = Json::array();
  for (std::size_t i = 0; i < c.posterior.size(); ++i) {
    weights.push_back(Json{{"id", c.posterior.support_ids[i]}, {"weight", c.posterior.weight(i)}});
  }
  return Json{{"lambda_star", c.lambda_star},
              {"bound", c.bound},
              {"bound_explicit", c.bound_explicit},
              {"kl", c.kl},
              {"emp_risk", c.emp_risk},
              {"point_emp_risk", c.point_emp_risk},
              {"weights", std::move(weights)},
              {"posterior", c.posterior},
              {"point_estimate", c.point_estimate},
              {"config_hash", config_hash}};
}

PacCertificate certificate_from_json(const Json& j) {
  PacCertificate c;
  c.lambda_star = j.at("lambda_star").get<double>();
  c.bound = j.at("bound").get<double>();
  c.bound_explicit = j.at("bound_explicit").get<double>();
  c.kl = j.at("kl").get<double>();
  c.emp_risk = j.at("emp_risk").get<double>();
  c.point_emp_risk = j.at("point_emp_risk").get<double>();
  c.posterior = j.at("posterior").get<DiscreteMeasure>();
  c.point_estimate = j.at("point_estimate").get<std::size_t>();
  return c;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace pacl2o
