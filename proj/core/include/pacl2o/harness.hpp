#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacl2o/algorithms.hpp"
#include "pacl2o/pac.hpp"
#include "pacl2o/prior_training.hpp"
#include "pacl2o/problems.hpp"
#include "pacl2o/sampler.hpp"
#include "pacl2o/serialization.hpp"
#include "pacl2o/sublevel.hpp"

namespace pacl2o {

struct ExperimentConfig {
  Architecture arch = Architecture::quadratic;
  QuadraticClassConfig quadratic;
  LassoClassConfig lasso;
  SplitSizes splits{50, 50, 50, 50};
  int n_train = 50;  // iterations the risk and the constraint refer to
  int n_eval = 100;  // iterations shown in the loss curves
  bool imitation = true;
  // "plain": gradient descent / ISTA; "baseline": the tuned baseline itself.
  std::string imitation_reference = "baseline";
  InitConfig init;
  LocateConfig locate;
  SgldConfig sgld;
  SublevelSpec sublevel;
  PacConfig pac;
  std::vector<double> time_thresholds{1e-2, 1e-4, 1e-6};  // relative to loss(x0)
  int histogram_bins = 20;
  int timing_repeats = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Missing keys keep their defaults.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);
/// Hash of the canonical config dump.
std::string config_hash(const ExperimentConfig& cfg);

enum class Stage { data = 1, init, locate, sample, posterior, evaluate };
std::string to_string(Stage s);

/// Generator for one stage, a pure function of (seed, stage).
Rng stage_rng(std::uint64_t seed, Stage stage);

// Raised when no point inside the probability band was found (exit code 2).
class ConstraintNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Any other stage failure, tagged with the stage (exit code 3).
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& what);
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

struct Dataset {
  std::vector<Problem> all;
  DatasetSplit split;
};

Dataset generate_dataset(const ExperimentConfig& cfg);
Dataset dataset_from_problems(std::vector<Problem> all, const ExperimentConfig& cfg);

Vec initial_point(const ExperimentConfig& cfg);
/// Learned rule with the class-dependent prox unit; parameters are zero.
std::unique_ptr<LearnedRule> make_rule(const ExperimentConfig& cfg, const Dataset& data);
/// HBF tuned to the class for quadratics, FISTA for LASSO.
std::unique_ptr<UpdateRule> make_baseline(const ExperimentConfig& cfg);
/// Gradient descent with step 1 / L_hi for quadratics, ISTA for LASSO, or the
/// baseline when imitation_reference is "baseline".
std::unique_ptr<UpdateRule> make_reference(const ExperimentConfig& cfg);

InitResult stage_init(const ExperimentConfig& cfg, const Dataset& data);
PriorLocation stage_locate(const ExperimentConfig& cfg, const Dataset& data, const Vec& alpha_init);
SampleSet stage_sample(const ExperimentConfig& cfg, const Dataset& data, const PriorLocation& location);

struct PosteriorResult {
  PriorBuild prior;
  SufficientStats stats;
  PacCertificate certificate;
};

PosteriorResult stage_posterior(const ExperimentConfig& cfg, const Dataset& data, const SampleSet& samples);

struct Percentiles {
  std::vector<double> p10, p50, p90, mean;
};

/// Linear interpolation between order statistics; NaN entries sort last.
double percentile(std::vector<double> values, double q);
Percentiles loss_percentiles(const std::vector<std::vector<double>>& runs);

struct TimeToThreshold {
  double threshold = 0.0;
  double learned_seconds = 0.0;
  double baseline_seconds = 0.0;
  int learned_reached = 0;
  int baseline_reached = 0;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<int> counts;    // non-finite values land in the last bin
};

Histogram make_histogram(const std::vector<double>& values, int bins);

struct EvaluationReport {
  Percentiles learned;
  Percentiles baseline;
  std::vector<std::vector<double>> learned_runs;
  std::vector<std::vector<double>> baseline_runs;
  std::vector<TimeToThreshold> times;
  std::vector<double> test_losses;  // learned loss at n_train per test instance
  Histogram histogram;
  double bound = 0.0;
  ProbabilityEstimate test_probability;  // sequential estimate on the test split
  double test_hit_rate = 0.0;
  double test_risk_posterior = 0.0;  // posterior-averaged sublevel risk on the test split
  double test_risk_point = 0.0;
  double learned_median_at_train = 0.0;
  double baseline_median_at_train = 0.0;
};

/// Runs the point estimate and the baseline on every test instance. Test
/// sublevel risks use each point's stored probability estimate.
EvaluationReport evaluate(const ExperimentConfig& cfg, const Dataset& data, const SampleSet& samples,
                          const PosteriorResult& post);

/// loss_curves.csv, histogram.csv, cumtime.csv, sublevel_posterior.csv.
void emit_plot_data(const EvaluationReport& report, const SublevelSpec& spec, const std::filesystem::path& dir);

struct PipelineResult {
  Dataset data;
  InitResult init;
  PriorLocation location;
  SampleSet samples;
  PosteriorResult posterior;
  std::optional<EvaluationReport> report;
};

struct PipelineOptions {
  std::optional<std::filesystem::path> out_dir;  // persist every stage when set
  bool evaluate = true;
};

/// All stages in order. Throws ConstraintNotFound or StageError.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts = {});

// Stage file names inside an output directory.
namespace files {
inline constexpr const char* config = "config.json";
inline constexpr const char* data = "data.json";
inline constexpr const char* init = "init.json";
inline constexpr const char* location = "prior_location.json";
inline constexpr const char* progress = "progress.csv";
inline constexpr const char* samples = "samples.json";
inline constexpr const char* posterior = "posterior.json";
inline constexpr const char* certificate = "certificate.json";
inline constexpr const char* report = "report.json";
}  // namespace files

void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir, const ExperimentConfig& cfg);
void save_init(const std::filesystem::path& dir, const InitResult& r);
InitResult load_init(const std::filesystem::path& dir);
void save_location(const std::filesystem::path& dir, const PriorLocation& loc);
PriorLocation load_location(const std::filesystem::path& dir);
void save_samples(const std::filesystem::path& dir, const SampleSet& s);
SampleSet load_samples(const std::filesystem::path& dir);
void save_posterior(const std::filesystem::path& dir, const PosteriorResult& p, const std::string& hash);
PosteriorResult load_posterior(const std::filesystem::path& dir);
Json report_summary(const EvaluationReport& r);

}  // namespace pacl2o
