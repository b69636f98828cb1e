#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "paretoab/absim.hpp"
#include "paretoab/metrics.hpp"

namespace paretoab {

/// v_i / min_j v_j - 1; the worst group maps to exactly 0.
std::vector<double> percent_change(std::span<const double> values);

double normal_cdf(double x);

/// Two-sided p-value for a standard-normal statistic.
double two_sided_p(double z);

inline constexpr double kZ95 = 1.96;

struct RegressionResult {
  double coef = 0.0;
  double intercept = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  bool converged = false;
  int iterations = 0;
};

/// Fills z, p and the 95% interval from coef and se.
void finish_wald(RegressionResult& r);

/// Logistic regression y ~ intercept + coef * x by IRLS (Newton). Stops when
/// the largest parameter step is below 1e-10 or after 100 iterations. The
/// standard error comes from the inverse observed information.
/// Throws std::invalid_argument for fewer than two distinct x values, a
/// single-class outcome or (quasi-)complete separation.
RegressionResult fit_logistic(std::span<const double> x, std::span<const std::uint8_t> y);

/// Same model on binomial counts: successes[i] out of trials[i] at x[i].
RegressionResult fit_logistic_grouped(std::span<const double> x, std::span<const double> successes,
                                      std::span<const double> trials);

struct WaldDecision {
  bool significant = false;
  int direction = 0;  // sign of the coefficient
};

WaldDecision wald_test(const RegressionResult& r, double alpha);

enum class Predictor { kRecall, kOrderDensity, kProduct };
enum class Outcome { kClicked, kOrderedGivenClicked, kUnitsPerImpression };

struct HypothesisSpec {
  std::string id;
  Predictor predictor = Predictor::kRecall;
  Outcome outcome = Outcome::kClicked;
  int expected_sign = +1;
};

/// H1 recall -> CTR (+), H2 OD -> CVR (+), H3 recall*OD -> units (+),
/// H4 recall -> CVR (-).
std::vector<HypothesisSpec> default_hypotheses();

std::string predictor_name(Predictor p);
std::string outcome_name(Outcome o);

struct HypothesisRow {
  HypothesisSpec spec;
  RegressionResult fit;
  WaldDecision decision;
  bool matches_expected_sign = false;
};

/// Regresses each impression's outcome on the fractional change (vs. the
/// worst group) of its group's offline metric. `group_metrics[i]` holds the
/// offline metrics of the model served to group i; every group must appear
/// in the log.
std::vector<HypothesisRow> run_hypotheses_by_group(std::span<const FrontPoint> group_metrics,
                                                   std::span<const Impression> log,
                                                   std::span<const HypothesisSpec> specs, double alpha);

/// Matches log groups to front points by preference vector (one-to-one)
/// and runs run_hypotheses_by_group.
std::vector<HypothesisRow> run_hypotheses(std::span<const FrontPoint> front, std::span<const Impression> log,
                                          std::span<const HypothesisSpec> specs, double alpha);

/// For each log group, the front point with the same preference vector.
std::vector<FrontPoint> match_front_to_groups(std::span<const FrontPoint> front, std::span<const Impression> log);

// CSV: hypothesis,predictor,outcome,coef,se,z,p_value,ci_low,ci_high,significant,matches_expected_sign
void write_report_csv(std::ostream& out, std::span<const HypothesisRow> rows);
/// Aligned text table: hypothesis, parameter, p-value, [0.025, 0.975].
std::string render_report_table(std::span<const HypothesisRow> rows);
std::string format_p_value(double p);

/// Figure data per hypothesis: one aggregated point per group and samples
/// of the fitted logistic curve.
struct ScatterRow {
  std::string hypothesis;
  std::string kind;  // "group" or "fit"
  int group = -1;
  double x = 0.0;           // fractional metric change vs. worst group
  double kpi = 0.0;         // observed (group) or fitted (fit) outcome rate
  double kpi_change = 0.0;  // fractional change vs. the lowest rate in the panel
};

std::vector<ScatterRow> scatter_data(std::span<const FrontPoint> group_metrics, std::span<const Impression> log,
                                     std::span<const HypothesisRow> rows, int curve_samples = 51);
void write_scatter_csv(std::ostream& out, std::span<const ScatterRow> rows);

/// Minimal SVG rendering of one hypothesis panel.
void write_scatter_svg(const std::filesystem::path& path, const std::string& title,
                       std::span<const ScatterRow> panel);

}  // namespace paretoab
