#include "paretoab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "paretoab/csv.hpp"

namespace paretoab {

std::vector<double> percent_change(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("percent_change: no values");
  const double worst = *std::min_element(values.begin(), values.end());
  if (!(worst > 0.0)) throw std::invalid_argument("percent_change: baseline must be positive");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] == worst ? 0.0 : values[i] / worst - 1.0;
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

void finish_wald(RegressionResult& r) {
  r.z = r.coef / r.se;
  r.p_value = two_sided_p(r.z);
  r.ci_low = r.coef - kZ95 * r.se;
  r.ci_high = r.coef + kZ95 * r.se;
}

RegressionResult fit_logistic_grouped(std::span<const double> x, std::span<const double> successes,
                                      std::span<const double> trials) {
  if (x.size() != successes.size() || x.size() != trials.size()) {
    throw std::invalid_argument("fit_logistic: input lengths differ");
  }
  double total_s = 0, total_n = 0, weighted_x = 0;
  double s_min = INFINITY, s_max = -INFINITY, f_min = INFINITY, f_max = -INFINITY;
  std::vector<double> distinct;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(trials[i] >= 0.0) || !(successes[i] >= 0.0) || successes[i] > trials[i] || !std::isfinite(x[i])) {
      throw std::invalid_argument("fit_logistic: invalid observation");
    }
    if (trials[i] == 0.0) continue;
    total_s += successes[i];
    total_n += trials[i];
    weighted_x += trials[i] * x[i];
    distinct.push_back(x[i]);
    if (successes[i] > 0) {
      s_min = std::min(s_min, x[i]);
      s_max = std::max(s_max, x[i]);
    }
    if (successes[i] < trials[i]) {
      f_min = std::min(f_min, x[i]);
      f_max = std::max(f_max, x[i]);
    }
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw std::invalid_argument("fit_logistic: predictor is constant, slope not identifiable");
  if (total_s == 0.0 || total_s == total_n) throw std::invalid_argument("fit_logistic: outcome has a single class");
  if (f_max <= s_min || s_max <= f_min) throw std::invalid_argument("fit_logistic: separation");

  // Centered predictor for conditioning; the slope is unaffected.
  const double center = weighted_x / total_n;
  Eigen::Vector2d beta(std::log(total_s / (total_n - total_s)), 0.0);
  Eigen::Matrix2d info;
  auto accumulate = [&](Eigen::Vector2d& score) {
    score.setZero();
    info.setZero();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (trials[i] == 0.0) continue;
      const double xc = x[i] - center;
      const double mu = sigmoid(beta[0] + beta[1] * xc);
      const double w = trials[i] * mu * (1.0 - mu);
      const double r = successes[i] - trials[i] * mu;
      score += Eigen::Vector2d(r, r * xc);
      info(0, 0) += w;
      info(0, 1) += w * xc;
      info(1, 1) += w * xc * xc;
    }
    info(1, 0) = info(0, 1);
  };

  RegressionResult r;
  r.n = static_cast<std::size_t>(total_n);
  Eigen::Vector2d score;
  for (r.iterations = 1; r.iterations <= 100; ++r.iterations) {
    accumulate(score);
    const Eigen::Vector2d step = info.ldlt().solve(score);
    beta += step;
    if (!beta.allFinite() || std::abs(beta[1]) > 1e8) throw std::invalid_argument("fit_logistic: separation");
    if (step.cwiseAbs().maxCoeff() < 1e-10) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, 100);
  accumulate(score);
  const Eigen::Matrix2d cov = info.inverse();
  r.coef = beta[1];
  r.intercept = beta[0] - beta[1] * center;
  r.se = std::sqrt(cov(1, 1));
  finish_wald(r);
  return r;
}

RegressionResult fit_logistic(std::span<const double> x, std::span<const std::uint8_t> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_logistic: input lengths differ");
  std::map<double, std::pair<double, double>> groups;  // x -> (successes, trials)
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& g = groups[x[i]];
    g.first += y[i] ? 1.0 : 0.0;
    g.second += 1.0;
  }
  std::vector<double> gx, gs, gn;
  for (const auto& [value, counts] : groups) {
    gx.push_back(value);
    gs.push_back(counts.first);
    gn.push_back(counts.second);
  }
  return fit_logistic_grouped(gx, gs, gn);
}

WaldDecision wald_test(const RegressionResult& r, double alpha) {
  return {r.p_value < alpha, (r.coef > 0) - (r.coef < 0)};
}

std::vector<HypothesisSpec> default_hypotheses() {
  return {{"H1", Predictor::kRecall, Outcome::kClicked, +1},
          {"H2", Predictor::kOrderDensity, Outcome::kOrderedGivenClicked, +1},
          {"H3", Predictor::kProduct, Outcome::kUnitsPerImpression, +1},
          {"H4", Predictor::kRecall, Outcome::kOrderedGivenClicked, -1}};
}

std::string predictor_name(Predictor p) {
  switch (p) {
    case Predictor::kRecall: return "recall";
    case Predictor::kOrderDensity: return "od";
    case Predictor::kProduct: return "product";
  }
  return "?";
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kClicked: return "clicked";
    case Outcome::kOrderedGivenClicked: return "ordered_given_clicked";
    case Outcome::kUnitsPerImpression: return "units_per_impression";
  }
  return "?";
}

namespace {

double metric_of(const FrontPoint& p, Predictor which) {
  switch (which) {
    case Predictor::kRecall: return p.recall;
    case Predictor::kOrderDensity: return p.od;
    case Predictor::kProduct: return p.product;
  }
  return 0.0;
}

struct Counts {
  std::vector<double> successes;
  std::vector<double> trials;
};

Counts outcome_counts(std::span<const Impression> log, Outcome outcome, std::size_t groups) {
  Counts c{std::vector<double>(groups, 0.0), std::vector<double>(groups, 0.0)};
  for (const Impression& imp : log) {
    if (imp.group >= groups) throw std::invalid_argument("impression group outside the configured groups");
    switch (outcome) {
      case Outcome::kClicked:
        c.trials[imp.group] += 1;
        c.successes[imp.group] += imp.clicked;
        break;
      case Outcome::kOrderedGivenClicked:
        if (!imp.clicked) break;
        c.trials[imp.group] += 1;
        c.successes[imp.group] += imp.ordered;
        break;
      case Outcome::kUnitsPerImpression:
        c.trials[imp.group] += 1;
        c.successes[imp.group] += imp.units > 0;
        break;
    }
  }
  return c;
}

void check_groups_present(std::span<const Impression> log, std::size_t groups) {
  std::vector<bool> seen(groups, false);
  for (const Impression& imp : log) {
    if (imp.group >= groups) throw std::invalid_argument("impression group outside the configured groups");
    seen[imp.group] = true;
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (!seen[g]) throw std::invalid_argument("group " + std::to_string(g) + " is absent from the impression log");
  }
}

}  // namespace

std::vector<HypothesisRow> run_hypotheses_by_group(std::span<const FrontPoint> group_metrics,
                                                   std::span<const Impression> log,
                                                   std::span<const HypothesisSpec> specs, double alpha) {
  const std::size_t g = group_metrics.size();
  if (g < 2) throw std::invalid_argument("run_hypotheses: need at least 2 groups");
  check_groups_present(log, g);
  std::vector<HypothesisRow> rows;
  for (const HypothesisSpec& spec : specs) {
    std::vector<double> metric(g);
    for (std::size_t i = 0; i < g; ++i) metric[i] = metric_of(group_metrics[i], spec.predictor);
    const std::vector<double> x = percent_change(metric);
    const Counts counts = outcome_counts(log, spec.outcome, g);
    HypothesisRow row;
    row.spec = spec;
    try {
      row.fit = fit_logistic_grouped(x, counts.successes, counts.trials);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(spec.id + ": " + e.what());
    }
    row.decision = wald_test(row.fit, alpha);
    row.matches_expected_sign = row.decision.direction == spec.expected_sign;
    rows.push_back(row);
  }
  return rows;
}

std::vector<FrontPoint> match_front_to_groups(std::span<const FrontPoint> front, std::span<const Impression> log) {
  if (log.empty()) throw std::invalid_argument("run_hypotheses: empty impression log");
  std::size_t g = 0;
  for (const Impression& imp : log) g = std::max<std::size_t>(g, imp.group + 1);
  std::vector<int> match(g, -1);
  std::vector<int> used(front.size(), -1);
  constexpr double kTol = 1e-12;
  for (const Impression& imp : log) {
    int& m = match[imp.group];
    if (m >= 0) {
      const FrontPoint& p = front[static_cast<std::size_t>(m)];
      if (std::abs(p.pi[0] - imp.pi_click) > kTol || std::abs(p.pi[1] - imp.pi_order) > kTol) {
        throw std::invalid_argument("group " + std::to_string(imp.group) + " is served with more than one preference");
      }
      continue;
    }
    for (std::size_t f = 0; f < front.size(); ++f) {
      if (std::abs(front[f].pi[0] - imp.pi_click) <= kTol && std::abs(front[f].pi[1] - imp.pi_order) <= kTol) {
        if (used[f] >= 0) {
          throw std::invalid_argument("front preference matched by groups " + std::to_string(used[f]) + " and " +
                                      std::to_string(imp.group));
        }
        m = static_cast<int>(f);
        used[f] = static_cast<int>(imp.group);
        break;
      }
    }
    if (m < 0) throw std::invalid_argument("group " + std::to_string(imp.group) + " preference not in the front");
  }
  std::vector<FrontPoint> out;
  for (std::size_t i = 0; i < g; ++i) {
    if (match[i] < 0) throw std::invalid_argument("group " + std::to_string(i) + " is absent from the impression log");
    out.push_back(front[static_cast<std::size_t>(match[i])]);
  }
  for (std::size_t f = 0; f < front.size(); ++f) {
    if (used[f] < 0) throw std::invalid_argument("front point " + std::to_string(f) + " has no group in the log");
  }
  return out;
}

std::vector<HypothesisRow> run_hypotheses(std::span<const FrontPoint> front, std::span<const Impression> log,
                                          std::span<const HypothesisSpec> specs, double alpha) {
  const std::vector<FrontPoint> by_group = match_front_to_groups(front, log);
  return run_hypotheses_by_group(by_group, log, specs, alpha);
}

void write_report_csv(std::ostream& out, std::span<const HypothesisRow> rows) {
  out << "hypothesis,predictor,outcome,coef,se,z,p_value,ci_low,ci_high,significant,matches_expected_sign\n";
  for (const HypothesisRow& r : rows) {
    out << r.spec.id << ',' << predictor_name(r.spec.predictor) << ',' << outcome_name(r.spec.outcome) << ','
        << csv::num(r.fit.coef) << ',' << csv::num(r.fit.se) << ',' << csv::num(r.fit.z) << ','
        << csv::num(r.fit.p_value) << ',' << csv::num(r.fit.ci_low) << ',' << csv::num(r.fit.ci_high) << ','
        << (r.decision.significant ? "true" : "false") << ',' << (r.matches_expected_sign ? "true" : "false")
        << '\n';
  }
}

std::string format_p_value(double p) {
  if (p < 1e-4) return "p<10^-4";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

namespace {

std::string hypothesis_label(const HypothesisSpec& s) {
  static const std::map<Predictor, std::string> metric{
      {Predictor::kRecall, "Recall@K"}, {Predictor::kOrderDensity, "OD@K"}, {Predictor::kProduct, "Recall*OD"}};
  static const std::map<Outcome, std::string> kpi{
      {Outcome::kClicked, "CTR"}, {Outcome::kOrderedGivenClicked, "CVR"}, {Outcome::kUnitsPerImpression, "units"}};
  return s.id + ": " + metric.at(s.predictor) + " vs. " + kpi.at(s.outcome);
}

}  // namespace

std::string render_report_table(std::span<const HypothesisRow> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %10s  %-9s  %-18s %s\n", "Hypothesis", "parameter", "p-value",
                "[0.025, 0.975]", "significant");
  out << line;
  for (const HypothesisRow& r : rows) {
    char ci[48];
    std::snprintf(ci, sizeof ci, "[%.3f, %.3f]", r.fit.ci_low, r.fit.ci_high);
    std::snprintf(line, sizeof line, "%-28s %10.4f  %-9s  %-18s %s\n", hypothesis_label(r.spec).c_str(), r.fit.coef,
                  format_p_value(r.fit.p_value).c_str(), ci, r.decision.significant ? "yes" : "no");
    out << line;
  }
  return out.str();
}

std::vector<ScatterRow> scatter_data(std::span<const FrontPoint> group_metrics, std::span<const Impression> log,
                                     std::span<const HypothesisRow> rows, int curve_samples) {
  const std::size_t g = group_metrics.size();
  std::vector<ScatterRow> out;
  for (const HypothesisRow& row : rows) {
    std::vector<double> metric(g);
    for (std::size_t i = 0; i < g; ++i) metric[i] = metric_of(group_metrics[i], row.spec.predictor);
    const std::vector<double> x = percent_change(metric);
    const Counts counts = outcome_counts(log, row.spec.outcome, g);
    std::vector<double> rate(g, 0.0);
    for (std::size_t i = 0; i < g; ++i) rate[i] = counts.trials[i] > 0 ? counts.successes[i] / counts.trials[i] : 0.0;
    const double worst_rate = *std::min_element(rate.begin(), rate.end());
    for (std::size_t i = 0; i < g; ++i) {
      out.push_back({row.spec.id, "group", static_cast<int>(i), x[i], rate[i],
                     worst_rate > 0 ? rate[i] / worst_rate - 1.0 : 0.0});
    }
    const double x_max = *std::max_element(x.begin(), x.end());
    std::vector<double> fitted(static_cast<std::size_t>(curve_samples));
    for (int s = 0; s < curve_samples; ++s) {
      const double xs = curve_samples > 1 ? x_max * s / (curve_samples - 1) : 0.0;
      fitted[static_cast<std::size_t>(s)] = sigmoid(row.fit.intercept + row.fit.coef * xs);
    }
    const double worst_fit = *std::min_element(fitted.begin(), fitted.end());
    for (int s = 0; s < curve_samples; ++s) {
      const double xs = curve_samples > 1 ? x_max * s / (curve_samples - 1) : 0.0;
      const double f = fitted[static_cast<std::size_t>(s)];
      out.push_back({row.spec.id, "fit", -1, xs, f, worst_fit > 0 ? f / worst_fit - 1.0 : 0.0});
    }
  }
  return out;
}

void write_scatter_csv(std::ostream& out, std::span<const ScatterRow> rows) {
  out << "hypothesis,kind,group,x,kpi,kpi_change\n";
  for (const ScatterRow& r : rows) {
    out << r.hypothesis << ',' << r.kind << ',' << r.group << ',' << csv::num(r.x) << ',' << csv::num(r.kpi) << ','
        << csv::num(r.kpi_change) << '\n';
  }
}

}  // namespace paretoab
