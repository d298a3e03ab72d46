#include "affect/metrics.hpp"

#include <cmath>
#include <sstream>

#include "affect/csv.hpp"
#include "affect/error.hpp"

namespace affect {

double ccc(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw ShapeError("ccc: length mismatch");
  if (n < 2) throw DataError("ccc: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= n;
  vy /= n;
  cov /= n;
  const double dm = mx - my;
  const double denom = vx + vy + dm * dm;
  if (denom == 0.0) {
    throw UndefinedMetricError(
        "ccc: both inputs constant with equal means (zero denominator)");
  }
  return 2.0 * cov / denom;
}

double va_score(double ccc_v, double ccc_a) { return (ccc_v + ccc_a) / 2.0; }

ExpressionScore expression_score(std::span<const int> pred,
                                 std::span<const int> truth,
                                 bool include_absent_classes) {
  const std::size_t n = pred.size();
  if (n != truth.size()) throw ShapeError("expression_score: length mismatch");
  if (n == 0) throw EmptyInputError("expression_score: empty input");

  int tp[kExpressionClasses] = {0};
  int fp[kExpressionClasses] = {0};
  int fn[kExpressionClasses] = {0};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pred[i] == truth[i]) {
      ++correct;
      ++tp[truth[i]];
    } else {
      ++fp[pred[i]];
      ++fn[truth[i]];
    }
  }

  double f1_sum = 0.0;
  int f1_count = 0;
  for (int c = 0; c < kExpressionClasses; ++c) {
    const bool present = tp[c] + fp[c] + fn[c] > 0;
    if (!present && !include_absent_classes) continue;
    double f1 = 0.0;
    if (present && tp[c] > 0) {
      const double prec = static_cast<double>(tp[c]) / (tp[c] + fp[c]);
      const double rec = static_cast<double>(tp[c]) / (tp[c] + fn[c]);
      f1 = 2.0 * prec * rec / (prec + rec);
    }
    f1_sum += f1;
    ++f1_count;
  }

  ExpressionScore s;
  s.accuracy = static_cast<double>(correct) / n;
  s.macro_f1 = f1_count > 0 ? f1_sum / f1_count : 0.0;
  s.expr_score = 0.67 * s.macro_f1 + 0.33 * s.accuracy;
  return s;
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ShapeError("mse: length mismatch");
  if (pred.empty()) throw EmptyInputError("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return sum / pred.size();
}

double custom_regression_metric(std::span<const double> pred,
                                std::span<const double> truth) {
  return 2.0 * ccc(truth, pred) - mse(pred, truth);
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "ccc_valence=" << csv::format_value(r.ccc_valence) << '\n'
      << "ccc_arousal=" << csv::format_value(r.ccc_arousal) << '\n'
      << "va_score=" << csv::format_value(r.va_score) << '\n'
      << "macro_f1=" << csv::format_value(r.macro_f1) << '\n'
      << "accuracy=" << csv::format_value(r.accuracy) << '\n'
      << "expr_score=" << csv::format_value(r.expr_score) << '\n'
      << "va_samples=" << r.va_samples << '\n'
      << "expr_samples=" << r.expr_samples << '\n';
  return out.str();
}

}  // namespace affect
