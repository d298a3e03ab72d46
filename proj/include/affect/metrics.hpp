#pragma once

#include <span>
#include <string>

#include "affect/data_model.hpp"

namespace affect {

struct EvalReport {
  double ccc_valence = 0.0;
  double ccc_arousal = 0.0;
  double va_score = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  double expr_score = 0.0;
  std::size_t va_samples = 0;
  std::size_t expr_samples = 0;
};

// Concordance correlation: 2*s_xy / (s_x^2 + s_y^2 + (mx - my)^2), population
// (co)variances. Throws UndefinedMetricError when both inputs are constant
// with equal means.
double ccc(std::span<const double> x, std::span<const double> y);

double va_score(double ccc_v, double ccc_a);

struct ExpressionScore {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  double expr_score = 0.0;  // 0.67 * macro_f1 + 0.33 * accuracy
};

// Macro F1 over the 7 classes. Classes absent from both truth and prediction
// are excluded from the mean by default; with include_absent_classes they
// contribute F1 = 0.
ExpressionScore expression_score(std::span<const int> pred,
                                 std::span<const int> truth,
                                 bool include_absent_classes = false);

double mse(std::span<const double> pred, std::span<const double> truth);

// Training/early-stopping metric for the regression tasks: 2*CCC - MSE.
double custom_regression_metric(std::span<const double> pred,
                                std::span<const double> truth);

std::string format_report(const EvalReport& r);  // flat key=value block

}  // namespace affect
