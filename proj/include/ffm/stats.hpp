#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ffm {

/// Upper regularized incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
double regularized_gamma_q(double a, double x);

/// Right-tail p-value of a chi-square statistic with `dof` degrees of freedom.
double chi_square_pvalue(double stat, int dof);

struct MeanCi {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double half_width(double z = 3.0) const { return z * std_error; }
};

MeanCi mean_ci(std::span<const double> xs);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y);

/// Pearson chi-square of observed counts against expected counts.
/// Cells with tiny expectation are pooled into the final cell.
struct ChiSquare {
  double stat = 0.0;
  int dof = 0;
  double pvalue = 1.0;
};

ChiSquare chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                         double min_expected = 5.0);

/// Two-sample chi-square homogeneity test over matching cells.
ChiSquare chi_square_two_sample(std::span<const double> counts_a, std::span<const double> counts_b,
                                double min_expected = 5.0);

/// Monotone (Fritsch-Carlson) cubic interpolant through strictly increasing
/// abscissae. Preserves monotonicity of the data; clamps outside the range.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  bool empty() const { return x_.empty(); }
  const std::vector<double>& abscissae() const { return x_; }
  const std::vector<double>& ordinates() const { return y_; }

 private:
  std::vector<double> x_, y_, slope_;
};

}  // namespace ffm
