#include "ffm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ffm/errors.hpp"

namespace ffm {

namespace {

// Lanczos g=7, n=9 coefficients.
const double kLanczos[9] = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

double log_gamma(double x) {
  if (x < 0.5) {
    // Reflection; adequate for the chi-square use below.
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
  }
  x -= 1.0;
  double a = kLanczos[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x + i);
  return 0.5 * std::log(2.0 * M_PI) + (x + 0.5) * std::log(t) - t + std::log(a);
}

// Series expansion of P(a,x), valid for x < a+1.
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Continued fraction for Q(a,x), valid for x >= a+1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) fail(Errc::usage_error, "regularized_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_pvalue(double stat, int dof) {
  if (dof <= 0) fail(Errc::usage_error, "chi_square_pvalue: dof must be positive");
  if (stat <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * dof, 0.5 * stat);
}

MeanCi mean_ci(std::span<const double> xs) {
  MeanCi out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) {
      const double d = x - out.mean;
      ss += d * d;
    }
    const double var = ss / static_cast<double>(xs.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return out;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(Errc::usage_error, "least_squares: need >= 2 points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

namespace {

ChiSquare chi_square_pooled(std::vector<double> obs, std::vector<double> exp, double min_expected,
                            int extra_dof_loss) {
  // Pool trailing cells until every expectation clears the floor.
  while (exp.size() > 1) {
    const auto last = exp.size() - 1;
    if (exp[last] >= min_expected) break;
    exp[last - 1] += exp[last];
    obs[last - 1] += obs[last];
    exp.pop_back();
    obs.pop_back();
  }
  ChiSquare out;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    if (exp[i] <= 0.0) continue;
    const double d = obs[i] - exp[i];
    out.stat += d * d / exp[i];
    ++cells;
  }
  out.dof = static_cast<int>(cells) - 1 - extra_dof_loss;
  if (out.dof < 1) out.dof = 1;
  out.pvalue = chi_square_pvalue(out.stat, out.dof);
  return out;
}

}  // namespace

ChiSquare chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                         double min_expected) {
  if (observed.size() != expected.size() || observed.empty())
    fail(Errc::usage_error, "chi_square_gof: mismatched cells");
  return chi_square_pooled(std::vector<double>(observed.begin(), observed.end()),
                           std::vector<double>(expected.begin(), expected.end()), min_expected, 0);
}

ChiSquare chi_square_two_sample(std::span<const double> counts_a, std::span<const double> counts_b,
                                double min_expected) {
  if (counts_a.size() != counts_b.size() || counts_a.empty())
    fail(Errc::usage_error, "chi_square_two_sample: mismatched cells");
  double na = 0.0, nb = 0.0;
  for (double v : counts_a) na += v;
  for (double v : counts_b) nb += v;
  if (na <= 0.0 || nb <= 0.0) fail(Errc::usage_error, "chi_square_two_sample: empty sample");
  // Fold the two samples into one statistic: sum over cells and samples of
  // (O - E)^2 / E with E from the pooled proportions.
  std::vector<double> obs, exp;
  obs.reserve(2 * counts_a.size());
  exp.reserve(2 * counts_a.size());
  std::vector<double> pooled(counts_a.size());
  for (std::size_t i = 0; i < counts_a.size(); ++i) pooled[i] = counts_a[i] + counts_b[i];
  const double total = na + nb;
  ChiSquare out;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts_a.size(); ++i) {
    const double p = pooled[i] / total;
    const double ea = na * p, eb = nb * p;
    if (pooled[i] < min_expected) continue;  // skip sparse cells conservatively
    const double da = counts_a[i] - ea, db = counts_b[i] - eb;
    out.stat += da * da / ea + db * db / eb;
    ++cells;
  }
  out.dof = std::max<int>(1, static_cast<int>(cells) - 1);
  out.pvalue = chi_square_pvalue(out.stat, out.dof);
  return out;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 2)
    fail(Errc::usage_error, "MonotoneCubic: need >= 2 points");
  const std::size_t n = x_.size();
  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(x_[i + 1] > x_[i])) fail(Errc::usage_error, "MonotoneCubic: abscissae not increasing");
    d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  }
  slope_.assign(n, 0.0);
  slope_[0] = d[0];
  slope_[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      slope_[i] = 0.0;
    } else {
      // Harmonic mean keeps the interpolant monotone (Fritsch-Carlson).
      const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
      const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
      slope_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  // Endpoint slopes must not overshoot.
  for (std::size_t i : {std::size_t{0}, n - 1}) {
    const double di = d[i == 0 ? 0 : n - 2];
    if (di == 0.0)
      slope_[i] = 0.0;
    else if (slope_[i] / di < 0.0)
      slope_[i] = 0.0;
    else if (std::fabs(slope_[i]) > 3.0 * std::fabs(di))
      slope_[i] = 3.0 * di;
  }
}

double MonotoneCubic::operator()(double x) const {
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

}  // namespace ffm
