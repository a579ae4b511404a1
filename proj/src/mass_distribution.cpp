#include "ffm/mass_distribution.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ffm/errors.hpp"

namespace ffm {

double state_distance(SizeState i, SizeState j) {
  if (i < 1 || j < 1) fail(Errc::usage_error, "state_distance: states must be >= 1");
  auto f = [](SizeState k) { return k == 1 ? 0.0 : 1.0 / static_cast<double>(k); };
  return std::fabs(f(i) - f(j));
}

double TailModel::mass() const { return mass_above(static_cast<double>(cutoff)); }

double TailModel::mass_above(double k) const {
  if (amplitude <= 0.0) return 0.0;
  return amplitude / std::sqrt(k);
}

double TailModel::first_moment() const {
  return amplitude > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

MassDistribution::MassDistribution(std::vector<double> masses, std::optional<TailModel> tail,
                                   double as_of)
    : masses_(std::move(masses)), tail_(std::move(tail)), as_of_(as_of) {
  if (tail_ && tail_->cutoff < static_cast<std::int64_t>(masses_.size()))
    fail(Errc::usage_error, "MassDistribution: tail cutoff below finite support");
}

MassDistribution MassDistribution::monodisperse() { return point_mass(1); }

MassDistribution MassDistribution::point_mass(std::int64_t size) {
  if (size < 1) fail(Errc::usage_error, "point_mass: size must be >= 1");
  std::vector<double> m(static_cast<std::size_t>(size), 0.0);
  m.back() = 1.0;
  return MassDistribution(std::move(m));
}

double MassDistribution::mass(std::int64_t k) const {
  if (k < 1) fail(Errc::usage_error, "mass: size must be >= 1");
  if (k > max_size()) return 0.0;
  return masses_[static_cast<std::size_t>(k - 1)];
}

double MassDistribution::finite_mass() const {
  double s = 0.0;
  for (double m : masses_) s += m;
  return s;
}

double MassDistribution::total_mass() const {
  return finite_mass() + (tail_ ? tail_->mass() : 0.0);
}

double MassDistribution::first_moment() const {
  if (tail_ && tail_->amplitude > 0.0) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (std::size_t i = 0; i < masses_.size(); ++i) s += static_cast<double>(i + 1) * masses_[i];
  return s;
}

bool MassDistribution::conservative(double tol) const {
  return std::fabs(total_mass() - 1.0) <= tol;
}

void MassDistribution::validate(double tol) const {
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    if (masses_[i] < 0.0)
      fail(Errc::negative_mass, "MassDistribution: negative mass at size " + std::to_string(i + 1));
  }
  if (tail_ && tail_->amplitude < 0.0) fail(Errc::negative_mass, "MassDistribution: negative tail");
  const double total = total_mass();
  if (total > 1.0 + tol)
    fail(Errc::non_conservative, "MassDistribution: total mass " + std::to_string(total) + " > 1");
}

std::int64_t sample_tail(const TailModel& tail, double remaining) {
  if (tail.amplitude <= 0.0) fail(Errc::non_conservative, "sample_tail: empty tail model");
  const double total = tail.mass();
  if (remaining < 0.0 || remaining >= total)
    fail(Errc::non_conservative, "sample_tail: residual outside tail mass");
  // Invert mass_above(cutoff) - mass_above(y) = remaining for y.
  const double denom = total - remaining;
  const double y = (tail.amplitude / denom) * (tail.amplitude / denom);
  constexpr double kMax = 4.0e18;  // stay inside int64
  if (!(y < kMax)) return static_cast<std::int64_t>(kMax);
  const auto k = static_cast<std::int64_t>(std::ceil(y));
  return k > tail.cutoff ? k : tail.cutoff + 1;
}

std::int64_t sample_size(const MassDistribution& dist, double u) {
  if (u < 0.0 || u >= 1.0) fail(Errc::usage_error, "sample_size: u outside [0,1)");
  double cum = 0.0;
  const auto ms = dist.masses();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    cum += ms[i];
    if (u < cum) return static_cast<std::int64_t>(i + 1);
  }
  const auto& tail = dist.tail();
  if (!tail || tail->amplitude <= 0.0)
    fail(Errc::non_conservative,
         "sample_size: u beyond represented mass and no tail model to fall through to");
  return sample_tail(*tail, u - cum);
}

}  // namespace ffm
