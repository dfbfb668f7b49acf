#include "qalign/env/coupling.hpp"

#include <cmath>
#include <numbers>

#include "qalign/errors.hpp"

namespace qalign::env {

void CouplingModel::validate() const {
  if (!(lateral_waist_um > 0.0)) throw DomainError("coupling: lateral_waist_um must be > 0");
  if (!(axial_rayleigh_um > 0.0)) throw DomainError("coupling: axial_rayleigh_um must be > 0");
  if (!(background_rate_cps >= 0.0)) throw DomainError("coupling: background_rate_cps must be >= 0");
  if (!(max_rate_cps > background_rate_cps)) {
    throw DomainError("coupling: max_rate_cps must exceed background_rate_cps");
  }
  if (!std::isfinite(z_optimal_um)) throw DomainError("coupling: z_optimal_um must be finite");
}

double Pose::x_um() const { return r_um * std::cos(theta_rad); }
double Pose::y_um() const { return r_um * std::sin(theta_rad); }

Pose Pose::from_cartesian(double x_um, double y_um, double z_um) {
  return Pose{std::hypot(x_um, y_um), wrap_angle(std::atan2(y_um, x_um)), z_um};
}

Pose Pose::normalized() const { return Pose{std::max(r_um, 0.0), wrap_angle(theta_rad), z_um}; }

double wrap_angle(double theta_rad) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta_rad, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2 pi.
  if (t >= kTwoPi) t = 0.0;
  return t;
}

MeasurementRecord MeasurementRecord::from_counts(std::int64_t counts, double integration_time_s) {
  return MeasurementRecord{counts, integration_time_s,
                           static_cast<double>(counts) / integration_time_s};
}

MeasurementRecord MeasurementRecord::merged(const MeasurementRecord& extra) const {
  return from_counts(counts + extra.counts, integration_time_s + extra.integration_time_s);
}

double coupling_efficiency(const CouplingModel& model, double x_um, double y_um, double z_um) {
  const double u = (z_um - model.z_optimal_um) / model.axial_rayleigh_um;
  const double spread = 1.0 + u * u;
  const double w2 = model.lateral_waist_um * model.lateral_waist_um;
  const double d2 = x_um * x_um + y_um * y_um;
  return std::exp(-d2 / (w2 * spread)) / spread;
}

double true_rate(const CouplingModel& model, double x_um, double y_um, double z_um) {
  return model.background_rate_cps +
         model.max_rate_cps * coupling_efficiency(model, x_um, y_um, z_um);
}

double true_rate(const CouplingModel& model, const Pose& pose) {
  // Only r enters the overlap, so theta never changes the rate.
  return true_rate(model, pose.r_um, 0.0, pose.z_um);
}

MeasurementRecord measure(const CouplingModel& model, const Pose& pose, double integration_time_s,
                          Rng& rng) {
  if (!(integration_time_s > 0.0)) throw DomainError("measure: integration_time must be > 0");
  const double mean = true_rate(model, pose) * integration_time_s;
  if (!(mean > 0.0)) return MeasurementRecord::from_counts(0, integration_time_s);
  std::poisson_distribution<std::int64_t> counts(mean);
  return MeasurementRecord::from_counts(counts(rng), integration_time_s);
}

}  // namespace qalign::env
