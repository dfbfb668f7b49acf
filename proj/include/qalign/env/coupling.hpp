#pragma once

#include <cstdint>
#include <random>

namespace qalign::env {

using Rng = std::mt19937_64;

/// Count-rate field of the fiber-to-fiber coupling stage: a Gaussian-beam
/// overlap with lateral waist w and axial Rayleigh range z_R around the
/// optimum (0, 0, z_optimal), on top of a constant detector background.
struct CouplingModel {
  double z_optimal_um = 1580.0;
  double lateral_waist_um = 120.0;
  double axial_rayleigh_um = 400.0;
  double max_rate_cps = 20000.0;
  double background_rate_cps = 50.0;

  void validate() const;
  double peak_rate_cps() const { return background_rate_cps + max_rate_cps; }

  bool operator==(const CouplingModel&) const = default;
};

/// Input-fiber pose in cylindrical coordinates.
struct Pose {
  double r_um = 0.0;
  double theta_rad = 0.0;
  double z_um = 0.0;

  double x_um() const;
  double y_um() const;
  static Pose from_cartesian(double x_um, double y_um, double z_um);
  /// r clipped to >= 0 and theta wrapped to [0, 2 pi).
  Pose normalized() const;

  bool operator==(const Pose&) const = default;
};

/// One detector integration. rate_cps = counts / integration_time_s.
struct MeasurementRecord {
  std::int64_t counts = 0;
  double integration_time_s = 0.0;
  double rate_cps = 0.0;

  static MeasurementRecord from_counts(std::int64_t counts, double integration_time_s);
  /// Continuing integration: counts and times add.
  MeasurementRecord merged(const MeasurementRecord& extra) const;

  bool operator==(const MeasurementRecord&) const = default;
};

/// eta = 1/(1 + (dz/z_R)^2) * exp(-d^2 / (w^2 (1 + (dz/z_R)^2))), in [0, 1].
double coupling_efficiency(const CouplingModel& model, double x_um, double y_um, double z_um);

/// background + max_rate * eta; deterministic.
double true_rate(const CouplingModel& model, double x_um, double y_um, double z_um);
double true_rate(const CouplingModel& model, const Pose& pose);

/// Poisson(true_rate * t) counts. Throws DomainError for t <= 0.
MeasurementRecord measure(const CouplingModel& model, const Pose& pose, double integration_time_s,
                          Rng& rng);

/// Wraps an angle to [0, 2 pi).
double wrap_angle(double theta_rad);

}  // namespace qalign::env
