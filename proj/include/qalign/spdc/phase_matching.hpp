#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qalign::spdc {

inline constexpr std::size_t kDefaultGridPoints = 2048;
inline constexpr std::size_t kMinGridPoints = 64;
/// Signal grid spans [lambda_deg - 150 nm, lambda_deg + 150 nm].
inline constexpr double kGridHalfWidthNm = 150.0;

/// Type-0 PPLN crystal. Defaults: 19.388 um poling, 10 mm length, 775 nm pump.
struct CrystalConfig {
  double poling_period_um = 19.388;
  double crystal_length_mm = 10.0;
  double pump_wavelength_nm = 775.0;
  double temperature_c = 25.0;
  double pump_power_rel = 1.0;

  /// Throws DomainError unless period, length and pump wavelength are > 0.
  /// An infinite poling period (no grating) is accepted.
  void validate() const;

  double degenerate_wavelength_nm() const { return 2.0 * pump_wavelength_nm; }
  double crystal_length_um() const { return crystal_length_mm * 1e3; }

  bool operator==(const CrystalConfig&) const = default;
};

struct PhaseMatchPoint {
  double signal_wavelength_nm = 0.0;
  double idler_wavelength_nm = 0.0;
  double opening_angle_rad = 0.0;  // half-angle inside the crystal
  double delta_k_per_um = 0.0;     // collinear mismatch at the returned pair
  double temperature_c = 0.0;
  bool collinear = true;           // an exact collinear solution exists
};

struct SpectralSummary {
  double mean_wavelength_nm = 0.0;
  double mode_wavelength_nm = 0.0;
  double std_dev_nm = 0.0;
  double fwhm_nm = 0.0;
  double brightness_rel = 0.0;
  /// False when the density vanished; moments are then NaN.
  bool moments_defined = true;
};

struct BiphotonWavefunction {
  std::vector<double> signal_grid_nm;
  std::vector<double> amplitude_real;
  std::vector<double> amplitude_imag;
};

/// One sweep row; a failed point keeps its temperature and carries the error.
struct SweepRow {
  double temperature_c = 0.0;
  std::optional<PhaseMatchPoint> phase_match;
  std::optional<SpectralSummary> spectrum;
  std::string error;
};

/// Idler from energy conservation, 1/lp = 1/ls + 1/li (vacuum wavelengths).
double idler_wavelength_nm(double pump_nm, double signal_nm);

/// Collinear mismatch dk = k_p - k_s - k_i - 2 pi / Lambda in 1/um, with
/// k = 2 pi n_e(lambda, T) / lambda. Throws DomainError for signal <= pump.
double delta_k_collinear(const CrystalConfig& config, double signal_wavelength_nm);

/// Real phase-matching amplitude sinc(dk L / 2), sinc(0) = 1.
double phase_matching_amplitude(double delta_k_per_um, double length_um);

/// Uniform signal grid centred on the degenerate wavelength.
std::vector<double> signal_grid(const CrystalConfig& config, std::size_t grid_points);

/// Signal/idler pair with minimal |dk|. When the collinear mismatch changes
/// sign on the signal half-grid the root nearest degeneracy is returned with
/// zero opening angle; otherwise the minimiser is returned and, if dk < 0,
/// the non-collinear emission half-angle that closes the mismatch.
PhaseMatchPoint solve_phase_match(const CrystalConfig& config);

/// Temperature at which the degenerate pair (2 lambda_p) is phase matched.
double optimal_temperature(const CrystalConfig& config);

/// Integral of |Phi|^2 over the signal grid in nm (unit pump power).
double raw_brightness(const CrystalConfig& config, std::size_t grid_points = kDefaultGridPoints);

/// Maximum of raw_brightness over the model's temperature window; the
/// normaliser for brightness_rel.
double reference_brightness(const CrystalConfig& config,
                            std::size_t grid_points = kDefaultGridPoints);

SpectralSummary spectral_summary(const CrystalConfig& config,
                                 std::size_t grid_points = kDefaultGridPoints);
/// Same, with a precomputed reference_brightness.
SpectralSummary spectral_summary(const CrystalConfig& config, std::size_t grid_points,
                                 double reference);

/// psi(lambda_s) proportional to sinc(dk L / 2) times the (phase-free) pump
/// amplitude, normalised so that sum |psi|^2 dlambda = 1.
BiphotonWavefunction biphoton_wavefunction(const CrystalConfig& config,
                                           std::size_t grid_points = kDefaultGridPoints);

/// steps == 1 yields the single row at t_min. Per-point failures become
/// flagged rows; the sweep itself only throws on bad arguments.
std::vector<SweepRow> temperature_sweep(const CrystalConfig& config, double t_min, double t_max,
                                        std::size_t steps,
                                        std::size_t grid_points = kDefaultGridPoints);

}  // namespace qalign::spdc
