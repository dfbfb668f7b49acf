#pragma once

namespace qalign::spdc {

/// Validity window of the dispersion model. The fit was measured between
/// 0.5 and 4 um and from room temperature to 200 C; temperatures down to 0 C
/// are accepted as a mild extrapolation so that sub-threshold sweeps work.
struct SellmeierWindow {
  static constexpr double kMinWavelengthNm = 500.0;
  static constexpr double kMaxWavelengthNm = 4000.0;
  static constexpr double kMinTemperatureC = 0.0;
  static constexpr double kMaxTemperatureC = 200.0;
};

/// Extraordinary index n_e(lambda, T) of 5 mol% MgO-doped congruent LiNbO3.
///
/// Temperature-dependent Sellmeier equation of O. Gayer, Z. Sacks, E. Galun,
/// A. Arie, "Temperature and wavelength dependent refractive index equations
/// for MgO-doped congruent and stoichiometric LiNbO3", Appl. Phys. B 91,
/// 343-348 (2008):
///
///   n_e^2 = a1 + b1 f + (a2 + b2 f) / (l^2 - (a3 + b3 f)^2)
///              + (a4 + b4 f) / (l^2 - a5^2) - a6 l^2
///   f     = (T - 24.5)(T + 570.82),  l in um, T in C
///
/// Throws DomainError naming the violated bound when the wavelength or the
/// temperature falls outside SellmeierWindow.
double refractive_index(double wavelength_vac_nm, double temperature_c);

}  // namespace qalign::spdc
