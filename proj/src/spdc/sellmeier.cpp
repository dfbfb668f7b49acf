#include "qalign/spdc/sellmeier.hpp"

#include <cmath>
#include <sstream>

#include "qalign/errors.hpp"

namespace qalign::spdc {

namespace {

// Gayer et al. (2008), extraordinary polarization, 5% MgO:CLN.
constexpr double kA1 = 5.756;
constexpr double kA2 = 0.0983;
constexpr double kA3 = 0.2020;
constexpr double kA4 = 189.32;
constexpr double kA5 = 12.52;
constexpr double kA6 = 1.32e-2;
constexpr double kB1 = 2.860e-6;
constexpr double kB2 = 4.700e-8;
constexpr double kB3 = 6.113e-8;
constexpr double kB4 = 1.516e-4;

[[noreturn]] void out_of_range(const char* what, double value, double lo, double hi) {
  std::ostringstream os;
  os << "refractive_index: " << what << " " << value << " outside model window [" << lo << ", "
     << hi << "]";
  throw DomainError(os.str());
}

}  // namespace

double refractive_index(double wavelength_vac_nm, double temperature_c) {
  using W = SellmeierWindow;
  if (!(wavelength_vac_nm >= W::kMinWavelengthNm && wavelength_vac_nm <= W::kMaxWavelengthNm)) {
    out_of_range("wavelength_nm", wavelength_vac_nm, W::kMinWavelengthNm, W::kMaxWavelengthNm);
  }
  if (!(temperature_c >= W::kMinTemperatureC && temperature_c <= W::kMaxTemperatureC)) {
    out_of_range("temperature_C", temperature_c, W::kMinTemperatureC, W::kMaxTemperatureC);
  }
  const double l_um = wavelength_vac_nm * 1e-3;
  const double l2 = l_um * l_um;
  const double f = (temperature_c - 24.5) * (temperature_c + 570.82);
  const double pole_uv = kA3 + kB3 * f;
  const double n2 = kA1 + kB1 * f + (kA2 + kB2 * f) / (l2 - pole_uv * pole_uv) +
                    (kA4 + kB4 * f) / (l2 - kA5 * kA5) - kA6 * l2;
  return std::sqrt(n2);
}

}  // namespace qalign::spdc
