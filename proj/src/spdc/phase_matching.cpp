#include "qalign/spdc/phase_matching.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "qalign/errors.hpp"
#include "qalign/spdc/sellmeier.hpp"

namespace qalign::spdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxBisection = 200;
constexpr std::size_t kRootScanPoints = 600;

double wavevector(double wavelength_nm, double temperature_c) {
  return kTwoPi * refractive_index(wavelength_nm, temperature_c) / (wavelength_nm * 1e-3);
}

double grating_vector(const CrystalConfig& config) {
  return std::isinf(config.poling_period_um) ? 0.0 : kTwoPi / config.poling_period_um;
}

template <class F>
double bisect(F&& f, double lo, double hi, double f_lo, double tol, const char* what) {
  for (int it = 0; it < kMaxBisection; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (!std::isfinite(f_mid)) {
      throw NumericError(std::string(what) + ": non-finite value during bisection", lo, hi);
    }
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= tol) return 0.5 * (lo + hi);
  }
  throw NumericError(std::string(what) + ": bisection did not converge", lo, hi);
}

template <class F>
double golden_minimise(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Non-collinear signal emission angle closing a negative collinear mismatch,
// with transverse momentum conserved: k_s sin(phi_s) = k_i sin(phi_i).
double opening_half_angle(const CrystalConfig& config, double signal_nm, double idler_nm) {
  const double t = config.temperature_c;
  const double k_p = wavevector(config.pump_wavelength_nm, t);
  const double k_s = wavevector(signal_nm, t);
  const double k_i = wavevector(idler_nm, t);
  const double k_g = grating_vector(config);

  auto idler_angle = [&](double phi_s) {
    return std::asin(std::clamp(k_s * std::sin(phi_s) / k_i, -1.0, 1.0));
  };
  auto longitudinal = [&](double phi_s) {
    return k_p - k_g - k_s * std::cos(phi_s) - k_i * std::cos(idler_angle(phi_s));
  };

  const double phi_max = k_s <= k_i ? std::numbers::pi / 2.0 : std::asin(k_i / k_s);
  const double f_lo = longitudinal(0.0);
  if (f_lo >= 0.0) return 0.0;
  if (longitudinal(phi_max) < 0.0) {
    throw NumericError("solve_phase_match: no non-collinear solution", 0.0, phi_max);
  }
  const double phi_s = bisect(longitudinal, 0.0, phi_max, f_lo, 1e-15, "opening angle");
  return 0.5 * (phi_s + idler_angle(phi_s));
}

struct DensityGrid {
  std::vector<double> lambda;
  std::vector<double> density;
};

DensityGrid density_on_grid(const CrystalConfig& config, std::size_t grid_points) {
  DensityGrid g;
  g.lambda = signal_grid(config, grid_points);
  g.density.resize(g.lambda.size());
  const double length_um = config.crystal_length_um();
  for (std::size_t j = 0; j < g.lambda.size(); ++j) {
    const double phi = phase_matching_amplitude(delta_k_collinear(config, g.lambda[j]), length_um);
    g.density[j] = phi * phi;
  }
  return g;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t j = 1; j < x.size(); ++j) s += 0.5 * (y[j] + y[j - 1]) * (x[j] - x[j - 1]);
  return s;
}

void check_grid(std::size_t grid_points) {
  if (grid_points < kMinGridPoints) {
    std::ostringstream os;
    os << "grid_points " << grid_points << " < minimum " << kMinGridPoints;
    throw DomainError(os.str());
  }
}

}  // namespace

void CrystalConfig::validate() const {
  if (!(poling_period_um > 0.0)) throw DomainError("crystal: poling_period_um must be > 0");
  if (!(crystal_length_mm > 0.0) || !std::isfinite(crystal_length_mm)) {
    throw DomainError("crystal: crystal_length_mm must be finite and > 0");
  }
  if (!(pump_wavelength_nm > 0.0) || !std::isfinite(pump_wavelength_nm)) {
    throw DomainError("crystal: pump_wavelength_nm must be finite and > 0");
  }
  if (!(pump_power_rel >= 0.0)) throw DomainError("crystal: pump_power_rel must be >= 0");
}

double idler_wavelength_nm(double pump_nm, double signal_nm) {
  if (!(signal_nm > pump_nm)) {
    throw DomainError("signal wavelength must exceed the pump wavelength");
  }
  return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm);
}

double delta_k_collinear(const CrystalConfig& config, double signal_wavelength_nm) {
  const double idler_nm = idler_wavelength_nm(config.pump_wavelength_nm, signal_wavelength_nm);
  const double t = config.temperature_c;
  return wavevector(config.pump_wavelength_nm, t) - wavevector(signal_wavelength_nm, t) -
         wavevector(idler_nm, t) - grating_vector(config);
}

double phase_matching_amplitude(double delta_k_per_um, double length_um) {
  const double x = 0.5 * delta_k_per_um * length_um;
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

std::vector<double> signal_grid(const CrystalConfig& config, std::size_t grid_points) {
  check_grid(grid_points);
  const double lo = config.degenerate_wavelength_nm() - kGridHalfWidthNm;
  const double step = 2.0 * kGridHalfWidthNm / static_cast<double>(grid_points - 1);
  std::vector<double> grid(grid_points);
  for (std::size_t j = 0; j < grid_points; ++j) grid[j] = lo + step * static_cast<double>(j);
  return grid;
}

PhaseMatchPoint solve_phase_match(const CrystalConfig& config) {
  config.validate();
  const double deg = config.degenerate_wavelength_nm();
  const double far = deg - kGridHalfWidthNm;
  auto dk = [&](double ls) { return delta_k_collinear(config, ls); };

  PhaseMatchPoint pt;
  pt.temperature_c = config.temperature_c;

  // Walk outward from degeneracy; the first sign change brackets the root
  // nearest the degenerate point.
  double prev_l = deg;
  double prev_v = dk(deg);
  if (!std::isfinite(prev_v)) throw NumericError("solve_phase_match: non-finite dk", deg, deg);
  std::optional<double> root;
  if (prev_v == 0.0) root = deg;
  double best_l = deg, best_abs = std::abs(prev_v);
  for (std::size_t j = 1; j <= kRootScanPoints && !root; ++j) {
    const double l = deg - (deg - far) * static_cast<double>(j) / kRootScanPoints;
    const double v = dk(l);
    if (!std::isfinite(v)) throw NumericError("solve_phase_match: non-finite dk", l, prev_l);
    if (std::abs(v) < best_abs) {
      best_abs = std::abs(v);
      best_l = l;
    }
    if ((v < 0.0) != (prev_v < 0.0) || v == 0.0) {
      root = v == 0.0 ? l : bisect(dk, l, prev_l, v, 1e-11, "solve_phase_match");
    }
    prev_l = l;
    prev_v = v;
  }

  if (root) {
    pt.signal_wavelength_nm = *root;
    pt.collinear = true;
  } else {
    const double step = (deg - far) / kRootScanPoints;
    const double lo = std::max(far, best_l - step);
    const double hi = std::min(deg, best_l + step);
    pt.signal_wavelength_nm = golden_minimise([&](double l) { return std::abs(dk(l)); }, lo, hi, 1e-9);
    pt.collinear = false;
  }
  pt.idler_wavelength_nm = idler_wavelength_nm(config.pump_wavelength_nm, pt.signal_wavelength_nm);
  pt.delta_k_per_um = dk(pt.signal_wavelength_nm);
  pt.opening_angle_rad =
      pt.collinear ? 0.0 : opening_half_angle(config, pt.signal_wavelength_nm, pt.idler_wavelength_nm);
  return pt;
}

double optimal_temperature(const CrystalConfig& config) {
  config.validate();
  const double deg = config.degenerate_wavelength_nm();
  auto dk_at = [&](double t) {
    CrystalConfig c = config;
    c.temperature_c = t;
    return delta_k_collinear(c, deg);
  };
  const double lo = SellmeierWindow::kMinTemperatureC;
  const double hi = SellmeierWindow::kMaxTemperatureC;
  constexpr int kScan = 400;
  double prev_t = lo, prev_v = dk_at(lo);
  for (int j = 1; j <= kScan; ++j) {
    const double t = lo + (hi - lo) * j / kScan;
    const double v = dk_at(t);
    if (v == 0.0) return t;
    if ((v < 0.0) != (prev_v < 0.0)) return bisect(dk_at, prev_t, t, prev_v, 1e-10, "optimal_temperature");
    prev_t = t;
    prev_v = v;
  }
  return golden_minimise([&](double t) { return std::abs(dk_at(t)); }, lo, hi, 1e-8);
}

double raw_brightness(const CrystalConfig& config, std::size_t grid_points) {
  config.validate();
  const DensityGrid g = density_on_grid(config, grid_points);
  return trapezoid(g.lambda, g.density);
}

double reference_brightness(const CrystalConfig& config, std::size_t grid_points) {
  config.validate();
  auto brightness_at = [&](double t) {
    CrystalConfig c = config;
    c.temperature_c = t;
    return raw_brightness(c, grid_points);
  };
  const double lo = SellmeierWindow::kMinTemperatureC;
  const double hi = SellmeierWindow::kMaxTemperatureC;
  constexpr double kStep = 0.5;
  double best_t = lo, best_b = -1.0;
  for (double t = lo; t <= hi + 1e-9; t += kStep) {
    const double b = brightness_at(t);
    if (b > best_b) {
      best_b = b;
      best_t = t;
    }
  }
  const double t_star = golden_minimise([&](double t) { return -brightness_at(t); },
                                        std::max(lo, best_t - kStep), std::min(hi, best_t + kStep),
                                        1e-4);
  return std::max(best_b, brightness_at(t_star));
}

SpectralSummary spectral_summary(const CrystalConfig& config, std::size_t grid_points) {
  check_grid(grid_points);
  return spectral_summary(config, grid_points, reference_brightness(config, grid_points));
}

SpectralSummary spectral_summary(const CrystalConfig& config, std::size_t grid_points,
                                 double reference) {
  config.validate();
  const DensityGrid g = density_on_grid(config, grid_points);
  const auto& x = g.lambda;
  const auto& p = g.density;
  const double total = trapezoid(x, p);

  SpectralSummary s;
  if (!(total > 0.0) || !std::isfinite(total)) {
    s.moments_defined = false;
    s.mean_wavelength_nm = s.mode_wavelength_nm = s.std_dev_nm = s.fwhm_nm = kNan;
    s.brightness_rel = 0.0;
    return s;
  }

  const std::size_t n = x.size();
  double m1 = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    m1 += 0.5 * (p[j] * x[j] + p[j - 1] * x[j - 1]) * (x[j] - x[j - 1]);
  }
  const double mean = m1 / total;
  double m2 = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double a = x[j] - mean, b = x[j - 1] - mean;
    m2 += 0.5 * (p[j] * a * a + p[j - 1] * b * b) * (x[j] - x[j - 1]);
  }

  const auto peak_it = std::max_element(p.begin(), p.end());
  const std::size_t peak = static_cast<std::size_t>(peak_it - p.begin());
  const double half = 0.5 * *peak_it;

  // Outermost half-maximum crossings, linearly interpolated.
  std::size_t first = 0;
  while (p[first] < half) ++first;
  std::size_t last = n - 1;
  while (p[last] < half) --last;
  auto cross = [&](std::size_t inside, std::size_t outside) {
    const double t = (half - p[outside]) / (p[inside] - p[outside]);
    return x[outside] + t * (x[inside] - x[outside]);
  };
  const double left = first == 0 ? x.front() : cross(first, first - 1);
  const double right = last == n - 1 ? x.back() : cross(last, last + 1);

  s.mean_wavelength_nm = mean;
  s.mode_wavelength_nm = x[peak];
  s.std_dev_nm = std::sqrt(std::max(0.0, m2 / total));
  s.fwhm_nm = right - left;
  s.brightness_rel = reference > 0.0 ? config.pump_power_rel * total / reference : 0.0;
  return s;
}

BiphotonWavefunction biphoton_wavefunction(const CrystalConfig& config, std::size_t grid_points) {
  config.validate();
  BiphotonWavefunction wf;
  wf.signal_grid_nm = signal_grid(config, grid_points);
  const double length_um = config.crystal_length_um();
  const double dl = wf.signal_grid_nm[1] - wf.signal_grid_nm[0];

  // Monochromatic pump without spectral phase.
  const std::complex<double> pump_amplitude{1.0, 0.0};
  std::vector<std::complex<double>> psi(grid_points);
  double norm2 = 0.0;
  for (std::size_t j = 0; j < grid_points; ++j) {
    const double dk = delta_k_collinear(config, wf.signal_grid_nm[j]);
    psi[j] = pump_amplitude * phase_matching_amplitude(dk, length_um);
    norm2 += std::norm(psi[j]) * dl;
  }
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    throw NumericError("biphoton_wavefunction: amplitude vanishes on the grid");
  }
  const double scale = 1.0 / std::sqrt(norm2);
  wf.amplitude_real.resize(grid_points);
  wf.amplitude_imag.resize(grid_points);
  for (std::size_t j = 0; j < grid_points; ++j) {
    wf.amplitude_real[j] = psi[j].real() * scale;
    wf.amplitude_imag[j] = psi[j].imag() * scale;
  }
  return wf;
}

std::vector<SweepRow> temperature_sweep(const CrystalConfig& config, double t_min, double t_max,
                                        std::size_t steps, std::size_t grid_points) {
  config.validate();
  check_grid(grid_points);
  if (steps == 0) throw DomainError("temperature_sweep: steps must be >= 1");
  if (steps >= 2 && !(t_min < t_max)) throw DomainError("temperature_sweep: t_min must be < t_max");

  const double reference = reference_brightness(config, grid_points);
  std::vector<SweepRow> rows;
  rows.reserve(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    const double t =
        steps == 1 ? t_min : t_min + (t_max - t_min) * static_cast<double>(j) / static_cast<double>(steps - 1);
    SweepRow row;
    row.temperature_c = t;
    CrystalConfig c = config;
    c.temperature_c = t;
    try {
      row.phase_match = solve_phase_match(c);
      row.spectrum = spectral_summary(c, grid_points, reference);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace qalign::spdc
