#include "qalign/spdc/report.hpp"

#include <cmath>
#include <limits>

#include "qalign/io/csv.hpp"

namespace qalign::spdc {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void add_phase_match(io::CsvRow& row, const SweepRow& r) {
  if (r.phase_match) {
    const auto& pm = *r.phase_match;
    row.add(pm.signal_wavelength_nm)
        .add(pm.idler_wavelength_nm)
        .add(pm.opening_angle_rad)
        .add(std::log10(std::abs(pm.delta_k_per_um)));
  } else {
    row.add(kNan).add(kNan).add(kNan).add(kNan);
  }
}

}  // namespace

void write_opo_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "temperature_C,signal_nm,idler_nm,opening_angle_rad,log10_abs_dk\n";
  for (const auto& r : rows) {
    io::CsvRow row;
    row.add(r.temperature_c);
    add_phase_match(row, r);
    os << row;
  }
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "temperature_C,signal_nm,idler_nm,opening_angle_rad,log10_abs_dk,mean_nm,mode_nm,std_nm,"
        "fwhm_nm,brightness_rel\n";
  for (const auto& r : rows) {
    io::CsvRow row;
    row.add(r.temperature_c);
    add_phase_match(row, r);
    if (r.spectrum) {
      const auto& s = *r.spectrum;
      row.add(s.mean_wavelength_nm)
          .add(s.mode_wavelength_nm)
          .add(s.std_dev_nm)
          .add(s.fwhm_nm)
          .add(s.brightness_rel);
    } else {
      row.add(kNan).add(kNan).add(kNan).add(kNan).add(kNan);
    }
    os << row;
  }
}

void write_wavefunction_csv(std::ostream& os, const BiphotonWavefunction& wf) {
  os << "lambda_nm,re_psi,im_psi\n";
  for (std::size_t j = 0; j < wf.signal_grid_nm.size(); ++j) {
    os << io::CsvRow{}.add(wf.signal_grid_nm[j]).add(wf.amplitude_real[j]).add(wf.amplitude_imag[j]);
  }
}

}  // namespace qalign::spdc
