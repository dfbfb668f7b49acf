#pragma once

#include <ostream>
#include <span>

#include "qalign/spdc/phase_matching.hpp"

namespace qalign::spdc {

/// Full sweep table:
/// temperature_C,signal_nm,idler_nm,opening_angle_rad,log10_abs_dk,mean_nm,mode_nm,std_nm,fwhm_nm,brightness_rel
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

/// Phase-matching columns only (the first five of the sweep table).
void write_opo_csv(std::ostream& os, std::span<const SweepRow> rows);

/// lambda_nm,re_psi,im_psi
void write_wavefunction_csv(std::ostream& os, const BiphotonWavefunction& wf);

}  // namespace qalign::spdc
