#include "qalign/env/stage.hpp"

#include <cmath>

#include "qalign/errors.hpp"

namespace qalign::env {

CouplingStage::CouplingStage(CouplingModel model, std::uint64_t seed, Pose start)
    : model_(model), rng_(seed), pose_(start.normalized()) {
  model_.validate();
}

void CouplingStage::move_to(const Pose& pose) { pose_ = pose.normalized(); }

MeasurementRecord CouplingStage::measure(double integration_time_s) {
  if (!(integration_time_s > 0.0)) throw DomainError("measure: integration_time must be > 0");
  MeasurementRecord rec;
  if (noise_free_) {
    const double mean = true_rate_here() * integration_time_s;
    rec = MeasurementRecord::from_counts(std::llround(mean), integration_time_s);
  } else {
    rec = env::measure(model_, pose_, integration_time_s, rng_);
  }
  elapsed_s_ += integration_time_s;
  return rec;
}

}  // namespace qalign::env
