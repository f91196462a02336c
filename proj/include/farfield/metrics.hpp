// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include "farfield/signal.hpp"

namespace farfield {

constexpr double kSdrCapDb = 100.0;

struct SdrReport {
  double sdr_db = 0.0;
  double input_sdr_db = 0.0;
  double improvement_db = 0.0;  // sdr_db - input_sdr_db
};

// Scale-invariant signal-to-distortion ratio: the estimate is compared
// against its projection onto the reference, so any global scaling of the
// estimate cancels. Capped at +100 dB.
inline double sdr(const TimeSignal& estimate, const TimeSignal& reference) {
  if (estimate.channels() != 1 || reference.channels() != 1)
    throw ConfigError("sdr: single-channel signals required");
  const long n = reference.length();
  Eigen::RowVectorXd est = Eigen::RowVectorXd::Zero(n);
  long copy = std::min(n, estimate.length());
  est.head(copy) = estimate.samples.row(0).head(copy);  // trim/pad to reference
  const Eigen::RowVectorXd ref = reference.samples.row(0);

  double ref_power = ref.squaredNorm();
  if (ref_power <= 0.0) throw NumericalError("sdr: zero-power reference");
  double alpha = est.dot(ref) / ref_power;
  double target_power = alpha * alpha * ref_power;
  double error_power = (est - alpha * ref).squaredNorm();
  if (target_power <= 0.0) return -kSdrCapDb;
  if (error_power <= target_power * 1e-10) return kSdrCapDb;
  return std::min(kSdrCapDb, 10.0 * std::log10(target_power / error_power));
}

inline SdrReport sdr_report(const TimeSignal& estimate, const TimeSignal& input,
                            const TimeSignal& reference) {
  SdrReport r;
  r.sdr_db = sdr(estimate, reference);
  r.input_sdr_db = sdr(input, reference);
  r.improvement_db = r.sdr_db - r.input_sdr_db;
  return r;
}

}  // namespace farfield
