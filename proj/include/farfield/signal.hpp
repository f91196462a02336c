// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include "farfield/common.hpp"

namespace farfield {

// Multi-channel sampled waveform, full scale +-1.0.
// samples: channels x length, row per channel.
struct TimeSignal {
  Eigen::MatrixXd samples;
  int sample_rate = 16000;

  TimeSignal() = default;
  TimeSignal(Eigen::MatrixXd s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  int channels() const { return static_cast<int>(samples.rows()); }
  long length() const { return samples.cols(); }

  Eigen::RowVectorXd channel(int m) const { return samples.row(m); }

  TimeSignal mono(int m = 0) const { return TimeSignal(samples.row(m), sample_rate); }

  void validate() const {
    if (samples.rows() < 1 || samples.cols() < 1)
      throw ConfigError("TimeSignal: empty signal");
    if (sample_rate <= 0) throw ConfigError("TimeSignal: sample_rate must be positive");
    if (!samples.allFinite()) throw NumericalError("TimeSignal: non-finite samples");
  }
};

inline TimeSignal mono_signal(const Eigen::VectorXd& x, int rate) {
  return TimeSignal(x.transpose(), rate);
}

}  // namespace farfield
