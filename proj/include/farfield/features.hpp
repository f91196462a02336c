// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include "farfield/stft.hpp"

namespace farfield {

constexpr double kLogMelFloor = 1e-10;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct FeatureMatrix {
  Eigen::MatrixXd features;  // T x mel_channels
  int mel_channels = 0;
  bool normalized = false;
};

// Triangular filters on the Mel scale spanning 0 Hz to Nyquist, evaluated
// at the one-sided FFT bin frequencies. Returns mel_channels x F.
inline Eigen::MatrixXd mel_filterbank(int mel_channels, int num_bins, int fft_size,
                                      int sample_rate) {
  if (mel_channels < 1) throw ConfigError("mel_filterbank: need at least one channel");
  if (mel_channels > num_bins)
    throw ConfigError("mel_filterbank: more mel channels than frequency bins");
  const double nyquist = sample_rate / 2.0;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(nyquist);
  // band edges: mel_channels + 2 equally spaced points on the mel scale
  Eigen::VectorXd edges(mel_channels + 2);
  for (int k = 0; k < mel_channels + 2; ++k)
    edges[k] = mel_lo + (mel_hi - mel_lo) * k / (mel_channels + 1);

  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(mel_channels, num_bins);
  for (int f = 0; f < num_bins; ++f) {
    double mel = hz_to_mel(static_cast<double>(f) * sample_rate / fft_size);
    for (int v = 0; v < mel_channels; ++v) {
      double left = edges[v], center = edges[v + 1], right = edges[v + 2];
      if (mel > left && mel < right)
        bank(v, f) = mel <= center ? (mel - left) / (center - left)
                                   : (right - mel) / (right - center);
    }
  }
  return bank;
}

// Utterance-level mean and variance normalization, per feature dimension.
inline void mean_variance_normalize(Eigen::MatrixXd& features) {
  const long T = features.rows();
  if (T < 1) return;
  for (long v = 0; v < features.cols(); ++v) {
    double mean = features.col(v).mean();
    features.col(v).array() -= mean;
    double var = features.col(v).squaredNorm() / T;
    if (var > 1e-30) features.col(v) /= std::sqrt(var);
  }
}

// Log-Mel features: power spectrum -> Mel filterbank -> log with floor ->
// optional utterance-level MVN.
inline FeatureMatrix log_mel_features(const TimeSignal& signal, const StftConfig& cfg,
                                      int mel_channels, bool apply_mvn) {
  if (signal.channels() != 1) throw ConfigError("log_mel_features: single channel required");
  ComplexSpectrogram spec = stft(signal, cfg);
  const int T = spec.frames();
  const int F = spec.bins();
  Eigen::MatrixXd bank = mel_filterbank(mel_channels, F, cfg.fft_size, signal.sample_rate);

  FeatureMatrix out;
  out.mel_channels = mel_channels;
  out.features.resize(T, mel_channels);
  Eigen::VectorXd power(F);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) power[f] = std::norm(spec.at(t, f, 0));
    Eigen::VectorXd mel = bank * power;
    for (int v = 0; v < mel_channels; ++v)
      out.features(t, v) = std::log(std::max(mel[v], kLogMelFloor));
  }
  if (apply_mvn) {
    mean_variance_normalize(out.features);
    out.normalized = true;
  }
  return out;
}

}  // namespace farfield
