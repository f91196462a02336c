// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <utility>
#include <vector>

#include "farfield/common.hpp"
#include "farfield/signal.hpp"

namespace farfield {

enum class Window { SqrtHann, Hann };

// Analysis/synthesis parameters. Perfect reconstruction requires
// window_length to be an integer multiple (>= 2) of shift.
struct StftConfig {
  int window_length = 512;
  int shift = 128;
  Window window = Window::SqrtHann;
  int fft_size = 512;

  int num_bins() const { return fft_size / 2 + 1; }
  int pad() const { return window_length - shift; }

  void validate() const {
    if (shift <= 0 || window_length <= 0)
      throw ConfigError("StftConfig: window_length and shift must be positive");
    if (shift > window_length)
      throw ConfigError("StftConfig: shift > window_length");
    if (fft_size < window_length)
      throw ConfigError("StftConfig: fft_size < window_length");
    if (window_length % shift != 0 || window_length / shift < 2)
      throw ConfigError("StftConfig: window_length/shift must be an integer >= 2 (COLA)");
  }
};

// Complex STFT tensor, indexed (frame t, bin f, channel m). One-sided
// spectrum: F = fft_size/2 + 1. Storage is bin-major so the per-frequency
// slab used by WPE/beamforming/EM is contiguous.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(int frames, int bins, int channels, StftConfig cfg, int rate)
      : T_(frames), F_(bins), M_(channels), config_(cfg), sample_rate_(rate),
        data_(static_cast<size_t>(frames) * bins * channels, cd(0, 0)) {}

  int frames() const { return T_; }
  int bins() const { return F_; }
  int channels() const { return M_; }
  const StftConfig& config() const { return config_; }
  int sample_rate() const { return sample_rate_; }

  cd& at(int t, int f, int m) {
    return data_[(static_cast<size_t>(f) * T_ + t) * M_ + m];
  }
  const cd& at(int t, int f, int m) const {
    return data_[(static_cast<size_t>(f) * T_ + t) * M_ + m];
  }

  // Contiguous [T x M] slab of bin f, frame-major.
  cd* band(int f) { return data_.data() + static_cast<size_t>(f) * T_ * M_; }
  const cd* band(int f) const { return data_.data() + static_cast<size_t>(f) * T_ * M_; }

  // Channel vector y_{t,f} as an Eigen map.
  Eigen::Map<const Eigen::VectorXcd> frame_vector(int t, int f) const {
    return Eigen::Map<const Eigen::VectorXcd>(band(f) + static_cast<size_t>(t) * M_, M_);
  }

  std::vector<cd>& raw() { return data_; }
  const std::vector<cd>& raw() const { return data_; }

  bool all_finite() const {
    for (const cd& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  ComplexSpectrogram select_channel(int m) const {
    ComplexSpectrogram out(T_, F_, 1, config_, sample_rate_);
    for (int f = 0; f < F_; ++f)
      for (int t = 0; t < T_; ++t) out.at(t, f, 0) = at(t, f, m);
    return out;
  }

 private:
  int T_ = 0, F_ = 0, M_ = 0;
  StftConfig config_;
  int sample_rate_ = 0;
  std::vector<cd> data_;
};

inline Eigen::VectorXd make_window(Window kind, int length) {
  Eigen::VectorXd w(length);
  for (int n = 0; n < length; ++n) {
    double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / length);  // periodic
    w[n] = kind == Window::SqrtHann ? std::sqrt(hann) : hann;
  }
  return w;
}

// One-sided DFT of a real frame, zero-padded to fft_size.
// X[k] = sum_n x[n] exp(-2 pi i k n / N), k = 0..N/2.
inline Eigen::VectorXcd rfft(const Eigen::VectorXd& x, int fft_size) {
  if (fft_size < x.size()) throw ConfigError("rfft: fft_size < frame length");
  std::vector<double> in(fft_size, 0.0);
  std::copy(x.data(), x.data() + x.size(), in.begin());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cd> out;
  fft.fwd(out, in);
  return Eigen::Map<Eigen::VectorXcd>(out.data(), static_cast<long>(out.size()));
}

// Inverse of rfft (conjugate-symmetric extension, 1/N scaling).
inline Eigen::VectorXd irfft(const Eigen::VectorXcd& spectrum, int fft_size) {
  if (spectrum.size() != fft_size / 2 + 1)
    throw ConfigError("irfft: spectrum size does not match fft_size");
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cd> in(spectrum.data(), spectrum.data() + spectrum.size());
  std::vector<double> out;
  fft.inv(out, in, fft_size);
  return Eigen::Map<Eigen::VectorXd>(out.data(), fft_size);
}

namespace detail {

// Reflect index into [0, n) without repeating the edge sample.
inline long reflect_index(long i, long n) {
  if (n == 1) return 0;
  long period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

inline int stft_frame_count(long padded_length, const StftConfig& cfg) {
  long span = padded_length - cfg.window_length;
  if (span <= 0) return 1;
  return static_cast<int>((span + cfg.shift - 1) / cfg.shift) + 1;
}

}  // namespace detail

// Number of frames stft() produces for a signal of the given length.
inline int stft_frames(long length, const StftConfig& cfg) {
  return detail::stft_frame_count(length + 2L * cfg.pad(), cfg);
}

// Windowed one-sided STFT. The signal is reflect-padded by
// (window_length - shift) on both ends so every input sample receives a
// full complement of analysis windows; istft() trims the pad again.
inline ComplexSpectrogram stft(const TimeSignal& signal, const StftConfig& cfg) {
  cfg.validate();
  signal.validate();
  const int M = signal.channels();
  const long L = signal.length();
  const int W = cfg.window_length;
  const int S = cfg.shift;
  const long pad = cfg.pad();
  const long padded = L + 2 * pad;
  const int T = detail::stft_frame_count(padded, cfg);
  const int F = cfg.num_bins();
  const Eigen::VectorXd win = make_window(cfg.window, W);

  ComplexSpectrogram out(T, F, M, cfg, signal.sample_rate);
  parallel_for(0, M, [&](long m) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> frame(cfg.fft_size, 0.0);
    std::vector<cd> spec;
    Eigen::RowVectorXd chan = signal.samples.row(m);  // contiguous copy
    const double* x = chan.data();
    for (int t = 0; t < T; ++t) {
      long start = static_cast<long>(t) * S - pad;
      for (int n = 0; n < W; ++n) {
        long idx = start + n;
        double v;
        if (idx < 0)
          v = x[detail::reflect_index(idx, L)];
        else if (idx >= L)
          v = idx < padded - pad ? x[detail::reflect_index(2 * (L - 1) - idx, L)] : 0.0;
        else
          v = x[idx];
        frame[n] = v * win[n];
      }
      std::fill(frame.begin() + W, frame.end(), 0.0);
      fft.fwd(spec, frame);
      for (int f = 0; f < F; ++f) out.at(t, f, static_cast<int>(m)) = spec[f];
    }
  });
  return out;
}

// Overlap-add synthesis. SqrtHann uses the same window for synthesis;
// Hann analysis uses a unit synthesis window. Both normalize by the exact
// COLA constant, so istft(stft(x)) == x up to rounding.
inline TimeSignal istft(const ComplexSpectrogram& spec, long length = -1) {
  const StftConfig& cfg = spec.config();
  cfg.validate();
  const int T = spec.frames();
  const int F = spec.bins();
  const int M = spec.channels();
  if (F != cfg.num_bins())
    throw ConfigError("istft: spectrogram bins do not match config fft_size");
  const int W = cfg.window_length;
  const int S = cfg.shift;
  const long pad = cfg.pad();
  const long total = static_cast<long>(T - 1) * S + W;
  if (length < 0) length = total - 2 * pad;
  if (length < 1 || length + 2 * pad > total + S)
    throw ConfigError("istft: requested length inconsistent with frame count");

  const Eigen::VectorXd win = make_window(cfg.window, W);
  // COLA normalizers: sum_k hann[n - kS] = W/(2S) for W/S >= 2.
  const double cola = static_cast<double>(W) / (2.0 * S);

  Eigen::MatrixXd out(M, length);
  parallel_for(0, M, [&](long m) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> acc(total, 0.0);
    std::vector<cd> bins(F);
    std::vector<double> frame;
    for (int t = 0; t < T; ++t) {
      for (int f = 0; f < F; ++f) bins[f] = spec.at(t, f, static_cast<int>(m));
      fft.inv(frame, bins, cfg.fft_size);
      long start = static_cast<long>(t) * S;
      if (cfg.window == Window::SqrtHann) {
        for (int n = 0; n < W; ++n) acc[start + n] += frame[n] * win[n];
      } else {
        for (int n = 0; n < W; ++n) acc[start + n] += frame[n];
      }
    }
    for (long i = 0; i < length; ++i) out(m, i) = acc[pad + i] / cola;
  });
  return TimeSignal(std::move(out), spec.sample_rate());
}

}  // namespace farfield
