// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <array>
#include <iostream>
#include <limits>
#include <optional>
#include <vector>

#include "farfield/common.hpp"
#include "farfield/signal.hpp"

namespace farfield {

using Vec3 = Eigen::Vector3d;

// Shoebox room. t60 = 0 means anechoic (only the direct path survives).
// max_image_order unset -> derived from t60 so the image set covers
// 1.2x t60 along the smallest dimension.
struct RoomSpec {
  Vec3 dimensions{6.0, 5.0, 3.0};
  double t60 = 0.0;
  double speed_of_sound = 343.0;
  std::optional<int> max_image_order;

  void validate() const {
    if (!(dimensions.array() > 0.0).all())
      throw ConfigError("RoomSpec: dimensions must be positive");
    if (t60 < 0.0) throw ConfigError("RoomSpec: t60 must be >= 0");
    if (speed_of_sound <= 0.0) throw ConfigError("RoomSpec: speed_of_sound must be positive");
    if (max_image_order && *max_image_order < 0)
      throw ConfigError("RoomSpec: max_image_order must be >= 0");
  }

  bool inside(const Vec3& p) const {
    return (p.array() > 0.0).all() && (p.array() < dimensions.array()).all();
  }

  // Uniform wall reflection coefficient from t60 (Eyring).
  double reflection_coefficient() const {
    if (t60 <= 0.0) return 0.0;
    double V = dimensions.prod();
    double S = 2.0 * (dimensions[0] * dimensions[1] + dimensions[0] * dimensions[2] +
                      dimensions[1] * dimensions[2]);
    double sabine = 24.0 * std::log(10.0) / speed_of_sound;  // ~0.161 at c=343
    return std::exp(-sabine * V / (2.0 * S * t60));
  }

  int effective_image_order() const {
    if (max_image_order) return *max_image_order;
    if (t60 <= 0.0) return 0;
    double min_dim = dimensions.minCoeff();
    return static_cast<int>(std::ceil(1.2 * t60 * speed_of_sound / (2.0 * min_dim)));
  }
};

enum class NoiseKind { None, WhiteGaussian, Supplied };

struct SceneSpec {
  RoomSpec room;
  std::vector<Vec3> mic_positions;
  std::vector<Vec3> source_positions;
  std::vector<TimeSignal> source_signals;  // single-channel each
  NoiseKind noise = NoiseKind::WhiteGaussian;
  TimeSignal supplied_noise;  // used when noise == Supplied, M channels
  double snr_db = std::numeric_limits<double>::infinity();
  int sample_rate = 16000;
  double early_boundary_ms = 50.0;
  std::uint64_t seed = 0;

  void validate() const {
    room.validate();
    if (mic_positions.empty()) throw ConfigError("SceneSpec: need at least one microphone");
    if (source_positions.empty()) throw ConfigError("SceneSpec: need at least one source");
    if (source_signals.size() != source_positions.size())
      throw ConfigError("SceneSpec: one signal per source position required");
    for (const auto& p : mic_positions)
      if (!room.inside(p)) throw ConfigError("SceneSpec: microphone outside room");
    for (const auto& p : source_positions)
      if (!room.inside(p)) throw ConfigError("SceneSpec: source outside room");
    for (const auto& s : source_signals) {
      s.validate();
      if (s.channels() != 1) throw ConfigError("SceneSpec: source signals must be mono");
    }
    if (std::isnan(snr_db)) throw ConfigError("SceneSpec: snr_db must not be NaN");
    if (sample_rate <= 0) throw ConfigError("SceneSpec: sample_rate must be positive");
    if (early_boundary_ms < 0) throw ConfigError("SceneSpec: early_boundary_ms must be >= 0");
  }
};

// Ground-truth decomposition of a rendered mixture. All identities hold
// sample-exactly: mixture = sum_i image[i] + noise_image and
// image[i] = early_image[i] + late_image[i].
struct Scene {
  TimeSignal mixture;
  std::vector<TimeSignal> images;
  std::vector<TimeSignal> early_images;
  std::vector<TimeSignal> late_images;
  TimeSignal noise_image;
  std::vector<Eigen::MatrixXd> airs;  // per source: M x air_length
  SceneSpec spec;
};

constexpr double kMinSourceMicDistance = 0.1;  // 1/d amplitude floor

// Image-method acoustic impulse response. Direct path lands at
// round(d/c*fs) with amplitude 1/max(d, floor); reflections carry
// beta^(bounce count)/distance. Fractional delays round to the nearest
// sample.
inline Eigen::VectorXd simulate_air(const RoomSpec& room, const Vec3& src, const Vec3& mic,
                                    int sample_rate) {
  room.validate();
  if (!room.inside(src)) throw ConfigError("simulate_air: source outside room");
  if (!room.inside(mic)) throw ConfigError("simulate_air: microphone outside room");
  if (sample_rate <= 0) throw ConfigError("simulate_air: bad sample rate");

  const double c = room.speed_of_sound;
  const double fs = sample_rate;
  const double beta = room.reflection_coefficient();
  const int order = room.effective_image_order();

  // auto-derived order always covers 1.2x t60; user-capped orders may not
  if (room.t60 > 0.0 && room.max_image_order) {
    double covered = 2.0 * (*room.max_image_order) * room.dimensions.minCoeff() / c;
    if (covered < room.t60)
      std::cerr << "warning: max_image_order " << *room.max_image_order
                << " covers only " << covered << " s of t60 " << room.t60 << " s\n";
  }

  const double direct_dist = std::max((src - mic).norm(), 0.0);
  const long direct_delay = std::lround(direct_dist / c * fs);
  const long tail = room.t60 > 0.0 ? std::lround(1.2 * room.t60 * fs) : 0;
  const long len = direct_delay + tail + 1;
  Eigen::VectorXd air = Eigen::VectorXd::Zero(len);

  // Reflection-count powers, precomputed: max bounce count per axis is
  // 2*order + 1, summed over three axes.
  std::vector<double> beta_pow(6 * order + 4, 0.0);
  beta_pow[0] = 1.0;
  for (size_t k = 1; k < beta_pow.size(); ++k) beta_pow[k] = beta_pow[k - 1] * beta;

  for (int qx = 0; qx <= 1; ++qx)
    for (int qy = 0; qy <= 1; ++qy)
      for (int qz = 0; qz <= 1; ++qz)
        for (int nx = -order; nx <= order; ++nx)
          for (int ny = -order; ny <= order; ++ny)
            for (int nz = -order; nz <= order; ++nz) {
              Vec3 img((1 - 2 * qx) * src[0] + 2 * nx * room.dimensions[0],
                       (1 - 2 * qy) * src[1] + 2 * ny * room.dimensions[1],
                       (1 - 2 * qz) * src[2] + 2 * nz * room.dimensions[2]);
              int bounces = std::abs(nx - qx) + std::abs(nx) + std::abs(ny - qy) +
                            std::abs(ny) + std::abs(nz - qz) + std::abs(nz);
              if (bounces > 0 && beta == 0.0) continue;
              double dist = (img - mic).norm();
              long delay = std::lround(dist / c * fs);
              if (delay >= len) continue;
              double gain = beta_pow[bounces] / std::max(dist, kMinSourceMicDistance);
              air[delay] += gain;
            }
  return air;
}

// Splits an AIR at (direct-path peak + boundary) into contiguous early and
// late parts; early ++ late == air bit-exactly. boundary 0 keeps exactly
// the taps up to and including the peak in the early part.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> split_air(const Eigen::VectorXd& air,
                                                             double early_boundary_ms,
                                                             int sample_rate) {
  if (early_boundary_ms < 0) throw ConfigError("split_air: boundary must be >= 0");
  if (air.size() == 0) return {air, air};
  long peak = 0;
  air.cwiseAbs().maxCoeff(&peak);
  long cut = std::min<long>(air.size(),
                            peak + std::lround(early_boundary_ms * 1e-3 * sample_rate) + 1);
  return {air.head(cut), air.tail(air.size() - cut)};
}

namespace detail {

// Full convolution, output length min(len(x) + len(h) - 1, out_len).
inline void convolve_into(const Eigen::RowVectorXd& x, const Eigen::VectorXd& h,
                          Eigen::Ref<Eigen::RowVectorXd> out) {
  const long lx = x.size(), lh = h.size(), lo = out.size();
  out.setZero();
  for (long k = 0; k < lh; ++k) {
    double hk = h[k];
    if (hk == 0.0) continue;
    long n_end = std::min(lo, lx + k);
    for (long n = k; n < n_end; ++n) out[n] += hk * x[n - k];
  }
}

inline double mean_power(const Eigen::RowVectorXd& x) {
  return x.size() ? x.squaredNorm() / static_cast<double>(x.size()) : 0.0;
}

}  // namespace detail

// Renders a full scene: AIRs per (source, mic), per-source reverberant /
// early / late images, noise scaled so that the summed reverberant sources
// vs. noise at microphone 0 hit snr_db.
inline Scene render_scene(const SceneSpec& spec) {
  spec.validate();
  const int M = static_cast<int>(spec.mic_positions.size());
  const int I = static_cast<int>(spec.source_positions.size());
  const int fs = spec.sample_rate;

  for (const auto& s : spec.source_signals)
    if (s.sample_rate != fs)
      throw ConfigError("render_scene: source sample rate differs from scene rate");

  // AIRs, zero-padded to a common length
  std::vector<std::vector<Eigen::VectorXd>> air(I, std::vector<Eigen::VectorXd>(M));
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < I; ++i)
    for (int m = 0; m < M; ++m) pairs.emplace_back(i, m);
  parallel_for(0, static_cast<long>(pairs.size()), [&](long k) {
    auto [i, m] = pairs[k];
    air[i][m] = simulate_air(spec.room, spec.source_positions[i], spec.mic_positions[m], fs);
  });
  long air_len = 0;
  for (int i = 0; i < I; ++i)
    for (int m = 0; m < M; ++m) air_len = std::max(air_len, air[i][m].size());

  long mix_len = 0;
  for (int i = 0; i < I; ++i)
    mix_len = std::max(mix_len, spec.source_signals[i].length() + air_len - 1);

  Scene scene;
  scene.spec = spec;
  scene.airs.assign(I, Eigen::MatrixXd::Zero(M, air_len));
  scene.images.assign(I, TimeSignal(Eigen::MatrixXd::Zero(M, mix_len), fs));
  scene.early_images = scene.images;
  scene.late_images = scene.images;

  for (int i = 0; i < I; ++i) {
    const Eigen::RowVectorXd dry = spec.source_signals[i].samples.row(0);
    for (int m = 0; m < M; ++m) {
      scene.airs[i].row(m).head(air[i][m].size()) = air[i][m];
      auto [early, late] = split_air(air[i][m], spec.early_boundary_ms, fs);
      Eigen::VectorXd late_embedded = Eigen::VectorXd::Zero(air[i][m].size());
      late_embedded.tail(late.size()) = late;
      detail::convolve_into(dry, early, scene.early_images[i].samples.row(m));
      detail::convolve_into(dry, late_embedded, scene.late_images[i].samples.row(m));
      scene.images[i].samples.row(m) =
          scene.early_images[i].samples.row(m) + scene.late_images[i].samples.row(m);
    }
  }

  // Noise, scaled against the summed reverberant sources at mic 0
  scene.noise_image = TimeSignal(Eigen::MatrixXd::Zero(M, mix_len), fs);
  if (spec.noise != NoiseKind::None && std::isfinite(spec.snr_db)) {
    Eigen::MatrixXd noise(M, mix_len);
    if (spec.noise == NoiseKind::WhiteGaussian) {
      Rng rng(spec.seed ^ 0x6e6f697365ULL);
      for (int m = 0; m < M; ++m)
        for (long n = 0; n < mix_len; ++n) noise(m, n) = rng.normal();
    } else {
      spec.supplied_noise.validate();
      if (spec.supplied_noise.channels() != M)
        throw ConfigError("render_scene: supplied noise channel count != mic count");
      if (spec.supplied_noise.length() < mix_len)
        throw ConfigError("render_scene: supplied noise shorter than mixture");
      noise = spec.supplied_noise.samples.leftCols(mix_len);
    }
    Eigen::RowVectorXd ref_sum = Eigen::RowVectorXd::Zero(mix_len);
    for (int i = 0; i < I; ++i) ref_sum += scene.images[i].samples.row(0);
    double p_sig = detail::mean_power(ref_sum);
    double p_noise = detail::mean_power(noise.row(0));
    if (p_sig <= 0.0)
      throw NumericalError("render_scene: zero-power sources, cannot realize SNR");
    if (p_noise <= 0.0)
      throw NumericalError("render_scene: zero-power noise, cannot realize SNR");
    double gain = std::sqrt(p_sig / (p_noise * std::pow(10.0, spec.snr_db / 10.0)));
    scene.noise_image.samples = noise * gain;
  }

  // Mixture accumulated in fixed order: sources ascending, then noise
  scene.mixture = TimeSignal(Eigen::MatrixXd::Zero(M, mix_len), fs);
  for (int i = 0; i < I; ++i) scene.mixture.samples += scene.images[i].samples;
  scene.mixture.samples += scene.noise_image.samples;
  return scene;
}

// --- deterministic test signals ------------------------------------------

inline TimeSignal white_noise_signal(double duration_s, int sample_rate, std::uint64_t seed,
                                     double amplitude = 0.1) {
  long n = std::lround(duration_s * sample_rate);
  Rng rng(seed);
  Eigen::MatrixXd x(1, n);
  for (long i = 0; i < n; ++i) x(0, i) = amplitude * rng.normal();
  return TimeSignal(std::move(x), sample_rate);
}

// Speech-shaped test source: white noise through a slowly wandering
// two-resonance filter, amplitude-modulated at a syllabic rate, with
// occasional pauses. Entirely determined by the seed.
inline TimeSignal speech_like_signal(double duration_s, int sample_rate, std::uint64_t seed) {
  long n = std::lround(duration_s * sample_rate);
  Rng rng(seed);
  Eigen::MatrixXd out(1, n);

  // two-pole resonators, coefficients updated every 160 ms
  double f1 = 500.0, f2 = 1500.0;
  double s1a = 0, s1b = 0, s2a = 0, s2b = 0;
  long seg = std::lround(0.16 * sample_rate);
  double env = 0.0, env_target = 1.0;
  double a1r = 0, a1i = 0, a2r = 0, a2i = 0;
  auto set_resonators = [&]() {
    f1 = rng.uniform(250.0, 900.0);
    f2 = rng.uniform(1000.0, 3000.0);
    double r1 = 0.97, r2 = 0.95;
    a1r = 2 * r1 * std::cos(2 * M_PI * f1 / sample_rate);
    a1i = -r1 * r1;
    a2r = 2 * r2 * std::cos(2 * M_PI * f2 / sample_rate);
    a2i = -r2 * r2;
    env_target = rng.uniform() < 0.2 ? 0.02 : rng.uniform(0.4, 1.0);  // pauses
  };
  set_resonators();
  double mod_phase = rng.uniform(0.0, 2 * M_PI);
  double mod_rate = 2 * M_PI * 3.5 / sample_rate;  // ~3.5 Hz syllabic
  for (long i = 0; i < n; ++i) {
    if (i % seg == 0 && i > 0) set_resonators();
    double x = rng.normal();
    double y1 = x + a1r * s1a + a1i * s1b;
    s1b = s1a;
    s1a = y1;
    double y2 = y1 + a2r * s2a + a2i * s2b;
    s2b = s2a;
    s2a = y2;
    env += (env_target - env) * 5e-4;  // smooth segment transitions
    mod_phase += mod_rate;
    double mod = 0.6 + 0.4 * std::sin(mod_phase);
    out(0, i) = y2 * env * mod;
  }
  out *= 0.05 / std::sqrt(out.squaredNorm() / n + 1e-300);  // fixed RMS
  return TimeSignal(std::move(out), sample_rate);
}

}  // namespace farfield
