// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <vector>

#include "farfield/stft.hpp"

namespace farfield {

// Delayed multi-channel linear prediction with a time-varying Gaussian
// source model, estimated by alternating variance and filter updates.
struct WpeConfig {
  int taps = 10;                    // K, prediction filter length in frames
  int delay = 3;                    // prediction delay in frames
  int iterations = 3;
  int smoothing_context = 1;        // +-delta frames for the variance estimate
  double variance_floor = 1e-10;
  double diagonal_loading = 1e-6;   // relative to trace(R)/(MK)

  void validate() const {
    if (taps < 1) throw ConfigError("WpeConfig: taps must be >= 1");
    if (delay < 1) throw ConfigError("WpeConfig: delay must be >= 1");
    if (iterations < 1) throw ConfigError("WpeConfig: iterations must be >= 1");
    if (smoothing_context < 0) throw ConfigError("WpeConfig: smoothing_context must be >= 0");
    if (variance_floor <= 0) throw ConfigError("WpeConfig: variance_floor must be > 0");
    if (diagonal_loading < 0) throw ConfigError("WpeConfig: diagonal_loading must be >= 0");
  }
};

struct WpeResult {
  ComplexSpectrogram dereverberated;          // T x F x M
  std::vector<Eigen::MatrixXcd> filters;      // per bin: MK x M stacked filter
  Eigen::MatrixXd variances;                  // T x F, >= variance_floor
  // Negative log-likelihood, summed over t and f. objective[0] is the value
  // at initialization (zero filters, observation-power variances); one entry
  // per iteration follows. half_step_objective interleaves the value after
  // each variance update and each filter update.
  std::vector<double> objective;
  std::vector<double> half_step_objective;
  std::vector<int> passthrough_bands;         // degenerate bins left untouched
};

namespace detail {

// Stacked past vector [y_{t-delay}; y_{t-delay-1}; ...; y_{t-delay-K+1}],
// zero-padded before frame 0. Band slab is frame-major [T x M].
inline void stacked_history(const cd* band, int T, int M, int K, int delay, int t,
                            Eigen::VectorXcd& out) {
  for (int k = 0; k < K; ++k) {
    int src = t - delay - k;
    if (src >= 0) {
      const cd* p = band + static_cast<size_t>(src) * M;
      for (int m = 0; m < M; ++m) out[k * M + m] = p[m];
    } else {
      out.segment(k * M, M).setZero();
    }
  }
}

// Eq.-style objective for one bin: sum_t ||d_t||^2 / lambda_t + M log lambda_t.
inline double wpe_band_objective(const Eigen::MatrixXcd& d, const Eigen::VectorXd& lambda) {
  const int T = static_cast<int>(d.cols());
  const int M = static_cast<int>(d.rows());
  double acc = 0.0;
  for (int t = 0; t < T; ++t)
    acc += d.col(t).squaredNorm() / lambda[t] + M * std::log(lambda[t]);
  return acc;
}

// Smoothed channel-mean power of d with +-context frames; edge frames
// renormalize by the actual window size. Floored at variance_floor.
inline void update_variances(const Eigen::MatrixXcd& d, int context, double floor_value,
                             Eigen::VectorXd& lambda) {
  const int T = static_cast<int>(d.cols());
  const int M = static_cast<int>(d.rows());
  Eigen::VectorXd power(T);
  for (int t = 0; t < T; ++t) power[t] = d.col(t).squaredNorm();
  for (int t = 0; t < T; ++t) {
    int lo = std::max(0, t - context);
    int hi = std::min(T - 1, t + context);
    double s = 0.0;
    for (int tau = lo; tau <= hi; ++tau) s += power[tau];
    lambda[t] = std::max(s / ((hi - lo + 1) * M), floor_value);
  }
}

}  // namespace detail

// Offline WPE. Frequencies are processed independently; results are
// bit-identical for any thread count.
inline WpeResult wpe(const ComplexSpectrogram& observation, const WpeConfig& cfg) {
  cfg.validate();
  if (!observation.all_finite()) throw NumericalError("wpe: non-finite observation");
  const int T = observation.frames();
  const int F = observation.bins();
  const int M = observation.channels();
  const int K = cfg.taps;
  const int MK = M * K;
  if (T <= cfg.delay + K)
    throw ConfigError("wpe: need more than delay + taps frames");

  WpeResult result;
  result.dereverberated = observation;
  result.filters.assign(F, Eigen::MatrixXcd::Zero(MK, M));
  result.variances.resize(T, F);
  // per-bin traces, merged in bin order afterwards
  Eigen::MatrixXd init_obj(F, 1);
  Eigen::MatrixXd half_obj(F, 2 * cfg.iterations);
  std::vector<char> passthrough(F, 0);

  parallel_for(0, F, [&](long f) {
    // Y, D: M x T views of the band slab (slab itself is frame-major)
    Eigen::Map<const Eigen::MatrixXcd> Y(observation.band(static_cast<int>(f)), M, T);
    Eigen::Map<Eigen::MatrixXcd> D(result.dereverberated.band(static_cast<int>(f)), M, T);
    Eigen::VectorXd lambda(T);

    // init: channel-mean observation power, no smoothing
    for (int t = 0; t < T; ++t)
      lambda[t] = std::max(Y.col(t).squaredNorm() / M, cfg.variance_floor);
    result.variances.col(f) = lambda;
    init_obj(f, 0) = detail::wpe_band_objective(Y, lambda);

    if (Y.squaredNorm() <= 0.0) {
      // degenerate band: leave the observation untouched, lambda at the floor
      passthrough[f] = 1;
      half_obj.row(f).setConstant(init_obj(f, 0));
      return;
    }

    Eigen::MatrixXcd R(MK, MK), C(MK, M);
    Eigen::MatrixXcd P(MK, M);
    Eigen::VectorXcd hist(MK);
    for (int it = 0; it < cfg.iterations; ++it) {
      // Step 1: variance update from the current dereverberated signal
      detail::update_variances(D, cfg.smoothing_context, cfg.variance_floor, lambda);
      half_obj(f, 2 * it) = detail::wpe_band_objective(D, lambda);

      // Step 2: normalized correlation statistics and Wiener-Hopf solve
      R.setZero();
      P.setZero();
      for (int t = 0; t < T; ++t) {
        detail::stacked_history(observation.band(static_cast<int>(f)), T, M, K, cfg.delay, t,
                                hist);
        double inv_l = 1.0 / lambda[t];
        R.selfadjointView<Eigen::Lower>().rankUpdate(hist, inv_l);
        P.noalias() += (hist * inv_l) * Y.col(t).adjoint();
      }
      R.triangularView<Eigen::StrictlyUpper>() = R.adjoint();
      double load = cfg.diagonal_loading * R.real().trace() / MK;
      R.diagonal().array() += load;

      Eigen::LLT<Eigen::MatrixXcd> llt(R);
      if (llt.info() == Eigen::Success) {
        C = llt.solve(P);
      } else {
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(R);
        if (!lu.isInvertible()) {
          passthrough[f] = 1;
          D = Y;
          result.filters[f].setZero();
          for (int jt = it; jt < cfg.iterations; ++jt) {
            half_obj(f, 2 * jt) = half_obj(f, 2 * it);
            half_obj(f, 2 * jt + 1) = half_obj(f, 2 * it);
          }
          result.variances.col(f) = lambda;
          return;
        }
        C = lu.solve(P);
      }
      result.filters[f] = C;

      // subtract the predicted late reverberation
      for (int t = 0; t < T; ++t) {
        detail::stacked_history(observation.band(static_cast<int>(f)), T, M, K, cfg.delay, t,
                                hist);
        D.col(t) = Y.col(t) - C.adjoint() * hist;
      }
      half_obj(f, 2 * it + 1) = detail::wpe_band_objective(D, lambda);
    }
    result.variances.col(f) = lambda;
  });

  for (int f = 0; f < F; ++f)
    if (passthrough[f]) result.passthrough_bands.push_back(f);

  result.objective.resize(cfg.iterations + 1);
  result.half_step_objective.resize(2 * cfg.iterations);
  result.objective[0] = init_obj.col(0).sum();
  for (int it = 0; it < cfg.iterations; ++it) {
    result.half_step_objective[2 * it] = half_obj.col(2 * it).sum();
    result.half_step_objective[2 * it + 1] = half_obj.col(2 * it + 1).sum();
    result.objective[it + 1] = result.half_step_objective[2 * it + 1];
  }
  return result;
}

// Negative log-likelihood (up to the constant) of the prediction residual
// under the given filters and variances, summed over frames and bins.
inline double wpe_objective(const ComplexSpectrogram& observation,
                            const std::vector<Eigen::MatrixXcd>& filters,
                            const Eigen::MatrixXd& variances, int delay) {
  const int T = observation.frames();
  const int F = observation.bins();
  const int M = observation.channels();
  if (static_cast<int>(filters.size()) != F)
    throw ConfigError("wpe_objective: filter count != bins");
  if (variances.rows() != T || variances.cols() != F)
    throw ConfigError("wpe_objective: variance shape mismatch");
  if ((variances.array() <= 0.0).any())
    throw NumericalError("wpe_objective: variances must be positive");

  for (const auto& C : filters)
    if (C.cols() != M || C.rows() % M != 0)
      throw ConfigError("wpe_objective: filter shape mismatch");

  Eigen::VectorXd per_bin(F);
  parallel_for(0, F, [&](long f) {
    const auto& C = filters[f];
    const int K = static_cast<int>(C.rows()) / M;
    Eigen::Map<const Eigen::MatrixXcd> Y(observation.band(static_cast<int>(f)), M, T);
    Eigen::VectorXcd hist(M * K);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
      detail::stacked_history(observation.band(static_cast<int>(f)), T, M, K, delay, t, hist);
      double r = (Y.col(t) - C.adjoint() * hist).squaredNorm();
      acc += r / variances(t, f) + M * std::log(variances(t, f));
    }
    per_bin[f] = acc;
  });
  return per_bin.sum();
}

}  // namespace farfield
