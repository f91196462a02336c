// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <vector>

#include "farfield/masks.hpp"
#include "farfield/stft.hpp"

namespace farfield {

// Masked spatial covariance estimates, one M x M Hermitian PSD pair per bin.
struct CovarianceSet {
  std::vector<Eigen::MatrixXcd> phi_target;        // F of M x M
  std::vector<Eigen::MatrixXcd> phi_interference;  // F of M x M
  Eigen::VectorXd target_mass;                     // sum of target masks per bin
  Eigen::VectorXd interference_mass;
  std::vector<int> fallback_bands;  // zero mask mass -> uniform weighting

  int bins() const { return static_cast<int>(phi_target.size()); }
  int channels() const { return phi_target.empty() ? 0 : static_cast<int>(phi_target[0].rows()); }
};

enum class BeamformerKind { MvdrRtf, Gev };

struct BeamformerWeights {
  Eigen::MatrixXcd w;  // F x M
  BeamformerKind kind = BeamformerKind::MvdrRtf;
  int reference_channel = 0;
};

// Relative transfer function, normalized so h[f, reference] == 1 exactly.
struct Rtf {
  Eigen::MatrixXcd h;  // F x M
  int reference_channel = 0;
};

namespace detail {

inline Eigen::MatrixXcd masked_covariance(const ComplexSpectrogram& spec, int f,
                                          const Eigen::VectorXd& mask, double mass) {
  const int T = spec.frames();
  const int M = spec.channels();
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(M, M);
  for (int t = 0; t < T; ++t) {
    double g = mass > 0.0 ? mask[t] : 1.0;
    if (g == 0.0) continue;
    phi.selfadjointView<Eigen::Lower>().rankUpdate(spec.frame_vector(t, f), g);
  }
  phi.triangularView<Eigen::StrictlyUpper>() = phi.adjoint();
  phi /= mass > 0.0 ? mass : static_cast<double>(T);
  return phi;
}

}  // namespace detail

// Weighted outer-product averages: phi = sum_t mask[t] y y^H / sum_t mask[t].
// The interference mask is the sum of the masks of interference_classes.
// Bins where a mask has zero mass fall back to uniform weights.
inline CovarianceSet estimate_covariances(const ComplexSpectrogram& spec, const MaskSet& masks,
                                          int target_class,
                                          const std::vector<int>& interference_classes) {
  const int T = spec.frames();
  const int F = spec.bins();
  if (masks.frames() != T || masks.bins() != F)
    throw ConfigError("estimate_covariances: mask shape does not match spectrogram");
  if (target_class < 0 || target_class >= masks.num_classes())
    throw ConfigError("estimate_covariances: bad target class");
  if (interference_classes.empty())
    throw ConfigError("estimate_covariances: need at least one interference class");
  for (int c : interference_classes)
    if (c < 0 || c >= masks.num_classes())
      throw ConfigError("estimate_covariances: bad interference class");

  CovarianceSet cov;
  cov.phi_target.resize(F);
  cov.phi_interference.resize(F);
  cov.target_mass.resize(F);
  cov.interference_mass.resize(F);
  std::vector<char> fallback(F, 0);

  parallel_for(0, F, [&](long f) {
    Eigen::VectorXd tgt(T), itf(T);
    for (int t = 0; t < T; ++t) {
      tgt[t] = masks.at(target_class, t, static_cast<int>(f));
      double s = 0.0;
      for (int c : interference_classes) s += masks.at(c, t, static_cast<int>(f));
      itf[t] = s;
    }
    double tgt_mass = tgt.sum();
    double itf_mass = itf.sum();
    cov.target_mass[f] = tgt_mass;
    cov.interference_mass[f] = itf_mass;
    if (tgt_mass <= 0.0 || itf_mass <= 0.0) fallback[f] = 1;
    cov.phi_target[f] = detail::masked_covariance(spec, static_cast<int>(f), tgt, tgt_mass);
    cov.phi_interference[f] =
        detail::masked_covariance(spec, static_cast<int>(f), itf, itf_mass);
  });
  for (int f = 0; f < F; ++f)
    if (fallback[f]) cov.fallback_bands.push_back(f);
  return cov;
}

// Principal eigenvector of the target covariance, normalized by the
// reference channel. Optionally subtracts the interference covariance
// before the eigendecomposition.
inline Rtf estimate_rtf(const CovarianceSet& cov, int reference_channel,
                        bool subtract_interference = false) {
  const int F = cov.bins();
  const int M = cov.channels();
  if (reference_channel < 0 || reference_channel >= M)
    throw ConfigError("estimate_rtf: bad reference channel");

  Rtf rtf;
  rtf.reference_channel = reference_channel;
  rtf.h.resize(F, M);
  std::vector<char> dead(F, 0);
  parallel_for(0, F, [&](long f) {
    Eigen::MatrixXcd phi = cov.phi_target[f];
    if (subtract_interference) phi -= cov.phi_interference[f];
    phi = 0.5 * (phi + phi.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(phi);
    Eigen::VectorXcd h = eig.eigenvectors().col(M - 1);  // largest eigenvalue
    if (std::abs(h[reference_channel]) < 1e-12 * h.norm()) {
      dead[f] = 1;
      return;
    }
    rtf.h.row(f) = (h / h[reference_channel]).transpose();
  });
  for (int f = 0; f < F; ++f)
    if (dead[f])
      throw NumericalError("estimate_rtf: reference channel has no target energy at bin " +
                           std::to_string(f));
  return rtf;
}

// w = Phi_nn^-1 h / (h^H Phi_nn^-1 h), with relative diagonal loading on
// the interference covariance. Satisfies w^H h = 1 at every bin.
inline BeamformerWeights mvdr_weights(const CovarianceSet& cov, const Rtf& rtf,
                                      double diagonal_loading = 1e-6) {
  const int F = cov.bins();
  const int M = cov.channels();
  if (rtf.h.rows() != F || rtf.h.cols() != M)
    throw ConfigError("mvdr_weights: rtf shape mismatch");

  BeamformerWeights bw;
  bw.kind = BeamformerKind::MvdrRtf;
  bw.reference_channel = rtf.reference_channel;
  bw.w.resize(F, M);
  std::vector<char> singular(F, 0);
  parallel_for(0, F, [&](long f) {
    Eigen::MatrixXcd phi = cov.phi_interference[f];
    phi = 0.5 * (phi + phi.adjoint()).eval();
    phi.diagonal().array() += diagonal_loading * phi.real().trace() / M;
    Eigen::VectorXcd h = rtf.h.row(f).transpose();
    Eigen::LLT<Eigen::MatrixXcd> llt(phi);
    Eigen::VectorXcd num;
    if (llt.info() == Eigen::Success) {
      num = llt.solve(h);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(phi);
      if (!lu.isInvertible()) {
        singular[f] = 1;
        return;
      }
      num = lu.solve(h);
    }
    bw.w.row(f) = (num / h.dot(num)).transpose();  // h.dot(num) = h^H num
  });
  for (int f = 0; f < F; ++f)
    if (singular[f])
      throw NumericalError("mvdr_weights: interference covariance singular at bin " +
                           std::to_string(f));
  return bw;
}

// Max-SNR beamformer: principal generalized eigenvector of
// (phi_target, phi_interference). Unit norm, reference phase zero.
inline BeamformerWeights gev_weights(const CovarianceSet& cov, int reference_channel = 0,
                                     double diagonal_loading = 1e-6) {
  const int F = cov.bins();
  const int M = cov.channels();
  if (reference_channel < 0 || reference_channel >= M)
    throw ConfigError("gev_weights: bad reference channel");

  BeamformerWeights bw;
  bw.kind = BeamformerKind::Gev;
  bw.reference_channel = reference_channel;
  bw.w.resize(F, M);
  std::vector<char> singular(F, 0);
  parallel_for(0, F, [&](long f) {
    Eigen::MatrixXcd a = cov.phi_target[f];
    a = 0.5 * (a + a.adjoint()).eval();
    Eigen::MatrixXcd b = cov.phi_interference[f];
    b = 0.5 * (b + b.adjoint()).eval();
    b.diagonal().array() += diagonal_loading * b.real().trace() / M;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a, b);
    if (eig.info() != Eigen::Success) {
      singular[f] = 1;
      return;
    }
    Eigen::VectorXcd w = eig.eigenvectors().col(M - 1);
    w /= w.norm();
    cd ref = w[reference_channel];
    if (std::abs(ref) > 0) w *= std::conj(ref) / std::abs(ref);  // zero reference phase
    bw.w.row(f) = w.transpose();
  });
  for (int f = 0; f < F; ++f)
    if (singular[f])
      throw NumericalError("gev_weights: generalized eigensolve failed at bin " +
                           std::to_string(f));
  return bw;
}

// Blind analytic normalization postfilter for GEV weights: rescales each
// bin so the beamformer passes the noise with unit average gain.
inline BeamformerWeights ban_postfilter(const CovarianceSet& cov, const BeamformerWeights& in) {
  const int F = cov.bins();
  const int M = cov.channels();
  if (in.w.rows() != F || in.w.cols() != M)
    throw ConfigError("ban_postfilter: weight shape mismatch");
  BeamformerWeights out = in;
  parallel_for(0, F, [&](long f) {
    const Eigen::MatrixXcd& phi = cov.phi_interference[f];
    Eigen::VectorXcd w = in.w.row(f).transpose();
    Eigen::VectorXcd pw = phi * w;
    double num = std::sqrt(std::max(std::real(pw.dot(pw)), 0.0) / M);
    double den = std::max(std::real(w.dot(pw)), 1e-300);
    out.w.row(f) = in.w.row(f) * (num / den);
  });
  return out;
}

// out[t, f] = w[f]^H y[t, f]; yields a single-channel spectrogram.
inline ComplexSpectrogram apply_beamformer(const ComplexSpectrogram& spec,
                                           const BeamformerWeights& weights) {
  const int T = spec.frames();
  const int F = spec.bins();
  const int M = spec.channels();
  if (weights.w.rows() != F || weights.w.cols() != M)
    throw ConfigError("apply_beamformer: weight shape does not match spectrogram");
  ComplexSpectrogram out(T, F, 1, spec.config(), spec.sample_rate());
  parallel_for(0, F, [&](long f) {
    Eigen::VectorXcd w = weights.w.row(f).transpose();
    for (int t = 0; t < T; ++t)
      out.at(t, static_cast<int>(f), 0) = w.dot(spec.frame_vector(t, static_cast<int>(f)));
  });
  return out;
}

}  // namespace farfield
