// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <vector>

#include "farfield/stft.hpp"

namespace farfield {

// Per-class time-frequency masks, classes x frames x bins. Soft masks sum
// to 1 over classes at every bin; ideal binary masks are one-hot.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(int classes, int frames, int bins)
      : C_(classes), T_(frames), F_(bins),
        data_(static_cast<size_t>(classes) * frames * bins, 0.0) {}

  int num_classes() const { return C_; }
  int frames() const { return T_; }
  int bins() const { return F_; }

  double& at(int c, int t, int f) {
    return data_[(static_cast<size_t>(c) * T_ + t) * F_ + f];
  }
  double at(int c, int t, int f) const {
    return data_[(static_cast<size_t>(c) * T_ + t) * F_ + f];
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  // Temporal activity profile of class c: mean mask over bins per frame.
  Eigen::VectorXd temporal_profile(int c) const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(T_);
    for (int t = 0; t < T_; ++t) {
      double s = 0.0;
      for (int f = 0; f < F_; ++f) s += at(c, t, f);
      p[t] = s / F_;
    }
    return p;
  }

 private:
  int C_ = 0, T_ = 0, F_ = 0;
  std::vector<double> data_;
};

// Oracle ideal binary mask: class with strictly the largest multichannel
// power wins a bin; ties go to the lowest class index.
inline MaskSet ideal_binary_mask(const std::vector<ComplexSpectrogram>& class_spectrograms) {
  if (class_spectrograms.size() < 2)
    throw ConfigError("ideal_binary_mask: need at least two classes");
  const int C = static_cast<int>(class_spectrograms.size());
  const int T = class_spectrograms[0].frames();
  const int F = class_spectrograms[0].bins();
  const int M = class_spectrograms[0].channels();
  for (const auto& s : class_spectrograms)
    if (s.frames() != T || s.bins() != F || s.channels() != M)
      throw ConfigError("ideal_binary_mask: class spectrogram shapes differ");

  MaskSet masks(C, T, F);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t) {
      int best = 0;
      double best_power = -1.0;
      for (int c = 0; c < C; ++c) {
        double p = 0.0;
        for (int m = 0; m < M; ++m) p += std::norm(class_spectrograms[c].at(t, f, m));
        if (p > best_power) {
          best_power = p;
          best = c;
        }
      }
      masks.at(best, t, f) = 1.0;
    }
  return masks;
}

// Mixture of complex angular central Gaussians fitted per frequency.
struct CacgmmState {
  Eigen::MatrixXd mixture_weights;                    // F x C, rows sum to 1
  std::vector<std::vector<Eigen::MatrixXcd>> shapes;  // [F][C], M x M, trace M
  std::vector<double> log_likelihood_history;         // one entry per EM iteration
  std::vector<int> degenerate_bands;                  // all-zero bins -> uniform
};

struct CacgmmResult {
  MaskSet posteriors;  // raw, before permutation alignment
  CacgmmState state;
};

namespace detail {

struct CacgBand {
  // one EM problem: data on the complex unit sphere
  Eigen::MatrixXcd z;          // M x N (valid frames only)
  std::vector<int> frame_of;   // column -> original frame index
};

inline double log_cacg_constant(int M) {
  return std::lgamma(M) - std::log(2.0) - M * std::log(M_PI);
}

// One EM pass over a band. gamma: N x C posteriors (in/out).
// Returns the data log-likelihood evaluated at the updated parameters.
inline double cacg_em_iteration(const Eigen::MatrixXcd& z, Eigen::MatrixXd& gamma,
                                Eigen::VectorXd& weights, std::vector<Eigen::MatrixXcd>& B) {
  const int M = static_cast<int>(z.rows());
  const long N = z.cols();
  const int C = static_cast<int>(gamma.cols());
  const double eig_floor_rel = 1e-10;

  // M-step: weights and shape matrices (quadratic-form weighted scatter,
  // one fixed-point pass per EM iteration, then trace normalization)
  Eigen::MatrixXd quad(N, C);  // z^H B^{-1} z at the previous shapes
  for (int c = 0; c < C; ++c) {
    Eigen::LLT<Eigen::MatrixXcd> llt(B[c]);
    Eigen::MatrixXcd solved = llt.solve(z);  // B^{-1} z
    for (long n = 0; n < N; ++n)
      quad(n, c) = std::max(std::real(z.col(n).dot(solved.col(n))), 1e-300);
  }
  weights = gamma.colwise().sum() / static_cast<double>(N);
  for (int c = 0; c < C; ++c) {
    double mass = gamma.col(c).sum();
    if (mass <= 0.0) continue;  // empty class keeps its previous shape
    Eigen::MatrixXcd scatter = Eigen::MatrixXcd::Zero(M, M);
    for (long n = 0; n < N; ++n)
      scatter.selfadjointView<Eigen::Lower>().rankUpdate(z.col(n), gamma(n, c) / quad(n, c));
    scatter.triangularView<Eigen::StrictlyUpper>() = scatter.adjoint();
    Eigen::MatrixXcd Bc = (static_cast<double>(M) / mass) * scatter;
    // floor the spectrum for invertibility, renormalize the trace to M
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(Bc);
    Eigen::VectorXd ev = eig.eigenvalues();
    double floor_value = eig_floor_rel * std::max(ev.maxCoeff(), 1e-300);
    for (int k = 0; k < M; ++k) ev[k] = std::max(ev[k], floor_value);
    Bc = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();
    Bc *= static_cast<double>(M) / Bc.real().trace();
    B[c] = 0.5 * (Bc + Bc.adjoint());
  }

  // E-step at the new parameters
  Eigen::MatrixXd log_post(N, C);
  for (int c = 0; c < C; ++c) {
    Eigen::LLT<Eigen::MatrixXcd> llt(B[c]);
    double log_det = 0.0;
    for (int k = 0; k < M; ++k) log_det += 2.0 * std::log(std::real(llt.matrixL()(k, k)));
    Eigen::MatrixXcd solved = llt.solve(z);
    double log_pi = weights[c] > 0 ? std::log(weights[c]) : -750.0;
    for (long n = 0; n < N; ++n) {
      double q = std::max(std::real(z.col(n).dot(solved.col(n))), 1e-300);
      log_post(n, c) = log_pi + log_cacg_constant(M) - log_det - M * std::log(q);
    }
  }
  double ll = 0.0;
  for (long n = 0; n < N; ++n) {
    double mx = log_post.row(n).maxCoeff();
    double s = (log_post.row(n).array() - mx).exp().sum();
    ll += mx + std::log(s);
    gamma.row(n) = (log_post.row(n).array() - (mx + std::log(s))).exp();
  }
  return ll;
}

}  // namespace detail

// EM for the spatial mixture model. Posteriors are the returned masks; the
// caller aligns frequency permutations afterwards (see cacgmm_masks for the
// combined call). Initialization draws per-bin posteriors from a symmetric
// Dirichlet. Optional initial_posteriors overrides the random init.
inline CacgmmResult cacgmm_em(const ComplexSpectrogram& observation, int num_classes,
                              int iterations, std::uint64_t seed,
                              const MaskSet* initial_posteriors = nullptr) {
  const int T = observation.frames();
  const int F = observation.bins();
  const int M = observation.channels();
  if (M < 2) throw ConfigError("cacgmm_em: need at least two channels for spatial cues");
  if (num_classes < 1) throw ConfigError("cacgmm_em: need at least one class");
  if (num_classes > T) throw ConfigError("cacgmm_em: more classes than frames");
  if (iterations < 1) throw ConfigError("cacgmm_em: need at least one iteration");
  if (initial_posteriors &&
      (initial_posteriors->num_classes() != num_classes ||
       initial_posteriors->frames() != T || initial_posteriors->bins() != F))
    throw ConfigError("cacgmm_em: initial posterior shape mismatch");
  const int C = num_classes;

  CacgmmResult result;
  result.posteriors = MaskSet(C, T, F);
  result.state.mixture_weights = Eigen::MatrixXd::Constant(F, C, 1.0 / C);
  result.state.shapes.assign(F, std::vector<Eigen::MatrixXcd>(C, Eigen::MatrixXcd::Identity(M, M)));
  Eigen::MatrixXd ll_per_band = Eigen::MatrixXd::Zero(F, iterations);
  std::vector<char> degenerate(F, 0);
  Rng seeder(seed);

  parallel_for(0, F, [&](long f) {
    // project valid frames onto the unit sphere
    detail::CacgBand band;
    band.z.resize(M, T);
    band.frame_of.reserve(T);
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXcd y = observation.frame_vector(t, static_cast<int>(f));
      double norm = y.norm();
      if (norm > 0.0) {
        band.z.col(static_cast<long>(band.frame_of.size())) = y / norm;
        band.frame_of.push_back(t);
      }
    }
    const long N = static_cast<long>(band.frame_of.size());
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t) result.posteriors.at(c, t, static_cast<int>(f)) = 1.0 / C;
    if (N == 0) {
      degenerate[f] = 1;
      return;
    }
    band.z.conservativeResize(M, N);

    // init posteriors: symmetric Dirichlet via normalized exponentials
    Eigen::MatrixXd gamma(N, C);
    if (initial_posteriors) {
      for (long n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
          gamma(n, c) = initial_posteriors->at(c, band.frame_of[n], static_cast<int>(f));
    } else {
      Rng rng = seeder.fork(static_cast<std::uint64_t>(f));
      for (long n = 0; n < N; ++n) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) {
          double u;
          do { u = rng.uniform(); } while (u <= 0.0);
          gamma(n, c) = -std::log(u);
          s += gamma(n, c);
        }
        gamma.row(n) /= s;
      }
    }

    Eigen::VectorXd weights = Eigen::VectorXd::Constant(C, 1.0 / C);
    auto& B = result.state.shapes[f];
    for (int it = 0; it < iterations; ++it)
      ll_per_band(f, it) = detail::cacg_em_iteration(band.z, gamma, weights, B);

    result.state.mixture_weights.row(f) = weights;
    for (long n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        result.posteriors.at(c, band.frame_of[n], static_cast<int>(f)) = gamma(n, c);
  });

  for (int f = 0; f < F; ++f)
    if (degenerate[f]) result.state.degenerate_bands.push_back(f);
  result.state.log_likelihood_history.resize(iterations);
  for (int it = 0; it < iterations; ++it)
    result.state.log_likelihood_history[it] = ll_per_band.col(it).sum();
  return result;
}

struct AlignmentResult {
  MaskSet masks;
  std::vector<std::vector<int>> permutations;  // per bin: output c takes input perm[c]
};

// Resolves per-frequency class permutations greedily: starting from the
// most confident bin and expanding outward, each bin's classes are permuted
// to best correlate with the running per-class temporal profiles.
inline AlignmentResult align_frequency_permutations(const MaskSet& raw) {
  const int C = raw.num_classes();
  const int T = raw.frames();
  const int F = raw.bins();
  if (C < 1) throw ConfigError("align_frequency_permutations: empty mask set");

  AlignmentResult result;
  result.masks = raw;
  result.permutations.assign(F, std::vector<int>(C));
  for (int f = 0; f < F; ++f)
    for (int c = 0; c < C; ++c) result.permutations[f][c] = c;
  if (C == 1 || F < 2) return result;

  // per-bin confidence: mean max-posterior
  Eigen::VectorXd confidence(F);
  for (int f = 0; f < F; ++f) {
    double s = 0.0;
    for (int t = 0; t < T; ++t) {
      double mx = 0.0;
      for (int c = 0; c < C; ++c) mx = std::max(mx, raw.at(c, t, f));
      s += mx;
    }
    confidence[f] = s / T;
  }
  int anchor = 0;
  confidence.maxCoeff(&anchor);

  // visit order: anchor, then alternating outward
  std::vector<int> order;
  order.reserve(F);
  order.push_back(anchor);
  for (int step = 1; step < F; ++step) {
    if (anchor + step < F) order.push_back(anchor + step);
    if (anchor - step >= 0) order.push_back(anchor - step);
  }

  auto centered = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd c = v.array() - v.mean();
    double n = c.norm();
    return n > 0 ? Eigen::VectorXd(c / n) : Eigen::VectorXd::Zero(v.size()).eval();
  };

  Eigen::MatrixXd profile_sum = Eigen::MatrixXd::Zero(T, C);
  int aligned_count = 0;
  std::vector<int> perm(C), best_perm(C);
  for (int f : order) {
    Eigen::MatrixXd band(T, C);  // temporal activity of each class at f
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t) band(t, c) = raw.at(c, t, f);

    if (aligned_count > 0) {
      Eigen::MatrixXd ref(T, C), cand(T, C);
      for (int c = 0; c < C; ++c) {
        ref.col(c) = centered(profile_sum.col(c) / aligned_count);
        cand.col(c) = centered(band.col(c));
      }
      Eigen::MatrixXd score = ref.transpose() * cand;  // score(i,j): ref i vs cand j
      std::iota(perm.begin(), perm.end(), 0);
      double best = -1e300;
      std::vector<int> trial(perm);
      do {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += score(c, trial[c]);
        if (s > best + 1e-15) {
          best = s;
          best_perm = trial;
        }
      } while (std::next_permutation(trial.begin(), trial.end()));
      perm = best_perm;
    } else {
      std::iota(perm.begin(), perm.end(), 0);
    }

    result.permutations[f] = perm;
    for (int c = 0; c < C; ++c) {
      profile_sum.col(c) += band.col(perm[c]);
      for (int t = 0; t < T; ++t) result.masks.at(c, t, f) = band(t, perm[c]);
    }
    ++aligned_count;
  }
  return result;
}

// Convenience: EM followed by permutation alignment.
inline std::pair<MaskSet, CacgmmState> cacgmm_masks(const ComplexSpectrogram& observation,
                                                    int num_classes, int iterations,
                                                    std::uint64_t seed) {
  CacgmmResult em = cacgmm_em(observation, num_classes, iterations, seed);
  AlignmentResult aligned = align_frequency_permutations(em.posteriors);
  return {std::move(aligned.masks), std::move(em.state)};
}

// Heuristic: the class with the flattest temporal activity profile is
// treated as the noise class.
inline int identify_noise_class(const MaskSet& masks) {
  int best = 0;
  double best_cv = std::numeric_limits<double>::infinity();
  for (int c = 0; c < masks.num_classes(); ++c) {
    Eigen::VectorXd p = masks.temporal_profile(c);
    double mean = p.mean();
    if (mean <= 0) continue;
    double var = (p.array() - mean).square().sum() / p.size();
    double cv = std::sqrt(var) / mean;
    if (cv < best_cv) {
      best_cv = cv;
      best = c;
    }
  }
  return best;
}

}  // namespace farfield
