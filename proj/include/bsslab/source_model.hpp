#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "bsslab/common.hpp"

namespace bsslab {

// Per-source power spectral densities; lam[n](i, j) >= kEps.
struct VarianceTensor {
  std::vector<Mat> lam;
};

// Observed source powers |y_nij|^2, same layout as VarianceTensor.
using PowerTensor = std::vector<Mat>;

// Clustered source model: lambda_nij = sum_o g_no sum_k t_oik v_okj.
// G softly assigns each source to spectral blocks; each block o owns a
// basis matrix T[o] (I x K) and an activation matrix V[o] (K x J).
struct NbtdParams {
  Mat G;               // N x O cluster weights
  std::vector<Mat> T;  // O of I x K
  std::vector<Mat> V;  // O of K x J
  double sigma = 1.0;  // penalty weight on the cluster row sums

  Eigen::Index sources() const { return G.rows(); }
  Eigen::Index blocks() const { return G.cols(); }
  Eigen::Index bases() const { return T.empty() ? 0 : T.front().cols(); }
  Eigen::Index bins() const { return T.empty() ? 0 : T.front().rows(); }
  Eigen::Index frames() const { return V.empty() ? 0 : V.front().cols(); }

  void validate() const {
    if (G.rows() < 1 || G.cols() < 1) throw InvalidInput("NbtdParams: empty G");
    if (T.size() != static_cast<std::size_t>(G.cols()) || T.size() != V.size())
      throw InvalidInput("NbtdParams: block count mismatch");
    if (sigma < 0.0) throw InvalidInput("NbtdParams: sigma must be >= 0");
    auto nonneg = [](const Mat& m) { return m.allFinite() && (m.array() >= 0.0).all(); };
    if (!nonneg(G)) throw InvalidInput("NbtdParams: G must be finite and nonnegative");
    for (const Mat& t : T)
      if (!nonneg(t)) throw InvalidInput("NbtdParams: T must be finite and nonnegative");
    for (const Mat& v : V)
      if (!nonneg(v)) throw InvalidInput("NbtdParams: V must be finite and nonnegative");
  }
};

// Per-source NMF model: lambda_n = T[n] V[n].
struct NmfParams {
  std::vector<Mat> T;  // N of I x K
  std::vector<Mat> V;  // N of K x J

  Eigen::Index sources() const { return static_cast<Eigen::Index>(T.size()); }
  Eigen::Index bases() const { return T.empty() ? 0 : T.front().cols(); }
  Eigen::Index bins() const { return T.empty() ? 0 : T.front().rows(); }
  Eigen::Index frames() const { return V.empty() ? 0 : V.front().cols(); }
};

// Rank-one-tensor decomposition record. Kept for completeness of the model
// family; nothing fits it.
struct NcpdForm {
  Mat Z;   // N x K
  Mat Tt;  // I x K
  Mat Vt;  // J x K
};

namespace detail {

inline Mat block_product(const Mat& t, const Mat& v) {
  Mat b(t.rows(), v.cols());
  b.noalias() = t * v;
  return b.cwiseMax(kEps);
}

}  // namespace detail

inline VarianceTensor nbtd_variance(const NbtdParams& p) {
  const auto n_src = p.sources();
  const auto o_blocks = p.blocks();
  std::vector<Mat> b(static_cast<std::size_t>(o_blocks));
  for (Eigen::Index o = 0; o < o_blocks; ++o)
    b[static_cast<std::size_t>(o)] = detail::block_product(p.T[o], p.V[o]);

  VarianceTensor out;
  out.lam.resize(static_cast<std::size_t>(n_src));
  for (Eigen::Index n = 0; n < n_src; ++n) {
    Mat acc = p.G(n, 0) * b[0];
    for (Eigen::Index o = 1; o < o_blocks; ++o) acc += p.G(n, o) * b[static_cast<std::size_t>(o)];
    out.lam[static_cast<std::size_t>(n)] = acc.cwiseMax(kEps);
  }
  return out;
}

inline VarianceTensor nmf_variance(const NmfParams& p) {
  VarianceTensor out;
  out.lam.resize(p.T.size());
  for (std::size_t n = 0; n < p.T.size(); ++n)
    out.lam[n] = detail::block_product(p.T[n], p.V[n]);
  return out;
}

// Multiplicative update of the basis tensor T (activations and clusters fixed):
//   t_oik <- t_oik sqrt( sum_{n,j} p_nij g_no v_okj B_oij^-2
//                      / sum_j v_okj B_oij^-1 ),  B_oij = sum_k t_oik v_okj.
inline NbtdParams update_bases(const NbtdParams& p, const PowerTensor& power) {
  NbtdParams out = p;
  const auto n_src = p.sources();
  for (Eigen::Index o = 0; o < p.blocks(); ++o) {
    const Mat b = detail::block_product(p.T[o], p.V[o]);
    Mat weighted = p.G(0, o) * power[0];
    for (Eigen::Index n = 1; n < n_src; ++n) weighted += p.G(n, o) * power[static_cast<std::size_t>(n)];

    const Mat inv_b = b.cwiseInverse();
    Mat num(p.bins(), p.bases());
    Mat den(p.bins(), p.bases());
    num.noalias() = (weighted.array() * inv_b.array().square()).matrix() * p.V[o].transpose();
    den.noalias() = inv_b * p.V[o].transpose();
    out.T[o] = (p.T[o].array() * (num.array() / den.array().max(kEps)).sqrt()).cwiseMax(kEps);
  }
  return out;
}

// Companion rule with the roles of (i, T) and (j, V) exchanged.
inline NbtdParams update_activations(const NbtdParams& p, const PowerTensor& power) {
  NbtdParams out = p;
  const auto n_src = p.sources();
  for (Eigen::Index o = 0; o < p.blocks(); ++o) {
    const Mat b = detail::block_product(p.T[o], p.V[o]);
    Mat weighted = p.G(0, o) * power[0];
    for (Eigen::Index n = 1; n < n_src; ++n) weighted += p.G(n, o) * power[static_cast<std::size_t>(n)];

    const Mat inv_b = b.cwiseInverse();
    Mat num(p.bases(), p.frames());
    Mat den(p.bases(), p.frames());
    num.noalias() = p.T[o].transpose() * (weighted.array() * inv_b.array().square()).matrix();
    den.noalias() = p.T[o].transpose() * inv_b;
    out.V[o] = (p.V[o].array() * (num.array() / den.array().max(kEps)).sqrt()).cwiseMax(kEps);
  }
  return out;
}

// Cluster update; sigma enters only the denominator:
//   g_no <- g_no sqrt( sum_ij p_nij B_oij M_nij^-2
//                    / (sum_ij B_oij M_nij^-1 + sigma) ),  M_nij = sum_o g_no B_oij.
inline NbtdParams update_clusters(const NbtdParams& p, const PowerTensor& power) {
  NbtdParams out = p;
  const auto n_src = p.sources();
  const auto o_blocks = p.blocks();

  std::vector<Mat> b(static_cast<std::size_t>(o_blocks));
  for (Eigen::Index o = 0; o < o_blocks; ++o)
    b[static_cast<std::size_t>(o)] = detail::block_product(p.T[o], p.V[o]);

  for (Eigen::Index n = 0; n < n_src; ++n) {
    Mat m = p.G(n, 0) * b[0];
    for (Eigen::Index o = 1; o < o_blocks; ++o) m += p.G(n, o) * b[static_cast<std::size_t>(o)];
    m = m.cwiseMax(kEps);
    const Mat inv_m = m.cwiseInverse();
    const Mat& pn = power[static_cast<std::size_t>(n)];
    for (Eigen::Index o = 0; o < o_blocks; ++o) {
      const auto& bo = b[static_cast<std::size_t>(o)].array();
      const double num = (pn.array() * bo * inv_m.array().square()).sum();
      const double den = (bo * inv_m.array()).sum() + p.sigma;
      out.G(n, o) = std::max(kEps, p.G(n, o) * std::sqrt(num / std::max(den, kEps)));
    }
  }
  return out;
}

namespace detail {

inline void draw_factors(rng::Rng& r, Eigen::Index blocks, Eigen::Index bins,
                         Eigen::Index bases, Eigen::Index frames, std::vector<Mat>& t,
                         std::vector<Mat>& v) {
  t.resize(static_cast<std::size_t>(blocks));
  v.resize(static_cast<std::size_t>(blocks));
  for (auto& m : t) {
    m.resize(bins, bases);
    for (Eigen::Index i = 0; i < bins; ++i)
      for (Eigen::Index k = 0; k < bases; ++k) m(i, k) = std::max(kEps, r.uniform01());
  }
  for (auto& m : v) {
    m.resize(bases, frames);
    for (Eigen::Index k = 0; k < bases; ++k)
      for (Eigen::Index j = 0; j < frames; ++j) m(k, j) = std::max(kEps, r.uniform01());
  }
}

}  // namespace detail

// Uniform(0,1) initialization, floored at kEps; G rows sum to one so the
// cluster constraint holds exactly at the start. T and V are drawn before G,
// which keeps the factor streams of the NBTD and NMF models aligned for a
// given seed.
inline NbtdParams init_model(Eigen::Index n_src, Eigen::Index o_blocks, Eigen::Index k_bases,
                             Eigen::Index i_bins, Eigen::Index j_frames, std::uint64_t seed,
                             double sigma = 1.0) {
  if (n_src < 1 || o_blocks < 1 || k_bases < 1 || i_bins < 1 || j_frames < 1)
    throw InvalidInput("init_model: all dimensions must be positive");
  rng::Rng r(seed);
  NbtdParams p;
  p.sigma = sigma;
  detail::draw_factors(r, o_blocks, i_bins, k_bases, j_frames, p.T, p.V);
  p.G.resize(n_src, o_blocks);
  for (Eigen::Index n = 0; n < n_src; ++n) {
    for (Eigen::Index o = 0; o < o_blocks; ++o) p.G(n, o) = std::max(kEps, r.uniform01());
    p.G.row(n) /= p.G.row(n).sum();
  }
  return p;
}

inline NmfParams init_nmf(Eigen::Index n_src, Eigen::Index k_bases, Eigen::Index i_bins,
                          Eigen::Index j_frames, std::uint64_t seed) {
  if (n_src < 1 || k_bases < 1 || i_bins < 1 || j_frames < 1)
    throw InvalidInput("init_nmf: all dimensions must be positive");
  rng::Rng r(seed);
  NmfParams p;
  detail::draw_factors(r, n_src, i_bins, k_bases, j_frames, p.T, p.V);
  return p;
}

// ILRMA's per-source IS-NMF rules; the G = I specialization of the block
// updates above, kept in the same expression order so the reduction is exact.
inline NmfParams update_nmf_bases(const NmfParams& p, const PowerTensor& power) {
  NmfParams out = p;
  for (std::size_t n = 0; n < p.T.size(); ++n) {
    const Mat b = detail::block_product(p.T[n], p.V[n]);
    const Mat inv_b = b.cwiseInverse();
    Mat num(p.bins(), p.bases());
    Mat den(p.bins(), p.bases());
    num.noalias() = (power[n].array() * inv_b.array().square()).matrix() * p.V[n].transpose();
    den.noalias() = inv_b * p.V[n].transpose();
    out.T[n] = (p.T[n].array() * (num.array() / den.array().max(kEps)).sqrt()).cwiseMax(kEps);
  }
  return out;
}

inline NmfParams update_nmf_activations(const NmfParams& p, const PowerTensor& power) {
  NmfParams out = p;
  for (std::size_t n = 0; n < p.T.size(); ++n) {
    const Mat b = detail::block_product(p.T[n], p.V[n]);
    const Mat inv_b = b.cwiseInverse();
    Mat num(p.bases(), p.frames());
    Mat den(p.bases(), p.frames());
    num.noalias() = p.T[n].transpose() * (power[n].array() * inv_b.array().square()).matrix();
    den.noalias() = p.T[n].transpose() * inv_b;
    out.V[n] = (p.V[n].array() * (num.array() / den.array().max(kEps)).sqrt()).cwiseMax(kEps);
  }
  return out;
}

// --- JSON snapshots (dimensions + row-major arrays) ---

namespace detail {

inline nlohmann::json mat_to_json(const Mat& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Mat mat_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw InvalidInput("mat_from_json: size mismatch");
  Mat m(rows, cols);
  std::size_t p = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[p++];
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const NbtdParams& p) {
  nlohmann::json t = nlohmann::json::array();
  nlohmann::json v = nlohmann::json::array();
  for (const auto& m : p.T) t.push_back(detail::mat_to_json(m));
  for (const auto& m : p.V) v.push_back(detail::mat_to_json(m));
  return {{"model", "nbtd"}, {"G", detail::mat_to_json(p.G)}, {"T", t}, {"V", v},
          {"sigma", p.sigma}};
}

inline NbtdParams nbtd_from_json(const nlohmann::json& j) {
  NbtdParams p;
  p.G = detail::mat_from_json(j.at("G"));
  for (const auto& m : j.at("T")) p.T.push_back(detail::mat_from_json(m));
  for (const auto& m : j.at("V")) p.V.push_back(detail::mat_from_json(m));
  p.sigma = j.at("sigma").get<double>();
  p.validate();
  return p;
}

inline nlohmann::json to_json(const NmfParams& p) {
  nlohmann::json t = nlohmann::json::array();
  nlohmann::json v = nlohmann::json::array();
  for (const auto& m : p.T) t.push_back(detail::mat_to_json(m));
  for (const auto& m : p.V) v.push_back(detail::mat_to_json(m));
  return {{"model", "nmf"}, {"T", t}, {"V", v}};
}

inline NmfParams nmf_from_json(const nlohmann::json& j) {
  NmfParams p;
  for (const auto& m : j.at("T")) p.T.push_back(detail::mat_from_json(m));
  for (const auto& m : j.at("V")) p.V.push_back(detail::mat_from_json(m));
  return p;
}

}  // namespace bsslab
