#pragma once

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "bsslab/common.hpp"
#include "bsslab/wave.hpp"

namespace bsslab {

enum class Window { hann, hamming, blackman };

struct StftConfig {
  int fft_size = 1024;
  int hop = 512;
  Window window = Window::hann;

  void validate() const {
    if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
      throw InvalidConfig("StftConfig: fft_size must be a positive power of two");
    if (hop <= 0 || hop >= fft_size || fft_size % hop != 0)
      throw InvalidConfig("StftConfig: hop must divide fft_size and leave overlap");
  }

  int bins() const { return fft_size / 2 + 1; }
};

// Complex one-sided STFT tensor; ch[c](i, j) is bin i of frame j.
struct Spectrogram {
  std::vector<CMat> ch;
  int hop = 512;
  int window_len = 1024;
  int sample_rate = 16000;

  Eigen::Index channels() const { return static_cast<Eigen::Index>(ch.size()); }
  Eigen::Index bins() const { return ch.empty() ? 0 : ch.front().rows(); }
  Eigen::Index frames() const { return ch.empty() ? 0 : ch.front().cols(); }
};

// Periodic window of length n (the DFT-even form used for overlap-add).
inline Vec make_window(Window kind, int n) {
  Vec w(n);
  for (int t = 0; t < n; ++t) {
    const double x = 2.0 * M_PI * t / n;
    switch (kind) {
      case Window::hann: w[t] = 0.5 - 0.5 * std::cos(x); break;
      case Window::hamming: w[t] = 0.54 - 0.46 * std::cos(x); break;
      case Window::blackman: w[t] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2 * x); break;
    }
  }
  return w;
}

// Signals are zero-padded by one window length at both ends so every input
// sample receives full overlap-add weight during synthesis.
inline int stft_pad(const StftConfig& cfg) { return cfg.fft_size; }

inline Eigen::Index stft_frame_count(Eigen::Index samples, const StftConfig& cfg) {
  const Eigen::Index padded = samples + 2 * stft_pad(cfg);
  const Eigen::Index span = padded - cfg.fft_size;
  return span / cfg.hop + (span % cfg.hop ? 2 : 1);
}

inline Spectrogram stft(const WaveTensor& wave, const StftConfig& cfg) {
  cfg.validate();
  wave.validate();

  const int fft_size = cfg.fft_size;
  const int pad = stft_pad(cfg);
  const Eigen::Index n_frames = stft_frame_count(wave.length(), cfg);
  const Vec win = make_window(cfg.window, fft_size);

  Spectrogram spec;
  spec.hop = cfg.hop;
  spec.window_len = fft_size;
  spec.sample_rate = wave.sample_rate;
  spec.ch.resize(static_cast<std::size_t>(wave.channels()));

  Eigen::FFT<double> fft;
  std::vector<cplx> frame(fft_size), bins(fft_size);

  for (Eigen::Index c = 0; c < wave.channels(); ++c) {
    CMat& out = spec.ch[static_cast<std::size_t>(c)];
    out.resize(cfg.bins(), n_frames);
    for (Eigen::Index f = 0; f < n_frames; ++f) {
      const Eigen::Index start = f * cfg.hop - pad;  // position in the unpadded signal
      for (int t = 0; t < fft_size; ++t) {
        const Eigen::Index s = start + t;
        const double v = (s >= 0 && s < wave.length()) ? wave.samples(c, s) : 0.0;
        frame[static_cast<std::size_t>(t)] = cplx(v * win[t], 0.0);
      }
      fft.fwd(bins, frame);
      for (int i = 0; i < cfg.bins(); ++i) out(i, f) = bins[static_cast<std::size_t>(i)];
    }
  }
  return spec;
}

inline WaveTensor istft(const Spectrogram& spec, const StftConfig& cfg, Eigen::Index out_len) {
  cfg.validate();
  if (spec.ch.empty() || spec.bins() != cfg.bins() || spec.hop != cfg.hop ||
      spec.window_len != cfg.fft_size)
    throw InvalidInput("istft: spectrogram shape does not match config");
  if (out_len < 0) throw InvalidInput("istft: negative output length");

  const int fft_size = cfg.fft_size;
  const int pad = stft_pad(cfg);
  const Eigen::Index n_frames = spec.frames();
  const Eigen::Index total = (n_frames - 1) * cfg.hop + fft_size;
  const Vec win = make_window(cfg.window, fft_size);

  // Window-squared normalization is shared by all channels.
  Vec norm = Vec::Zero(total);
  for (Eigen::Index f = 0; f < n_frames; ++f)
    norm.segment(f * cfg.hop, fft_size) += win.cwiseProduct(win);

  WaveTensor wave;
  wave.sample_rate = spec.sample_rate;
  wave.samples = Mat::Zero(spec.channels(), out_len);

  Eigen::FFT<double> fft;
  std::vector<cplx> bins(fft_size), frame(fft_size);

  for (Eigen::Index c = 0; c < spec.channels(); ++c) {
    const CMat& in = spec.ch[static_cast<std::size_t>(c)];
    Vec acc = Vec::Zero(total);
    for (Eigen::Index f = 0; f < n_frames; ++f) {
      // rebuild the full spectrum from the one-sided half (Hermitian symmetry)
      for (int i = 0; i < cfg.bins(); ++i) bins[static_cast<std::size_t>(i)] = in(i, f);
      for (int i = cfg.bins(); i < fft_size; ++i)
        bins[static_cast<std::size_t>(i)] = std::conj(in(fft_size - i, f));
      fft.inv(frame, bins);
      for (int t = 0; t < fft_size; ++t)
        acc[f * cfg.hop + t] += frame[static_cast<std::size_t>(t)].real() * win[t];
    }
    for (Eigen::Index s = 0; s < out_len; ++s) {
      const Eigen::Index p = s + pad;
      wave.samples(c, s) = (p < total && norm[p] > 0.0) ? acc[p] / norm[p] : 0.0;
    }
  }
  return wave;
}

}  // namespace bsslab
