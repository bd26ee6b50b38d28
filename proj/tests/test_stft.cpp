#include <doctest.h>

#include <bsslab/stft.hpp>
#include <bsslab/wave.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

using namespace bsslab;

namespace {

WaveTensor random_wave(int channels, int len, std::uint64_t seed, int rate = 16000) {
  rng::Rng r(seed);
  WaveTensor w;
  w.sample_rate = rate;
  w.samples.resize(channels, len);
  for (int c = 0; c < channels; ++c)
    for (int t = 0; t < len; ++t) w.samples(c, t) = r.uniform(-1.0, 1.0);
  return w;
}

// Direct O(F^2) DFT of a windowed frame; independent of the fft path.
std::vector<cplx> dft_oracle(const Vec& frame) {
  const int n = static_cast<int>(frame.size());
  std::vector<cplx> out(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    cplx acc(0.0, 0.0);
    for (int t = 0; t < n; ++t) {
      const double ph = -2.0 * M_PI * m * t / n;
      acc += frame[t] * cplx(std::cos(ph), std::sin(ph));
    }
    out[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

double one_sided_energy(const CMat& bins_col_frame, Eigen::Index frame, int fft_size) {
  double e = 0.0;
  const int half = fft_size / 2;
  for (int i = 0; i <= half; ++i) {
    const double w = (i == 0 || i == half) ? 1.0 : 2.0;
    e += w * std::norm(bins_col_frame(i, frame));
  }
  return e;
}

}  // namespace

TEST_CASE("zero wave maps to zero spectrogram of the documented shape") {
  WaveTensor w;
  w.samples = Mat::Zero(2, 16000);
  w.sample_rate = 16000;
  StftConfig cfg;
  const Spectrogram s = stft(w, cfg);
  CHECK(s.channels() == 2);
  CHECK(s.bins() == cfg.fft_size / 2 + 1);
  CHECK(s.frames() == stft_frame_count(16000, cfg));
  for (const auto& ch : s.ch) CHECK(ch.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bin-centered sinusoid matches the direct DFT oracle and its energy split") {
  StftConfig cfg;  // hann, 1024/512
  const int fs = 16000;
  const int k = 40;  // bin-center frequency k*fs/fft_size
  const double f0 = static_cast<double>(k) * fs / cfg.fft_size;
  WaveTensor w;
  w.sample_rate = fs;
  w.samples.resize(1, fs);
  for (int t = 0; t < fs; ++t) w.samples(0, t) = std::sin(2.0 * M_PI * f0 * t / fs);

  const Spectrogram s = stft(w, cfg);

  // pick an interior frame fully covered by signal
  const int pad = stft_pad(cfg);
  const Eigen::Index frame = (pad + 4000) / cfg.hop;
  const Eigen::Index start = frame * cfg.hop - pad;
  REQUIRE(start >= 0);
  REQUIRE(start + cfg.fft_size <= w.length());

  const Vec win = make_window(cfg.window, cfg.fft_size);
  Vec windowed(cfg.fft_size);
  for (int t = 0; t < cfg.fft_size; ++t) windowed[t] = w.samples(0, start + t) * win[t];
  const auto oracle = dft_oracle(windowed);

  for (int i = 0; i < cfg.bins(); ++i)
    CHECK(std::abs(s.ch[0](i, frame) - oracle[static_cast<std::size_t>(i)]) <=
          1e-8 * std::abs(oracle[static_cast<std::size_t>(k)]));

  // Hann main lobe of a bin-centered tone spans bins {k-1, k, k+1} with
  // amplitude ratios (1/4, 1/2, 1/4), i.e. bin k carries 2/3 of the frame
  // energy and the three-bin lobe carries essentially all of it.
  const double total = one_sided_energy(s.ch[0], frame, cfg.fft_size);
  const double at_k = 2.0 * std::norm(s.ch[0](k, frame));
  const double lobe = 2.0 * (std::norm(s.ch[0](k - 1, frame)) + std::norm(s.ch[0](k, frame)) +
                             std::norm(s.ch[0](k + 1, frame)));
  CHECK(at_k / total == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(lobe / total >= 0.999);
}

TEST_CASE("round trip recovers the input within 1e-10 of its peak") {
  StftConfig cfg;
  const WaveTensor w = random_wave(2, 16000, 1234);
  const Spectrogram s = stft(w, cfg);
  const WaveTensor back = istft(s, cfg, w.length());
  const double err = (back.samples - w.samples).cwiseAbs().maxCoeff();
  CHECK(err <= 1e-10 * w.samples.cwiseAbs().maxCoeff());
}

TEST_CASE("round trip holds for every window and COLA hop") {
  for (Window win : {Window::hann, Window::hamming, Window::blackman}) {
    for (int hop : {64, 128, 256}) {
      StftConfig cfg;
      cfg.fft_size = 512;
      cfg.hop = hop;
      cfg.window = win;
      const WaveTensor w = random_wave(1, 5000, 77 + hop);
      const WaveTensor back = istft(stft(w, cfg), cfg, w.length());
      const double err = (back.samples - w.samples).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-10 * w.samples.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("istft is linear and maps zero to zero") {
  StftConfig cfg;
  const WaveTensor w = random_wave(1, 4096, 9);
  Spectrogram s = stft(w, cfg);

  Spectrogram zero = s;
  for (auto& ch : zero.ch) ch.setZero();
  const WaveTensor zw = istft(zero, cfg, 4096);
  CHECK(zw.samples.cwiseAbs().maxCoeff() == 0.0);

  Spectrogram scaled = s;
  for (auto& ch : scaled.ch) ch *= 3.5;
  const WaveTensor a = istft(s, cfg, 4096);
  const WaveTensor b = istft(scaled, cfg, 4096);
  CHECK((b.samples - 3.5 * a.samples).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("Parseval consistency against the framed windowed signal") {
  StftConfig cfg;
  const WaveTensor w = random_wave(2, 10000, 42);
  const Spectrogram s = stft(w, cfg);
  const Vec win = make_window(cfg.window, cfg.fft_size);
  const int pad = stft_pad(cfg);

  double spec_energy = 0.0;
  double windowed_energy = 0.0;
  for (Eigen::Index c = 0; c < w.channels(); ++c) {
    for (Eigen::Index f = 0; f < s.frames(); ++f) {
      spec_energy += one_sided_energy(s.ch[static_cast<std::size_t>(c)], f, cfg.fft_size);
      const Eigen::Index start = f * cfg.hop - pad;
      for (int t = 0; t < cfg.fft_size; ++t) {
        const Eigen::Index p = start + t;
        const double v = (p >= 0 && p < w.length()) ? w.samples(c, p) : 0.0;
        windowed_energy += v * v * win[t] * win[t];
      }
    }
  }
  CHECK(spec_energy ==
        doctest::Approx(cfg.fft_size * windowed_energy).epsilon(1e-8));
}

TEST_CASE("stft is deterministic") {
  StftConfig cfg;
  const WaveTensor w = random_wave(2, 8000, 5);
  const Spectrogram a = stft(w, cfg);
  const Spectrogram b = stft(w, cfg);
  for (std::size_t c = 0; c < a.ch.size(); ++c) CHECK(a.ch[c] == b.ch[c]);
}

TEST_CASE("invalid inputs are rejected") {
  StftConfig cfg;
  WaveTensor empty;
  empty.samples.resize(1, 0);
  CHECK_THROWS_AS(stft(empty, cfg), InvalidInput);

  StftConfig bad_hop;
  bad_hop.hop = 300;  // does not divide 1024
  CHECK_THROWS_AS(stft(random_wave(1, 1000, 1), bad_hop), InvalidConfig);

  StftConfig bad_fft;
  bad_fft.fft_size = 1000;
  bad_fft.hop = 500;
  CHECK_THROWS_AS(stft(random_wave(1, 1000, 1), bad_fft), InvalidConfig);

  const Spectrogram s = stft(random_wave(1, 1000, 1), cfg);
  StftConfig other;
  other.fft_size = 512;
  other.hop = 256;
  CHECK_THROWS_AS(istft(s, other, 1000), InvalidInput);
}

TEST_CASE("wav files round trip in both encodings") {
  WaveTensor w = random_wave(2, 3000, 21, 16000);
  w.samples *= 0.5;

  write_wav("test_f32.wav", w, WavFormat::float32);
  const WaveTensor f = read_wav("test_f32.wav");
  CHECK(f.sample_rate == 16000);
  CHECK(f.channels() == 2);
  CHECK((f.samples - w.samples).cwiseAbs().maxCoeff() <= 1e-7);

  write_wav("test_pcm.wav", w, WavFormat::pcm16);
  const WaveTensor p = read_wav("test_pcm.wav");
  CHECK((p.samples - w.samples).cwiseAbs().maxCoeff() <= 1.0 / 32768.0 + 1e-9);

  std::remove("test_f32.wav");
  std::remove("test_pcm.wav");
}
