#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bsslab/common.hpp"

namespace bsslab {

// Multichannel time-domain audio, rows are channels.
struct WaveTensor {
  Mat samples;  // channels x sample count
  int sample_rate = 16000;

  Eigen::Index channels() const { return samples.rows(); }
  Eigen::Index length() const { return samples.cols(); }

  void validate() const {
    if (samples.rows() < 1 || samples.cols() < 1)
      throw InvalidInput("WaveTensor: need at least one channel and one sample");
    if (sample_rate <= 0) throw InvalidInput("WaveTensor: sample_rate must be positive");
    if (!samples.allFinite()) throw InvalidInput("WaveTensor: non-finite sample");
  }
};

namespace wav_detail {

inline void put_u32(std::vector<char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::vector<char>& b, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t get_u16(const unsigned char* p) {
  return std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8);
}

}  // namespace wav_detail

enum class WavFormat { pcm16, float32 };

// Writes a RIFF/WAVE file, interleaved channels.
inline void write_wav(const std::string& path, const WaveTensor& wave,
                      WavFormat fmt = WavFormat::float32) {
  using namespace wav_detail;
  wave.validate();
  const auto channels = static_cast<std::uint16_t>(wave.channels());
  const auto frames = static_cast<std::uint32_t>(wave.length());
  const std::uint16_t bytes_per_sample = fmt == WavFormat::pcm16 ? 2 : 4;
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bytes_per_sample);
  const std::uint32_t data_bytes = frames * block_align;

  std::vector<char> buf;
  buf.reserve(44 + data_bytes);
  const char* riff = "RIFF";
  buf.insert(buf.end(), riff, riff + 4);
  put_u32(buf, 36 + data_bytes);
  const char* wavefmt = "WAVEfmt ";
  buf.insert(buf.end(), wavefmt, wavefmt + 8);
  put_u32(buf, 16);
  put_u16(buf, fmt == WavFormat::pcm16 ? 1 : 3);  // PCM or IEEE float
  put_u16(buf, channels);
  put_u32(buf, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(buf, static_cast<std::uint32_t>(wave.sample_rate) * block_align);
  put_u16(buf, block_align);
  put_u16(buf, static_cast<std::uint16_t>(bytes_per_sample * 8));
  const char* data = "data";
  buf.insert(buf.end(), data, data + 4);
  put_u32(buf, data_bytes);

  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double v = wave.samples(c, t);
      if (fmt == WavFormat::pcm16) {
        double clipped = std::max(-1.0, std::min(1.0, v));
        auto q = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
        put_u16(buf, static_cast<std::uint16_t>(q));
      } else {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(buf, bits);
      }
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("write_wav: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InvalidInput("write_wav: write failed for " + path);
}

// Reads PCM 16-bit or IEEE float 32-bit WAV (plain or extensible header).
inline WaveTensor read_wav(const std::string& path) {
  using namespace wav_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("read_wav: cannot open " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw InvalidInput("read_wav: not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data_ptr = nullptr;
  std::uint32_t data_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const unsigned char* hdr = raw.data() + pos;
    const std::uint32_t chunk_size = get_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (pos + 8 + chunk_size > raw.size()) break;
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_size >= 16) {
      format = get_u16(body);
      channels = get_u16(body + 2);
      sample_rate = get_u32(body + 4);
      bits = get_u16(body + 14);
      if (format == 0xfffe && chunk_size >= 40) format = get_u16(body + 24);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = body;
      data_bytes = chunk_size;
    }
    pos += 8 + chunk_size + (chunk_size & 1);  // chunks are word aligned
  }

  if (channels == 0 || sample_rate == 0 || data_ptr == nullptr)
    throw InvalidInput("read_wav: missing fmt or data chunk: " + path);
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw InvalidInput("read_wav: unsupported encoding (need PCM16 or float32): " + path);

  const std::uint32_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::uint32_t frames = data_bytes / (bytes_per_sample * channels);
  WaveTensor wave;
  wave.sample_rate = static_cast<int>(sample_rate);
  wave.samples.resize(channels, frames);
  const unsigned char* p = data_ptr;
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      if (pcm16) {
        auto v = static_cast<std::int16_t>(get_u16(p));
        wave.samples(c, t) = static_cast<double>(v) / 32768.0;
        p += 2;
      } else {
        const std::uint32_t u = get_u32(p);
        float f;
        std::memcpy(&f, &u, 4);
        wave.samples(c, t) = static_cast<double>(f);
        p += 4;
      }
    }
  }
  return wave;
}

}  // namespace bsslab
