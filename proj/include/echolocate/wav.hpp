#pragma once

#include <algorithm>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "echolocate/core.hpp"

namespace echolocate {

// Little-endian RIFF/WAVE, PCM 16-bit (format 1) and IEEE float 32-bit
// (format 3), 1-8 channels. Integer samples are normalized by 1/32768.

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}
inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 24) & 0xff);
}
inline void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

}  // namespace wav_detail

inline AudioBuffer read_wav(const std::string& path) {
  using namespace wav_detail;
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open WAV file: " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  require(raw.size() >= 44, "WAV file truncated: " + path);
  require(std::memcmp(raw.data(), "RIFF", 4) == 0 && std::memcmp(raw.data() + 8, "WAVE", 4) == 0,
          "not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const char* id = reinterpret_cast<const char*>(raw.data() + pos);
    const std::uint32_t len = read_u32(raw.data() + pos + 4);
    pos += 8;
    if (pos + len > raw.size()) break;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      require(len >= 16, "fmt chunk too short");
      format = read_u16(raw.data() + pos);
      channels = read_u16(raw.data() + pos + 2);
      rate = read_u32(raw.data() + pos + 4);
      bits = read_u16(raw.data() + pos + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = raw.data() + pos;
      data_len = len;
    }
    pos += len + (len & 1);  // chunks are word-aligned
  }

  require(data != nullptr, "WAV file has no data chunk: " + path);
  require(format == 1 || format == 3, "unsupported WAV format code (need PCM or IEEE float)");
  require(channels >= 1 && channels <= 8, "unsupported channel count (need 1-8)");
  require(rate > 0, "invalid sample rate");
  if (format == 1) require(bits == 16, "unsupported PCM bit depth (need 16)");
  if (format == 3) require(bits == 32, "unsupported float bit depth (need 32)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t n_frames = data_len / (bytes_per_sample * channels);
  Eigen::MatrixXd samples(channels, Eigen::Index(n_frames));
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (f * channels + c) * bytes_per_sample;
      double v;
      if (format == 1) {
        std::int16_t s = std::int16_t(read_u16(p));
        v = double(s) / 32768.0;
      } else {
        std::uint32_t u = read_u32(p);
        float fl;
        std::memcpy(&fl, &u, 4);
        v = double(fl);
      }
      samples(Eigen::Index(c), Eigen::Index(f)) = v;
    }
  }
  return AudioBuffer(std::move(samples), int(rate));
}

enum class WavFormat { pcm16, float32 };

inline void write_wav(const std::string& path, const AudioBuffer& buf,
                      WavFormat fmt = WavFormat::float32) {
  using namespace wav_detail;
  const auto channels = std::uint16_t(buf.channels());
  require(channels >= 1 && channels <= 8, "unsupported channel count (need 1-8)");
  const std::uint16_t bits = fmt == WavFormat::pcm16 ? 16 : 32;
  const std::uint32_t rate = std::uint32_t(buf.sample_rate);
  const std::size_t n_frames = std::size_t(buf.frames());
  const std::uint32_t data_len = std::uint32_t(n_frames * channels * (bits / 8));

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, fmt == WavFormat::pcm16 ? 1 : 3);
  put_u16(out, channels);
  put_u32(out, rate);
  put_u32(out, rate * channels * (bits / 8));
  put_u16(out, std::uint16_t(channels * (bits / 8)));
  put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_len);

  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double v = buf.samples(Eigen::Index(c), Eigen::Index(f));
      if (fmt == WavFormat::pcm16) {
        const long q = std::lround(std::max(-1.0, std::min(1.0, v)) * 32768.0);
        put_u16(out, std::uint16_t(std::int16_t(std::clamp(q, -32768L, 32767L))));
      } else {
        const float fl = float(v);
        std::uint32_t u;
        std::memcpy(&u, &fl, 4);
        put_u32(out, u);
      }
    }
  }

  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot write WAV file: " + path);
  os.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
  require(os.good(), "short write to WAV file: " + path);
}

}  // namespace echolocate
