#pragma once

// 16 kHz WAV I/O and the log-mel front end (400-point STFT, hop 160,
// periodic Hann, reflect padding, 80 Slaney mel bands over 0-8 kHz).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <fftw3.h>

#include "dysflux/error.hpp"

namespace dysflux {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
};

struct MelConfig {
  int n_fft = 400;
  int hop_length = 160;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double power_floor = 1e-10;
};

/// frames x bands, row-major.
struct LogMelFrames {
  std::size_t frames = 0;
  std::size_t bands = 0;
  std::vector<double> values;

  double at(std::size_t frame, std::size_t band) const { return values[frame * bands + band]; }
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

inline float float_from_bits(std::uint32_t bits) {
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

inline std::uint32_t bits_from_float(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  return bits;
}

}  // namespace detail

/// Reads mono 16-bit PCM or 32-bit float RIFF/WAVE data. The sample rate is
/// returned as found; `log_mel` rejects anything other than 16 kHz.
inline Waveform read_wav(std::istream& in) {
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  auto fail = [](const std::string& why) { throw Error(ErrorCode::MalformedWav, why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      if (std::memcmp(chunk, "data", 4) == 0) {
        data = bytes.data() + body;  // truncated data chunk: take what is there
        data_size = bytes.size() - body;
      }
      break;
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail("short fmt chunk");
      format = detail::read_u16(chunk + 8);
      channels = detail::read_u16(chunk + 10);
      rate = detail::read_u32(chunk + 12);
      bits = detail::read_u16(chunk + 22);
      if (format == 0xFFFE && size >= 40) format = detail::read_u16(chunk + 32);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || !data) fail("missing fmt or data chunk");
  if (channels != 1) fail("expected mono, got " + std::to_string(channels) + " channels");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    w.samples.reserve(data_size / 2);
    for (std::size_t k = 0; k + 1 < data_size; k += 2) {
      const auto v = static_cast<std::int16_t>(detail::read_u16(data + k));
      w.samples.push_back(static_cast<float>(v) / 32768.0f);
    }
  } else if (format == 3 && bits == 32) {
    w.samples.reserve(data_size / 4);
    for (std::size_t k = 0; k + 3 < data_size; k += 4) {
      w.samples.push_back(detail::float_from_bits(detail::read_u32(data + k)));
    }
  } else {
    fail("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits));
  }
  return w;
}

inline Waveform read_wav_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_wav(in);
}

/// Writes 16-bit PCM mono, clipping to [-1, 1].
inline void write_wav_pcm16(std::ostream& out, const Waveform& w) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  out.write("RIFF", 4);
  detail::put_u32(out, 36 + 2 * n);
  out.write("WAVEfmt ", 8);
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out.write("data", 4);
  detail::put_u32(out, 2 * n);
  for (float s : w.samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0f))));
  }
}

namespace detail {

// FFTW planning is not thread-safe; execution on new arrays is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
};

using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

}  // namespace detail

/// In-place forward DFT of any length (unnormalized, e^{-2 pi i kt/n}).
inline void fft(std::vector<std::complex<double>>& x) {
  if (x.size() <= 1) return;
  auto* data = reinterpret_cast<fftw_complex*>(x.data());
  detail::FftwPlan plan;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    plan.reset(fftw_plan_dft_1d(static_cast<int>(x.size()), data, data, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED));
  }
  fftw_execute(plan.get());
}

inline double hz_to_mel_slaney(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_hz / f_sp + std::log(hz / min_log_hz) / logstep;
}

inline double mel_to_hz_slaney(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

class LogMelExtractor {
 public:
  explicit LogMelExtractor(MelConfig config = {}) : config_(config) {
    const auto n_fft = static_cast<std::size_t>(config_.n_fft);
    window_.resize(n_fft);
    for (std::size_t k = 0; k < n_fft; ++k) {
      window_[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                        static_cast<double>(n_fft));
    }
    build_filters();
    std::vector<double> in(n_fft);
    std::vector<std::complex<double>> out(bins());
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    plan_ = std::shared_ptr<fftw_plan_s>(
        fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                             FFTW_ESTIMATE | FFTW_UNALIGNED),
        detail::FftwPlanDeleter{});
  }

  const MelConfig& config() const { return config_; }
  std::size_t bins() const { return static_cast<std::size_t>(config_.n_fft / 2 + 1); }

  /// Filter weight of `band` at FFT bin `bin`.
  double filter(std::size_t band, std::size_t bin) const { return filters_[band * bins() + bin]; }

  std::size_t frame_count(std::size_t samples) const {
    return samples / static_cast<std::size_t>(config_.hop_length) + 1;
  }

  /// Power spectrum of every centred frame, frames x bins.
  std::vector<double> power_spectrogram(const Waveform& w) const {
    check(w);
    const auto n = static_cast<long>(w.samples.size());
    const long half = config_.n_fft / 2;
    auto sample = [&](long i) {
      // Reflect padding without repeating the edge sample.
      if (i < 0) i = -i;
      if (i >= n) i = 2 * (n - 1) - i;
      return static_cast<double>(w.samples[static_cast<std::size_t>(i)]);
    };
    const std::size_t frames = frame_count(w.samples.size());
    const std::size_t nb = bins();
    std::vector<double> power(frames * nb);
    std::vector<double> buf(static_cast<std::size_t>(config_.n_fft));
    std::vector<std::complex<double>> spectrum(nb);
    for (std::size_t t = 0; t < frames; ++t) {
      const long origin = static_cast<long>(t) * config_.hop_length - half;
      for (std::size_t k = 0; k < buf.size(); ++k) {
        buf[k] = sample(origin + static_cast<long>(k)) * window_[k];
      }
      fftw_execute_dft_r2c(plan_.get(), buf.data(), reinterpret_cast<fftw_complex*>(spectrum.data()));
      for (std::size_t b = 0; b < nb; ++b) power[t * nb + b] = std::norm(spectrum[b]);
    }
    return power;
  }

  LogMelFrames operator()(const Waveform& w) const {
    const auto power = power_spectrogram(w);
    const std::size_t nb = bins();
    LogMelFrames out;
    out.frames = power.size() / nb;
    out.bands = static_cast<std::size_t>(config_.n_mels);
    out.values.resize(out.frames * out.bands);
    for (std::size_t t = 0; t < out.frames; ++t) {
      for (std::size_t m = 0; m < out.bands; ++m) {
        double e = 0.0;
        for (std::size_t b = 0; b < nb; ++b) e += filters_[m * nb + b] * power[t * nb + b];
        out.values[t * out.bands + m] = std::log10(std::max(e, config_.power_floor));
      }
    }
    return out;
  }

 private:
  void check(const Waveform& w) const {
    if (w.sample_rate != kSampleRate) {
      throw Error(ErrorCode::WrongSampleRate, std::to_string(w.sample_rate) + " Hz, expected 16000");
    }
    if (w.samples.size() < static_cast<std::size_t>(config_.n_fft)) {
      throw Error(ErrorCode::TooShort, std::to_string(w.samples.size()) + " samples");
    }
    for (float s : w.samples) {
      if (!std::isfinite(s)) throw Error(ErrorCode::MalformedWav, "non-finite sample");
    }
  }

  // Triangular filters on the Slaney mel scale with area normalization.
  void build_filters() {
    const std::size_t nb = bins();
    const auto n_mels = static_cast<std::size_t>(config_.n_mels);
    const double lo = hz_to_mel_slaney(config_.fmin);
    const double hi = hz_to_mel_slaney(config_.fmax);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      edges[i] = mel_to_hz_slaney(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    }
    filters_.assign(n_mels * nb, 0.0);
    for (std::size_t m = 0; m < n_mels; ++m) {
      const double norm = 2.0 / (edges[m + 2] - edges[m]);
      for (std::size_t b = 0; b < nb; ++b) {
        const double f = static_cast<double>(b) * kSampleRate / config_.n_fft;
        const double lower = (f - edges[m]) / (edges[m + 1] - edges[m]);
        const double upper = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
        filters_[m * nb + b] = std::max(0.0, std::min(lower, upper)) * norm;
      }
    }
  }

  MelConfig config_;
  std::vector<double> window_;
  std::vector<double> filters_;
  std::shared_ptr<fftw_plan_s> plan_;
};

inline LogMelFrames log_mel(const Waveform& w) {
  static const LogMelExtractor extractor;
  return extractor(w);
}

inline constexpr char kFramesMagic[4] = {'L', 'M', 'E', 'L'};

/// Header: magic "LMEL", uint32 frames, uint32 bands; then frames*bands
/// little-endian float32 values, row-major.
inline void write_frames(std::ostream& out, const LogMelFrames& f) {
  out.write(kFramesMagic, 4);
  detail::put_u32(out, static_cast<std::uint32_t>(f.frames));
  detail::put_u32(out, static_cast<std::uint32_t>(f.bands));
  for (double v : f.values) detail::put_u32(out, detail::bits_from_float(static_cast<float>(v)));
}

inline LogMelFrames read_frames(std::istream& in) {
  std::array<unsigned char, 12> head{};
  if (!in.read(reinterpret_cast<char*>(head.data()), 12) || std::memcmp(head.data(), kFramesMagic, 4) != 0) {
    throw Error(ErrorCode::MalformedWav, "not a log-mel frame file");
  }
  LogMelFrames f;
  f.frames = detail::read_u32(head.data() + 4);
  f.bands = detail::read_u32(head.data() + 8);
  f.values.resize(f.frames * f.bands);
  std::array<unsigned char, 4> b{};
  for (auto& v : f.values) {
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error(ErrorCode::MalformedWav, "truncated frames");
    v = detail::float_from_bits(detail::read_u32(b.data()));
  }
  return f;
}

}  // namespace dysflux
