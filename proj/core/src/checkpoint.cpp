// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/nn/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace emodiff::nn {

namespace {

constexpr char kMagic[4] = {'E', 'D', 'C', 'K'};

template <typename U>
void put(std::string& buf, U v) {
  char bytes[sizeof(U)];
  std::memcpy(bytes, &v, sizeof(U));
  buf.append(bytes, sizeof(U));
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  const char* cursor(std::size_t n) {
    need(n);
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError("truncated checkpoint");
  }

  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_real(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

const std::string& blob_at(const ConfigBlob& blob, const std::string& key) {
  auto it = blob.find(key);
  if (it == blob.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

double blob_real(const ConfigBlob& blob, const std::string& key) {
  const auto& v = blob_at(blob, key);
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') throw ConfigError("not a number: " + key + "=" + v);
  return d;
}

long blob_int(const ConfigBlob& blob, const std::string& key) {
  const auto& v = blob_at(blob, key);
  char* end = nullptr;
  const long n = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') throw ConfigError("not an integer: " + key + "=" + v);
  return n;
}

template <typename T>
std::string encode_checkpoint(const ConfigBlob& config, const ParamSet<T>& params) {
  std::string blob;
  for (const auto& [k, v] : config) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ConfigError("config key/value cannot be stored in a checkpoint: " + k);
    }
    blob += k + "=" + v + "\n";
  }
  std::string buf(kMagic, 4);
  put<std::uint16_t>(buf, kCheckpointVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(blob.size()));
  buf += blob;
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, m] : params) {
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(name.size()));
    buf += name;
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.cols()));
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(sizeof(T)));
    buf.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(T));
  }
  return buf;
}

template <typename T>
Checkpoint<T> decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an EDCK checkpoint");
  }
  r.bytes(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint<T> ck;
  std::istringstream blob(r.bytes(r.get<std::uint32_t>()));
  std::string line;
  while (std::getline(blob, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed checkpoint config line: " + line);
    ck.config[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.get<std::uint16_t>());
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    const auto width = r.get<std::uint8_t>();
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    Matrix<T> m(rows, cols);
    if (width == 4) {
      const char* p = r.cursor(n * 4);
      for (std::size_t j = 0; j < n; ++j) {
        float v;
        std::memcpy(&v, p + j * 4, 4);
        m.data()[j] = static_cast<T>(v);
      }
    } else if (width == 8) {
      const char* p = r.cursor(n * 8);
      for (std::size_t j = 0; j < n; ++j) {
        double v;
        std::memcpy(&v, p + j * 8, 8);
        m.data()[j] = static_cast<T>(v);
      }
    } else {
      throw FormatError("unsupported tensor element width in checkpoint");
    }
    ck.params.add(name, std::move(m));
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  if (!ck.params.all_finite()) throw ValidationError("checkpoint contains non-finite values");
  return ck;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ConfigBlob& config,
                     const ParamSet<T>& params) {
  const std::string buf = encode_checkpoint(config, params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint<T>(buf);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template std::string encode_checkpoint(const ConfigBlob&, const ParamSet<float>&);
template std::string encode_checkpoint(const ConfigBlob&, const ParamSet<double>&);
template Checkpoint<float> decode_checkpoint(const std::string&);
template Checkpoint<double> decode_checkpoint(const std::string&);
template void save_checkpoint(const std::filesystem::path&, const ConfigBlob&, const ParamSet<float>&);
template void save_checkpoint(const std::filesystem::path&, const ConfigBlob&, const ParamSet<double>&);
template Checkpoint<float> load_checkpoint(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace emodiff::nn
