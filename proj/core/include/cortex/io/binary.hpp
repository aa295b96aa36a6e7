#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cortex/error.hpp"

namespace cortex::io {

// FNV-1a 64. Used for file checksums, config hashes and membership hashes.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 1099511628211ULL;
    }
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 14695981039346656037ULL;
};

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
  Fnv1a h;
  h.update(data, n);
  return h.digest();
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

// Byte sink with a running checksum over everything written so far.
class Sink {
 public:
  virtual ~Sink() = default;
  void write(const void* data, std::size_t n) {
    hash_.update(data, n);
    write_impl(data, n);
  }
  std::uint64_t checksum() const { return hash_.digest(); }

  void put_u8(std::uint8_t v) { write(&v, 1); }
  void put_u16(std::uint16_t v) { put_le(v); }
  void put_u32(std::uint32_t v) { put_le(v); }
  void put_u64(std::uint64_t v) { put_le(v); }
  void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void put_string(const std::string& s) {
    if (s.size() > 0xffff) throw IoError("string too long for u16 length prefix");
    put_u16(static_cast<std::uint16_t>(s.size()));
    write(s.data(), s.size());
  }
  void put_f32_array(const float* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      write(v, n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) put_f32(v[i]);
    }
  }
  void put_f64_array(const double* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      write(v, n * sizeof(double));
    } else {
      for (std::size_t i = 0; i < n; ++i) put_f64(v[i]);
    }
  }

 protected:
  virtual void write_impl(const void* data, std::size_t n) = 0;

 private:
  template <typename U>
  void put_le(U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i)
      buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write(buf, sizeof(U));
  }
  Fnv1a hash_;
};

class FileSink : public Sink {
 public:
  explicit FileSink(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path);
  }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed while closing file");
  }

 protected:
  void write_impl(const void* data, std::size_t n) override {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write failed");
  }

 private:
  std::ofstream out_;
};

// Discards bytes; only the checksum side-effect matters.
class HashSink : public Sink {
 protected:
  void write_impl(const void*, std::size_t) override {}
};

class VectorSink : public Sink {
 public:
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 protected:
  void write_impl(const void* data, std::size_t n) override {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }

 private:
  std::vector<std::uint8_t> buf_;
};

// Sequential reader with the mirrored running checksum. Reading past the end
// throws IoError("truncated ..."), which is the truncation contract used by
// the dataset and checkpoint loaders.
class Reader {
 public:
  virtual ~Reader() = default;

  void read(void* data, std::size_t n) {
    read_impl(data, n);
    hash_.update(data, n);
  }
  std::uint64_t checksum() const { return hash_.digest(); }
  virtual bool at_end() = 0;

  std::uint8_t get_u8() {
    std::uint8_t v;
    read(&v, 1);
    return v;
  }
  std::uint16_t get_u16() { return get_le<std::uint16_t>(); }
  std::uint32_t get_u32() { return get_le<std::uint32_t>(); }
  std::uint64_t get_u64() { return get_le<std::uint64_t>(); }
  float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::string get_string() {
    std::uint16_t n = get_u16();
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void get_f32_array(float* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      read(v, n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) v[i] = get_f32();
    }
  }
  void get_f64_array(double* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      read(v, n * sizeof(double));
    } else {
      for (std::size_t i = 0; i < n; ++i) v[i] = get_f64();
    }
  }

 protected:
  virtual void read_impl(void* data, std::size_t n) = 0;

 private:
  template <typename U>
  U get_le() {
    unsigned char buf[sizeof(U)];
    read(buf, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }
  Fnv1a hash_;
};

class FileReader : public Reader {
 public:
  explicit FileReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open for reading: " + path);
  }
  bool at_end() override {
    return in_.peek() == std::ifstream::traits_type::eof();
  }

 protected:
  void read_impl(void* data, std::size_t n) override {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw IoError("truncated file: unexpected end of data");
  }

 private:
  std::ifstream in_;
};

class MemoryReader : public Reader {
 public:
  MemoryReader(const void* data, std::size_t n)
      : p_(static_cast<const std::uint8_t*>(data)), n_(n) {}
  bool at_end() override { return pos_ >= n_; }

 protected:
  void read_impl(void* data, std::size_t n) override {
    if (pos_ + n > n_) throw IoError("truncated buffer: unexpected end of data");
    std::memcpy(data, p_ + pos_, n);
    pos_ += n;
  }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace cortex::io
