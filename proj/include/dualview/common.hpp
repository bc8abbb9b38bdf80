#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dualview {

// Base of every error the library raises. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad JSON line, missing field, unparsable run file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A record parsed fine but breaks a data-model invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// FNV-1a, 64 bit. Byte-oriented, so stable across platforms and runs.
class Fnv1a64 {
 public:
  Fnv1a64& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  // Length-prefixed field so that ("ab","c") and ("a","bc") hash differently.
  Fnv1a64& field(std::string_view bytes) {
    std::uint64_t n = bytes.size();
    char len[8];
    for (int i = 0; i < 8; ++i) len[i] = static_cast<char>((n >> (8 * i)) & 0xff);
    update(std::string_view(len, 8));
    return update(bytes);
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  return Fnv1a64().update(bytes).digest();
}

std::string to_hex16(std::uint64_t value);

std::uint64_t splitmix64(std::uint64_t x);

// Seed for a named sub-stream, e.g. (global seed, record_id).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

// mt19937_64 has a standardized output sequence; the std distributions do not,
// so bounded draws and shuffles are done here to keep outputs portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  std::size_t below(std::size_t n);

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // First `count` entries of a seeded permutation of [0, n).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count);

 private:
  std::mt19937_64 engine_;
};

// Lowercased ASCII alphanumeric runs. Bytes >= 0x80 are kept inside tokens so
// UTF-8 words are not shredded.
std::vector<std::string> tokenize(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Progress and warnings go to stderr; data never does.
void set_log_enabled(bool enabled);
void log_info(std::string_view message);
void log_warning(std::string_view message);
// Warnings issued so far in this process, counted even while logging is off.
std::size_t warning_count();

}  // namespace dualview
