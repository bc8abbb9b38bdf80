#include "dualview/common.hpp"

#include <atomic>
#include <cctype>
#include <iostream>
#include <mutex>
#include <numeric>

namespace dualview {

std::string to_hex16(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  return splitmix64(seed ^ splitmix64(fnv1a64(key)));
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  const std::uint64_t bound = n;
  // Reject the biased tail so every value is equally likely.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t count) {
  if (count > n) throw std::invalid_argument("Rng::sample_indices: count exceeds population");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {
std::atomic<bool> g_log_enabled{true};
std::mutex g_log_mu;
std::atomic<std::size_t> g_warnings{0};

void log_line(std::string_view level, std::string_view message) {
  if (!g_log_enabled.load()) return;
  std::lock_guard lock(g_log_mu);
  std::cerr << "[dualview] " << level << message << '\n';
}
}  // namespace

void set_log_enabled(bool enabled) { g_log_enabled.store(enabled); }
void log_info(std::string_view message) { log_line("", message); }
void log_warning(std::string_view message) {
  g_warnings.fetch_add(1);
  log_line("warning: ", message);
}
std::size_t warning_count() { return g_warnings.load(); }

}  // namespace dualview
