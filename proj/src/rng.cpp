#include "sbi/rng.hpp"

#include <cmath>

namespace sbi {

double RngStream::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 bounded away from 0 so the log is finite.
  double u1 = 0.0;
  do {
    u1 = unif_(eng_);
  } while (u1 <= 1e-300);
  const double u2 = unif_(eng_);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  // Rejection-free modulo bias is negligible for n << 2^64; keep it simple and fast.
  return static_cast<std::size_t>(eng_() % n);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t root, const std::string& name, std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ULL;  // fnv1a-64
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return splitmix64(splitmix64(root ^ h) ^ (0xabcdef0123456789ULL + index));
}

}  // namespace sbi
