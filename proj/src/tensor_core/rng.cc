#include "uenl/rng.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "uenl/errors.h"

namespace uenl {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t HashName(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t salt) {
  return Mix64(Mix64(base + kGolden) ^ (salt * kGolden + 0x632BE59BD9B4E019ULL));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(DeriveSeed(seed, stream_id)) {}

RngStream::RngStream(std::uint64_t seed, std::string_view stream_name)
    : RngStream(seed, HashName(stream_name)) {}

RngStream RngStream::Fork(std::string_view name) const {
  return RngStream(seed_, DeriveSeed(stream_id_, HashName(name)));
}

std::uint64_t RngStream::NextU64() {
  ++counter_;
  return Mix64(key_ + counter_ * kGolden);
}

double RngStream::Uniform() {
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::Uniform(double low, double high) {
  return low + (high - low) * Uniform();
}

std::uint64_t RngStream::UniformInt(std::uint64_t bound) {
  if (bound == 0) throw Error("UniformInt bound must be positive");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = NextU64();
  while (x >= limit) x = NextU64();
  return x % bound;
}

double RngStream::StandardNormal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  // Box-Muller; Uniform() never returns 0 so the log is finite.
  const double r = std::sqrt(-2.0 * std::log(Uniform()));
  const double theta = 2.0 * std::numbers::pi * Uniform();
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

Tensor SampleStandardNormal(RngStream& rng, Shape shape) {
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = rng.StandardNormal();
  return Tensor(std::move(shape), std::move(data));
}

Tensor SampleUniform(RngStream& rng, Shape shape, double low, double high) {
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = rng.Uniform(low, high);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace uenl
