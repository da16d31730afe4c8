#include "lmz/pmf.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <string>

#include "lmz/errors.hpp"

namespace lmz {

namespace {

constexpr unsigned kFixedBits = 52;
constexpr std::uint64_t kFixedMask = (std::uint64_t{1} << kFixedBits) - 1;
constexpr double kFixedScale = static_cast<double>(std::uint64_t{1} << kFixedBits);

unsigned min_bits_for(std::size_t n) {
  return static_cast<unsigned>(std::bit_width(n - 1)) + 2;
}

}  // namespace

double Pmf::code_length(std::size_t s) const {
  return static_cast<double>(bits) - std::log2(static_cast<double>(mass(s)));
}

std::size_t Pmf::find(std::uint32_t target) const {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return static_cast<std::size_t>(it - cumulative.begin()) - 1;
}

Pmf quantize(std::span<const double> probabilities, unsigned bits) {
  Pmf out;
  QuantizeScratch scratch;
  quantize_into(probabilities, bits, out, scratch);
  return out;
}

void quantize_into(std::span<const double> probabilities, unsigned bits,
                   Pmf& out, QuantizeScratch& scratch) {
  const std::size_t n = probabilities.size();
  if (n == 0) fail(ErrorKind::invalid_distribution, "empty distribution");
  if (bits > kMaxPmfBits || bits < min_bits_for(n))
    fail(ErrorKind::precision,
         "PMF precision " + std::to_string(bits) + " bits unsupported for " +
             std::to_string(n) + " symbols");

  const std::uint64_t total = std::uint64_t{1} << bits;
  const std::uint64_t spread = total - n;
  constexpr unsigned kBucketShift = kFixedBits - 8;

  scratch.remainders.resize(n);
  scratch.masses.resize(n);
  std::array<std::uint32_t, 256> histogram{};
  std::int64_t residual = static_cast<std::int64_t>(total);
  double sum = 0.0;
  bool negative = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = probabilities[i];
    negative |= !(p >= 0.0);
    sum += p;
    // p * 2^52 is exact; adding and removing 2^52 rounds it to the nearest
    // integer (ties to even), same as nearbyint, without a libm call.
    const double exact = p * kFixedScale;
    const auto fixed = static_cast<std::uint64_t>((exact + kFixedScale) - kFixedScale);
    const unsigned __int128 scaled =
        static_cast<unsigned __int128>(fixed & ((std::uint64_t{1} << 53) - 1)) * spread;
    const auto mass = static_cast<std::uint64_t>(scaled >> kFixedBits) + 1;
    const auto rem = static_cast<std::uint64_t>(scaled) & kFixedMask;
    scratch.masses[i] = static_cast<std::uint32_t>(mass);
    scratch.remainders[i] = rem;
    ++histogram[rem >> kBucketShift];
    residual -= static_cast<std::int64_t>(mass);
  }
  if (negative) fail(ErrorKind::invalid_distribution, "negative or NaN probability");
  if (std::fabs(sum - 1.0) > 1e-6)
    fail(ErrorKind::invalid_distribution, "probabilities do not sum to 1");

  if (residual != 0) {
    const auto& rem = scratch.remainders;
    if (residual > 0) {
      // Whole rounds first, then the largest remainders.
      const auto rounds = static_cast<std::uint64_t>(residual) / n;
      const auto extra = static_cast<std::size_t>(residual % n);
      if (rounds)
        for (auto& m : scratch.masses) m += static_cast<std::uint32_t>(rounds);
      if (extra) {
        // The extra units go to the largest remainders, lower index first
        // among equals: select the threshold remainder, then one pass.
        std::size_t bucket = 256, before = 0;
        while (before + histogram[--bucket] < extra) before += histogram[bucket];
        auto& values = scratch.selection;
        values.clear();
        std::uint64_t low = ~std::uint64_t{0}, high = 0;
        for (auto r : rem)
          if ((r >> kBucketShift) == bucket) {
            values.push_back(r);
            low = std::min(low, r);
            high = std::max(high, r);
          }
        const std::size_t rank = extra - before - 1;
        std::uint64_t threshold = high;
        std::size_t above = before;
        if (low != high) {
          std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank),
                           values.end(), std::greater<>());
          threshold = values[rank];
          for (std::size_t k = 0; k < rank; ++k) above += values[k] > threshold;
        }
        std::size_t at_threshold = extra - above;
        for (std::size_t i = 0; i < n; ++i) {
          if (rem[i] > threshold) {
            ++scratch.masses[i];
          } else if (rem[i] == threshold && at_threshold > 0) {
            ++scratch.masses[i];
            --at_threshold;
          }
        }
      }
    } else {
      // Only reachable when the inputs sum to slightly more than one: take
      // units back from the smallest remainders, never below one unit.
      auto& order = scratch.order;
      order.resize(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
      std::sort(order.begin(), order.end(),
                [&rem](std::uint32_t a, std::uint32_t b) {
                  return rem[a] != rem[b] ? rem[a] < rem[b] : a > b;
                });
      while (residual < 0) {
        bool took = false;
        for (std::uint32_t i : order) {
          if (residual == 0) break;
          if (scratch.masses[i] > 1) {
            --scratch.masses[i];
            ++residual;
            took = true;
          }
        }
        if (!took) fail(ErrorKind::precision, "cannot fit distribution");
      }
    }
  }

  out.bits = bits;
  out.cumulative.resize(n + 1);
  out.cumulative[0] = 0;
  for (std::size_t i = 0; i < n; ++i)
    out.cumulative[i + 1] = out.cumulative[i] + scratch.masses[i];
}

}  // namespace lmz
