#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mvcp/cues.hpp"
#include "mvcp/rng.hpp"

namespace mvcp {

std::size_t InstanceMask::set_count() const {
  return static_cast<std::size_t>(std::count_if(bitmap.begin(), bitmap.end(), [](auto b) { return b != 0; }));
}

bool InstanceMask::is_valid(int image_width, int image_height) const {
  if (bbox.w <= 0 || bbox.h <= 0 || bbox.u < 0 || bbox.v < 0) return false;
  if (bbox.u + bbox.w > image_width || bbox.v + bbox.h > image_height) return false;
  if (bitmap.size() != static_cast<std::size_t>(bbox.w) * static_cast<std::size_t>(bbox.h)) return false;
  return set_count() > 0;
}

std::vector<PixelCoord> InstanceMask::pixels() const {
  std::vector<PixelCoord> out;
  for (int y = 0; y < bbox.h; ++y)
    for (int x = 0; x < bbox.w; ++x)
      if (bitmap[static_cast<std::size_t>(y) * bbox.w + x]) out.push_back({bbox.u + x, bbox.v + y});
  return out;
}

std::vector<PixelCoord> sample_mask_pixels(const InstanceMask& mask, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_mask_pixels: n must be >= 1");
  const std::size_t total = mask.set_count();
  if (total == 0) throw std::invalid_argument("sample_mask_pixels: mask has no set pixels");
  if (static_cast<std::size_t>(n) >= total) return mask.pixels();

  const int w = mask.bbox.w, h = mask.bbox.h;
  const double aspect = static_cast<double>(w) / h;
  const int gx = std::clamp(static_cast<int>(std::lround(std::sqrt(n * aspect))), 1, w);
  const int gy = std::clamp(static_cast<int>(std::lround(static_cast<double>(n) / gx)), 1, h);

  // Set pixels grouped by stratum.
  std::vector<std::vector<PixelCoord>> strata(static_cast<std::size_t>(gx) * gy);
  for (int sy = 0; sy < gy; ++sy) {
    const int y0 = sy * h / gy, y1 = (sy + 1) * h / gy;
    for (int sx = 0; sx < gx; ++sx) {
      const int x0 = sx * w / gx, x1 = (sx + 1) * w / gx;
      auto& bucket = strata[static_cast<std::size_t>(sy) * gx + sx];
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          if (mask.bitmap[static_cast<std::size_t>(y) * w + x]) bucket.push_back({mask.bbox.u + x, mask.bbox.v + y});
    }
  }

  // Largest-remainder apportionment of n over strata by set-pixel count.
  // n < total guarantees no stratum is asked for more than it holds.
  SplitMix64 rng(seed);
  const auto nn = static_cast<std::uint64_t>(n);
  std::vector<std::size_t> quota(strata.size());
  std::vector<std::uint64_t> rem(strata.size()), tiebreak(strata.size());
  std::uint64_t assigned = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const std::uint64_t prod = nn * strata[s].size();
    quota[s] = static_cast<std::size_t>(prod / total);
    rem[s] = prod % total;
    tiebreak[s] = rng.next();
    assigned += quota[s];
  }
  std::vector<std::size_t> order(strata.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rem[a] != rem[b] ? rem[a] > rem[b] : tiebreak[a] < tiebreak[b];
  });
  for (std::size_t i = 0; assigned < nn; ++i, ++assigned) ++quota[order[i]];

  std::vector<PixelCoord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& bucket = strata[s];
    // Partial Fisher-Yates: first quota[s] entries become the sample.
    for (std::size_t i = 0; i < quota[s]; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(bucket.size() - i));
      std::swap(bucket[i], bucket[j]);
      out.push_back(bucket[i]);
    }
  }
  return out;
}

InstanceMask degrade_mask(const InstanceMask& mask, int factor) {
  if (factor < 1) throw std::invalid_argument("degrade_mask: factor must be >= 1");
  if (factor == 1) return mask;
  // Image-aligned blocks; each block takes the value of its top-left pixel.
  const int u0 = (mask.bbox.u / factor) * factor, v0 = (mask.bbox.v / factor) * factor;
  const int u1 = mask.bbox.u + mask.bbox.w, v1 = mask.bbox.v + mask.bbox.h;
  int min_u = u1, min_v = v1, max_u = -1, max_v = -1;
  std::vector<PixelCoord> kept;
  for (int v = v0; v < v1; ++v) {
    for (int u = u0; u < u1; ++u) {
      if (mask.contains((u / factor) * factor, (v / factor) * factor)) {
        kept.push_back({u, v});
        min_u = std::min(min_u, u);
        max_u = std::max(max_u, u);
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
      }
    }
  }
  InstanceMask out;
  out.instance_id = mask.instance_id;
  if (kept.empty()) return out;
  out.bbox = {min_u, min_v, max_u - min_u + 1, max_v - min_v + 1};
  out.bitmap.assign(static_cast<std::size_t>(out.bbox.w) * out.bbox.h, 0);
  for (const auto& p : kept)
    out.bitmap[static_cast<std::size_t>(p.v - min_v) * out.bbox.w + (p.u - min_u)] = 1;
  return out;
}

}  // namespace mvcp
