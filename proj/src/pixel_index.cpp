#include "mvcp/pixel_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mvcp {

namespace {

// Upper bound on grid cells relative to the entry count; keeps memory linear
// when the caller asks for a tiny cell size.
constexpr double kMaxCellsPerEntry = 4.0;

bool closer(double d2, std::size_t idx, double best_d2, std::size_t best_idx) {
  return d2 < best_d2 || (d2 == best_d2 && idx < best_idx);
}

}  // namespace

PixelIndex::PixelIndex(std::vector<PixelDepth> entries, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size))
    throw std::invalid_argument("PixelIndex: cell size must be positive");
  cell_ = cell_size;
  if (entries.empty()) return;

  double umin = entries.front().u, umax = umin, vmin = entries.front().v, vmax = vmin;
  for (const auto& e : entries) {
    if (!std::isfinite(e.u) || !std::isfinite(e.v))
      throw std::invalid_argument("PixelIndex: non-finite pixel coordinate");
    umin = std::min(umin, e.u);
    umax = std::max(umax, e.u);
    vmin = std::min(vmin, e.v);
    vmax = std::max(vmax, e.v);
  }
  const double budget = kMaxCellsPerEntry * static_cast<double>(entries.size()) + 64.0;
  const double area = (umax - umin + cell_) * (vmax - vmin + cell_);
  if (area / (cell_ * cell_) > budget) cell_ = std::sqrt(area / budget) * 1.0001;

  origin_u_ = umin;
  origin_v_ = vmin;
  nx_ = static_cast<std::ptrdiff_t>(std::floor((umax - umin) / cell_)) + 1;
  ny_ = static_cast<std::ptrdiff_t>(std::floor((vmax - vmin) / cell_)) + 1;

  // Counting sort by cell; stable, so each cell keeps input order.
  const auto ncells = static_cast<std::size_t>(nx_ * ny_);
  std::vector<std::size_t> cell_of(entries.size());
  cell_start_.assign(ncells + 1, 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    cell_of[i] = static_cast<std::size_t>(cell_y(entries[i].v) * nx_ + cell_x(entries[i].u));
    ++cell_start_[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < ncells; ++c) cell_start_[c + 1] += cell_start_[c];
  entries_.resize(entries.size());
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < entries.size(); ++i) entries_[fill[cell_of[i]]++] = entries[i];
}

std::ptrdiff_t PixelIndex::cell_x(double u) const {
  const double c = std::floor((u - origin_u_) / cell_);
  return std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::clamp(c, -1.0, double(nx_))), 0,
                                    nx_ - 1);
}

std::ptrdiff_t PixelIndex::cell_y(double v) const {
  const double c = std::floor((v - origin_v_) / cell_);
  return std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::clamp(c, -1.0, double(ny_))), 0,
                                    ny_ - 1);
}

std::optional<PixelDepth> PixelIndex::nearest(double u, double v) const {
  return search(u, v, std::numeric_limits<double>::infinity());
}

std::optional<PixelDepth> PixelIndex::nearest_within(double u, double v, double radius) const {
  return search(u, v, radius);
}

std::optional<PixelDepth> PixelIndex::search(double u, double v, double radius) const {
  if (entries_.empty()) return std::nullopt;
  const std::ptrdiff_t qx = cell_x(u), qy = cell_y(v);
  // Slack absorbs rounding in the floor() used for cell assignment.
  const double slack = 1e-9 * cell_;

  const PixelDepth* best = nullptr;
  double best_d2 = std::numeric_limits<double>::infinity();

  auto scan_cell = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    const auto c = static_cast<std::size_t>(y * nx_ + x);
    for (std::size_t i = cell_start_[c]; i < cell_start_[c + 1]; ++i) {
      const PixelDepth& e = entries_[i];
      const double du = e.u - u, dv = e.v - v;
      const double d2 = du * du + dv * dv;
      if (!best || closer(d2, e.source_index, best_d2, best->source_index)) {
        best = &e;
        best_d2 = d2;
      }
    }
  };

  for (std::ptrdiff_t k = 0;; ++k) {
    const std::ptrdiff_t x0 = qx - k, x1 = qx + k, y0 = qy - k, y1 = qy + k;
    const std::ptrdiff_t cx0 = std::max<std::ptrdiff_t>(x0, 0), cx1 = std::min(x1, nx_ - 1);
    const std::ptrdiff_t cy0 = std::max<std::ptrdiff_t>(y0, 0), cy1 = std::min(y1, ny_ - 1);
    if (k == 0) {
      scan_cell(qx, qy);
    } else {
      if (y0 >= 0)
        for (std::ptrdiff_t x = cx0; x <= cx1; ++x) scan_cell(x, y0);
      if (y1 < ny_)
        for (std::ptrdiff_t x = cx0; x <= cx1; ++x) scan_cell(x, y1);
      for (std::ptrdiff_t y = std::max(y0 + 1, cy0); y <= std::min(y1 - 1, cy1); ++y) {
        if (x0 >= 0) scan_cell(x0, y);
        if (x1 < nx_) scan_cell(x1, y);
      }
    }

    // Lower bound on the distance to anything not yet scanned.
    double bound = std::numeric_limits<double>::infinity();
    bool exhausted = true;
    if (x0 > 0) {
      exhausted = false;
      bound = std::min(bound, std::max(0.0, u - (origin_u_ + static_cast<double>(x0) * cell_)));
    }
    if (x1 < nx_ - 1) {
      exhausted = false;
      bound = std::min(bound, std::max(0.0, origin_u_ + static_cast<double>(x1 + 1) * cell_ - u));
    }
    if (y0 > 0) {
      exhausted = false;
      bound = std::min(bound, std::max(0.0, v - (origin_v_ + static_cast<double>(y0) * cell_)));
    }
    if (y1 < ny_ - 1) {
      exhausted = false;
      bound = std::min(bound, std::max(0.0, origin_v_ + static_cast<double>(y1 + 1) * cell_ - v));
    }
    if (exhausted) break;
    bound = std::max(0.0, bound - slack);
    if (best && best_d2 < bound * bound) break;
    if (bound > radius) break;
  }

  if (!best || best_d2 > radius * radius) return std::nullopt;
  return *best;
}

PixelIndex build_pixel_index(std::vector<PixelDepth> projected, double cell_size) {
  return PixelIndex(std::move(projected), cell_size);
}

std::vector<std::optional<PixelDepth>> associate_depth(std::span<const Eigen::Vector2d> pixels,
                                                       const PixelIndex& index, double r_max) {
  std::vector<std::optional<PixelDepth>> out(pixels.size());
  const auto n = static_cast<std::ptrdiff_t>(pixels.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = index.nearest_within(pixels[i].x(), pixels[i].y(), r_max);
  return out;
}

namespace serial {

std::vector<std::optional<PixelDepth>> associate_depth(std::span<const Eigen::Vector2d> pixels,
                                                       const PixelIndex& index, double r_max) {
  std::vector<std::optional<PixelDepth>> out;
  out.reserve(pixels.size());
  for (const auto& p : pixels) out.push_back(index.nearest_within(p.x(), p.y(), r_max));
  return out;
}

}  // namespace serial

}  // namespace mvcp
