#include <random>

#include "doctest.h"
#include "mvcp/pixel_index.hpp"
#include "oracles.hpp"

using namespace mvcp;

namespace {

std::vector<PixelDepth> random_entries(std::mt19937_64& g, std::size_t n, bool integer_coords) {
  std::uniform_real_distribution<double> u(0, 1600), v(0, 900), d(1, 70);
  std::uniform_int_distribution<int> iu(0, 1599), iv(0, 899);
  std::vector<PixelDepth> out;
  for (std::size_t i = 0; i < n; ++i) {
    // Integer coordinates make exact distance ties common.
    const double pu = integer_coords ? iu(g) : u(g), pv = integer_coords ? iv(g) : v(g);
    out.push_back({pu, pv, d(g), i});
  }
  return out;
}

void check_same(const std::optional<PixelDepth>& a, const std::optional<PixelDepth>& b) {
  REQUIRE(a.has_value() == b.has_value());
  if (!a) return;
  CHECK(a->source_index == b->source_index);
  CHECK(a->depth == b->depth);
}

}  // namespace

TEST_CASE("empty index answers nothing") {
  const PixelIndex index = build_pixel_index({}, 15.0);
  CHECK(index.empty());
  CHECK_FALSE(index.nearest(10, 10).has_value());
  CHECK_FALSE(index.nearest_within(10, 10, 1e9).has_value());
}

TEST_CASE("single entry answers every query") {
  const PixelIndex index = build_pixel_index({{400.25, 300.5, 12.0, 9}}, 15.0);
  for (double u : {0.0, 400.0, 1599.0})
    for (double v : {0.0, 300.0, 899.0}) {
      const auto hit = index.nearest(u, v);
      REQUIRE(hit);
      CHECK(hit->source_index == 9);
    }
}

TEST_CASE("query exactly on an entry returns its depth") {
  const PixelIndex index = build_pixel_index({{10.5, 10.5, 3.0, 0}, {12.5, 10.5, 4.0, 1}}, 15.0);
  const auto hits = associate_depth(std::vector<Eigen::Vector2d>{{12.5, 10.5}}, index, 15.0);
  REQUIRE(hits[0]);
  CHECK(hits[0]->depth == 4.0);
}

TEST_CASE("nothing within r_max is rejected, the boundary is accepted") {
  const PixelIndex index = build_pixel_index({{100, 100, 5.0, 0}}, 15.0);
  const std::vector<Eigen::Vector2d> q{{115, 100}, {115.0001, 100}, {300, 300}};
  const auto hits = associate_depth(q, index, 15.0);
  CHECK(hits[0].has_value());
  CHECK_FALSE(hits[1].has_value());
  CHECK_FALSE(hits[2].has_value());
}

TEST_CASE("equidistant candidates resolve to the smaller source index") {
  const std::vector<PixelDepth> entries{{95, 50, 1.0, 7}, {105, 50, 2.0, 3}};
  const PixelIndex index = build_pixel_index(entries, 15.0);
  const auto hits = associate_depth(std::vector<Eigen::Vector2d>{{100, 50}}, index, 15.0);
  REQUIRE(hits[0]);
  CHECK(hits[0]->source_index == 3);
  CHECK(hits[0]->depth == 2.0);
  check_same(hits[0], oracle::nearest(entries, 100, 50, 15.0));
}

TEST_CASE("index matches exhaustive search, ties included") {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 40; ++trial) {
    const bool ints = trial % 2 == 0;
    const auto entries = random_entries(g, 1 + g() % 5000, ints);
    const double r = trial % 3 == 0 ? 4.0 : 15.0;
    const PixelIndex index = build_pixel_index(entries, r);
    std::uniform_real_distribution<double> u(-20, 1620), v(-20, 920);
    std::uniform_int_distribution<int> iu(0, 1600), iv(0, 900);
    std::vector<Eigen::Vector2d> q;
    for (int i = 0; i < 1000; ++i) {
      if (ints)
        q.emplace_back(iu(g) + 0.5 * (i % 2), iv(g));
      else
        q.emplace_back(u(g), v(g));
    }
    const auto hits = associate_depth(q, index, r);
    for (std::size_t i = 0; i < q.size(); ++i) {
      check_same(hits[i], oracle::nearest(entries, q[i].x(), q[i].y(), r));
      check_same(index.nearest(q[i].x(), q[i].y()), oracle::nearest(entries, q[i].x(), q[i].y(), 1e18));
    }
  }
}

TEST_CASE("clustered entries with far queries") {
  // Dense cluster in one corner stresses the ring search lower bound.
  std::mt19937_64 g(22);
  std::uniform_real_distribution<double> c(0, 30);
  std::vector<PixelDepth> entries;
  for (std::size_t i = 0; i < 2000; ++i) entries.push_back({c(g), c(g), 5.0 + i, i});
  entries.push_back({1599, 899, 1.0, 2000});
  const PixelIndex index = build_pixel_index(entries, 15.0);
  std::uniform_real_distribution<double> u(0, 1600), v(0, 900);
  for (int i = 0; i < 500; ++i) {
    const double qu = u(g), qv = v(g);
    check_same(index.nearest(qu, qv), oracle::nearest(entries, qu, qv, 1e18));
  }
}

TEST_CASE("parallel associate_depth equals the serial reference") {
  std::mt19937_64 g(23);
  const auto entries = random_entries(g, 5000, false);
  const PixelIndex index = build_pixel_index(entries, 15.0);
  std::uniform_real_distribution<double> u(0, 1600), v(0, 900);
  std::vector<Eigen::Vector2d> q;
  for (int i = 0; i < 20000; ++i) q.emplace_back(u(g), v(g));
  const auto a = associate_depth(q, index, 15.0), b = serial::associate_depth(q, index, 15.0);
  for (std::size_t i = 0; i < q.size(); ++i) check_same(a[i], b[i]);
}

TEST_CASE("for_each_in_rect visits exactly the half-open rectangle") {
  std::mt19937_64 g(24);
  const auto entries = random_entries(g, 3000, true);
  const PixelIndex index = build_pixel_index(entries, 15.0);
  for (int t = 0; t < 50; ++t) {
    const double u0 = static_cast<double>(g() % 1600), v0 = static_cast<double>(g() % 900);
    const double u1 = u0 + static_cast<double>(g() % 300), v1 = v0 + static_cast<double>(g() % 300);
    std::vector<std::size_t> seen, expected;
    index.for_each_in_rect(u0, v0, u1, v1, [&](const PixelDepth& e) { seen.push_back(e.source_index); });
    for (const auto& e : entries)
      if (e.u >= u0 && e.u < u1 && e.v >= v0 && e.v < v1) expected.push_back(e.source_index);
    std::sort(seen.begin(), seen.end());
    CHECK(seen == expected);
  }
}
