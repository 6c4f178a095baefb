#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "negoplan/ogm.hpp"

using namespace negoplan;

namespace {

// Area of box ∩ axis-aligned rectangle by polygon clipping.
double clipped_area(const OrientedBox& box, double x0, double x1, double y0, double y1) {
  std::vector<Vec2> poly;
  for (const Vec2& c : box.corners()) poly.push_back(c);
  auto clip = [&](auto inside, auto cut) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[(i + 1) % poly.size()];
      if (inside(b)) {
        if (!inside(a)) out.push_back(cut(a, b));
        out.push_back(b);
      } else if (inside(a)) {
        out.push_back(cut(a, b));
      }
    }
    poly = out;
  };
  auto at_x = [](double x) {
    return [x](const Vec2& a, const Vec2& b) {
      const double t = (x - a.x()) / (b.x() - a.x());
      return Vec2(x, a.y() + t * (b.y() - a.y()));
    };
  };
  auto at_y = [](double y) {
    return [y](const Vec2& a, const Vec2& b) {
      const double t = (y - a.y()) / (b.y() - a.y());
      return Vec2(a.x() + t * (b.x() - a.x()), y);
    };
  };
  clip([&](const Vec2& p) { return p.x() >= x0; }, at_x(x0));
  clip([&](const Vec2& p) { return p.x() <= x1; }, at_x(x1));
  clip([&](const Vec2& p) { return p.y() >= y0; }, at_y(y0));
  clip([&](const Vec2& p) { return p.y() <= y1; }, at_y(y1));
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    area += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * std::abs(area);
}

int occupied(const OgmCells& cells) {
  int n = 0;
  for (int i = 0; i < kOgmSize; ++i)
    for (int j = 0; j < kOgmSize; ++j) n += cells(i, j);
  return n;
}

}  // namespace

TEST_CASE("a unit box five meters ahead fills exactly a 2x2 block") {
  const VehiclePose ego;
  const std::vector<OrientedBox> obs{{{5.0, 0.0}, 0.0, 1.0, 1.0}};
  const OgmFrame f = render(obs, ego, 0.5);
  CHECK(occupied(f.cells) == 4);
  for (int i : {51, 52})
    for (int j : {41, 42}) CHECK(f.cells(i, j) == 1);
}

TEST_CASE("rendering follows the ego frame") {
  // Ego at (10, 3) facing +y: a box 5 m ahead sits at world (10, 8).
  const VehiclePose ego{10.0, 3.0, std::numbers::pi / 2, 0.0};
  const std::vector<OrientedBox> obs{{{10.0, 8.0}, std::numbers::pi / 2, 1.0, 1.0}};
  const OgmFrame f = render(obs, ego, 0.5);
  CHECK(occupied(f.cells) == 4);
  for (int i : {51, 52})
    for (int j : {41, 42}) CHECK(f.cells(i, j) == 1);
  // Something to the ego's left lands at higher column indices.
  const std::vector<OrientedBox> left{{{7.0, 3.0}, 0.0, 1.0, 1.0}};
  const OgmFrame g = render(left, ego, 0.5);
  CHECK(g.cells(42, 48) == 1);
  CHECK(g.cells(41, 47) == 1);
}

TEST_CASE("boxes outside the window leave the grid empty") {
  const VehiclePose ego;
  const std::vector<OrientedBox> far{{{30.0, 0.0}, 0.0, 4.6, 1.8}, {{0.0, -25.0}, 0.3, 4.6, 1.8}};
  CHECK(occupied(render(far, ego, 0.5).cells) == 0);
  CHECK_FALSE(within_window(far[0], ego, 0.5));
  CHECK(within_window({{20.0, 0.0}, 0.0, 4.6, 1.8}, ego, 0.5));
}

TEST_CASE("cells are occupied exactly when the footprint covers part of their interior") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-22.0, 22.0), ang(-std::numbers::pi, std::numbers::pi),
      len(0.3, 6.0);
  const VehiclePose ego{3.0, -2.0, 0.4, 0.0};
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    // Box drawn in the ego frame, placed in the world.
    OrientedBox local{{pos(rng), pos(rng)}, ang(rng), len(rng), len(rng)};
    OrientedBox world = local;
    world.center = ego.position() + Vec2(c * local.center.x() - s * local.center.y(),
                                         s * local.center.x() + c * local.center.y());
    world.heading = wrap_angle(local.heading + ego.heading);
    const std::vector<OrientedBox> obs{world};
    const OgmFrame f = render(obs, ego, 0.5);
    for (int i = 0; i < kOgmSize; ++i)
      for (int j = 0; j < kOgmSize; ++j) {
        const double x0 = (i - 42) * 0.5, y0 = (j - 42) * 0.5;
        const double a = clipped_area(local, x0, x0 + 0.5, y0, y0 + 0.5);
        if (a > 1e-6) {
          CHECK(f.cells(i, j) == 1);
          ++compared;
        } else if (a == 0.0) {
          CHECK(f.cells(i, j) == 0);
        }
      }
  }
  CHECK(compared > 1000);
}

TEST_CASE("edge-touching neighbours stay free") {
  const VehiclePose ego;
  // Box exactly covering cell (42, 42).
  const std::vector<OrientedBox> obs{{{0.25, 0.25}, 0.0, 0.5, 0.5}};
  const OgmFrame f = render(obs, ego, 0.5);
  CHECK(occupied(f.cells) == 1);
  CHECK(f.cells(42, 42) == 1);
}

TEST_CASE("stack channels are spaced one second apart, oldest first") {
  std::vector<WorldSnapshot> history;
  for (int k = 0; k <= 20; ++k) history.push_back({k * 0.2, {{2.0 + 0.2 * k, 5.0}, 0.0, 1.0, 1.0}, true});
  const OgmStack st = build_stack(history, {}, VehiclePose{}, OgmSettings{});
  CHECK(st.frames[3].timestamp == doctest::Approx(4.0));
  CHECK(st.frames[2].timestamp == doctest::Approx(3.0));
  CHECK(st.frames[1].timestamp == doctest::Approx(2.0));
  CHECK(st.frames[0].timestamp == doctest::Approx(1.0));
  // The box moved 1 m forward per second: two rows per channel.
  auto first_row = [](const OgmCells& cells) {
    for (int i = 0; i < kOgmSize; ++i)
      for (int j = 0; j < kOgmSize; ++j)
        if (cells(i, j)) return i;
    return -1;
  };
  for (int c = 1; c < kOgmChannels; ++c)
    CHECK(first_row(st.frames[c].cells) - first_row(st.frames[c - 1].cells) == 2);
}

TEST_CASE("short history repeats the oldest snapshot") {
  const std::vector<WorldSnapshot> history{{0.0, {{5.0, 0.0}, 0.0, 1.0, 1.0}, true},
                                           {0.2, {{6.0, 0.0}, 0.0, 1.0, 1.0}, true}};
  const OgmStack st = build_stack(history, {}, VehiclePose{}, OgmSettings{});
  for (int c = 0; c < 3; ++c) CHECK(st.frames[c].cells == st.frames[0].cells);
  CHECK(st.frames[0].cells(51, 41) == 1);
  CHECK(st.frames[3].cells(53, 41) == 1);
  CHECK_THROWS_AS(build_stack(std::span<const WorldSnapshot>{}, {}, VehiclePose{}, OgmSettings{}), EmptyHistory);
}

TEST_CASE("static obstacles appear in every channel") {
  const std::vector<OrientedBox> parked{{{0.0, 3.0}, 0.0, 4.0, 1.0}};
  const std::vector<WorldSnapshot> history{{0.0, {}, false}};
  const OgmStack st = build_stack(history, parked, VehiclePose{}, OgmSettings{});
  for (const OgmFrame& f : st.frames) CHECK(occupied(f.cells) == 16);
}

TEST_CASE("pgm export writes one image per channel") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "negoplan_ogm_test";
  std::filesystem::create_directories(dir);
  OgmStack st;
  st.frames[3].cells(83, 0) = 1;  // far forward, far right
  const auto files = write_pgm(st, dir / "obs");
  REQUIRE(files.size() == 4);
  std::ifstream in(files[3], std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  in.get();
  CHECK(magic == "P5");
  CHECK(w == 84);
  CHECK(h == 84);
  std::vector<char> px(84 * 84);
  in.read(px.data(), static_cast<std::streamsize>(px.size()));
  CHECK(static_cast<unsigned char>(px[83]) == 255);  // top row, right edge
  std::filesystem::remove_all(dir);
}
