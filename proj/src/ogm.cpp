#include "negoplan/ogm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace negoplan {

namespace {

constexpr int kHalf = kOgmSize / 2;
// Overlap must exceed this along every axis for a cell to count as occupied.
constexpr double kInteriorTol = 1e-9;

OrientedBox to_ego_frame(const OrientedBox& box, const VehiclePose& ego) {
  const double c = std::cos(ego.heading);
  const double s = std::sin(ego.heading);
  const Vec2 r = box.center - ego.position();
  OrientedBox out = box;
  out.center = {c * r.x() + s * r.y(), -s * r.x() + c * r.y()};
  out.heading = wrap_angle(box.heading - ego.heading);
  return out;
}

// Interior overlap between an ego-frame box and an axis-aligned cell.
bool overlaps_cell(const OrientedBox& box, double x0, double x1, double y0, double y1) {
  const Vec2 u = box.axis_long();
  const Vec2 v = box.axis_lat();
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  // Cell axes.
  const double ex = hl * std::abs(u.x()) + hw * std::abs(v.x());
  const double ey = hl * std::abs(u.y()) + hw * std::abs(v.y());
  if (box.center.x() + ex <= x0 + kInteriorTol || box.center.x() - ex >= x1 - kInteriorTol) return false;
  if (box.center.y() + ey <= y0 + kInteriorTol || box.center.y() - ey >= y1 - kInteriorTol) return false;
  // Box axes.
  const Vec2 cc{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
  const double cx = 0.5 * (x1 - x0);
  const double cy = 0.5 * (y1 - y0);
  for (const auto& [axis, half] : {std::pair{u, hl}, std::pair{v, hw}}) {
    const double dist = std::abs((cc - box.center).dot(axis));
    const double cell_r = cx * std::abs(axis.x()) + cy * std::abs(axis.y());
    if (dist >= half + cell_r - kInteriorTol) return false;
  }
  return true;
}

void rasterize(const OrientedBox& world_box, const VehiclePose& ego, double res, OgmCells& cells) {
  const OrientedBox box = to_ego_frame(world_box, ego);
  const Aabb b = box.bounds();
  const int i0 = std::max(0, static_cast<int>(std::floor(b.min.x() / res)) + kHalf);
  const int i1 = std::min(kOgmSize - 1, static_cast<int>(std::floor(b.max.x() / res)) + kHalf);
  const int j0 = std::max(0, static_cast<int>(std::floor(b.min.y() / res)) + kHalf);
  const int j1 = std::min(kOgmSize - 1, static_cast<int>(std::floor(b.max.y() / res)) + kHalf);
  for (int i = i0; i <= i1; ++i) {
    const double x0 = (i - kHalf) * res;
    for (int j = j0; j <= j1; ++j) {
      if (cells(i, j)) continue;
      const double y0 = (j - kHalf) * res;
      if (overlaps_cell(box, x0, x0 + res, y0, y0 + res)) cells(i, j) = 1;
    }
  }
}

}  // namespace

OgmFrame render(std::span<const OrientedBox> obstacles, const VehiclePose& ego_frame_pose, double resolution,
                double timestamp) {
  if (!(resolution > 0)) throw std::invalid_argument("render: resolution must be positive");
  OgmFrame frame;
  frame.resolution = resolution;
  frame.origin_pose = ego_frame_pose;
  frame.timestamp = timestamp;
  for (const OrientedBox& o : obstacles) rasterize(o, ego_frame_pose, resolution, frame.cells);
  return frame;
}

OgmFrame render(const WorldSnapshot& snapshot, std::span<const OrientedBox> static_obstacles,
                const VehiclePose& ego_frame_pose, double resolution) {
  OgmFrame frame = render(static_obstacles, ego_frame_pose, resolution, snapshot.t);
  if (snapshot.social_present) rasterize(snapshot.social, ego_frame_pose, resolution, frame.cells);
  return frame;
}

OgmStack build_stack(std::span<const WorldSnapshot> history, std::span<const OrientedBox> static_obstacles,
                     const VehiclePose& current_ego_pose, const OgmSettings& settings) {
  if (history.empty()) throw EmptyHistory("build_stack: empty history");
  const OgmFrame background = render(static_obstacles, current_ego_pose, settings.resolution);
  const double now = history.back().t;
  OgmStack stack;
  for (int c = 0; c < kOgmChannels; ++c) {
    const double target = now - settings.channel_spacing * (kOgmChannels - 1 - c);
    // Latest snapshot not after the target time (within rounding), else the oldest.
    std::size_t idx = 0;
    for (std::size_t k = history.size(); k-- > 0;) {
      if (history[k].t <= target + 1e-6) {
        idx = k;
        break;
      }
    }
    OgmFrame frame = background;
    frame.timestamp = history[idx].t;
    if (history[idx].social_present)
      rasterize(history[idx].social, current_ego_pose, settings.resolution, frame.cells);
    stack.frames[static_cast<std::size_t>(c)] = std::move(frame);
  }
  return stack;
}

bool within_window(const OrientedBox& box, const VehiclePose& ego_pose, double resolution) {
  const double half = kHalf * resolution;
  return overlaps_cell(to_ego_frame(box, ego_pose), -half, half, -half, half);
}

std::vector<std::filesystem::path> write_pgm(const OgmStack& stack, const std::filesystem::path& stem) {
  std::vector<std::filesystem::path> written;
  for (int c = 0; c < kOgmChannels; ++c) {
    std::filesystem::path path = stem;
    path += "_c" + std::to_string(c) + ".pgm";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << kOgmSize << ' ' << kOgmSize << "\n255\n";
    const OgmCells& cells = stack.frames[static_cast<std::size_t>(c)].cells;
    for (int row = 0; row < kOgmSize; ++row) {
      for (int col = 0; col < kOgmSize; ++col) {
        // Image top is the far forward edge, image left is the ego's left.
        const std::uint8_t v = cells(kOgmSize - 1 - row, kOgmSize - 1 - col);
        out.put(static_cast<char>(v ? 255 : 0));
      }
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace negoplan
