#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "negoplan/geometry.hpp"
#include "negoplan/vehicle.hpp"

namespace negoplan {

inline constexpr int kOgmSize = 84;
inline constexpr int kOgmChannels = 4;

struct OgmSettings {
  double resolution = 0.5;     // meters per cell
  double channel_spacing = 1.0;  // seconds between stacked frames
};

/// Row index runs along the ego heading, column index to its left. Cell
/// (i, j) covers [(i - 42) r, (i - 41) r) x [(j - 42) r, (j - 41) r) in the
/// ego frame, so the ego origin sits at the corner of cell (42, 42).
using OgmCells = Eigen::Matrix<std::uint8_t, kOgmSize, kOgmSize, Eigen::RowMajor>;

struct OgmFrame {
  OgmCells cells = OgmCells::Zero();
  double resolution = 0.5;
  VehiclePose origin_pose;
  double timestamp = 0.0;
};

struct OgmStack {
  std::array<OgmFrame, kOgmChannels> frames;  // oldest first; frames[3] is current
};

/// What the renderer needs of one instant: the other vehicle's footprint.
struct WorldSnapshot {
  double t = 0.0;
  OrientedBox social;
  bool social_present = true;
};

struct EmptyHistory : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Marks every cell whose interior overlaps an obstacle footprint. The ego
/// itself is never drawn.
OgmFrame render(std::span<const OrientedBox> obstacles, const VehiclePose& ego_frame_pose, double resolution,
                double timestamp = 0.0);

/// Static obstacles plus the snapshot's social vehicle, rendered in `ego_frame_pose`.
OgmFrame render(const WorldSnapshot& snapshot, std::span<const OrientedBox> static_obstacles,
                const VehiclePose& ego_frame_pose, double resolution);

/// Stacks snapshots at t, t-1, t-2, t-3 s, each re-rendered in the current
/// ego frame. Missing history repeats the oldest snapshot.
OgmStack build_stack(std::span<const WorldSnapshot> history, std::span<const OrientedBox> static_obstacles,
                     const VehiclePose& current_ego_pose, const OgmSettings& settings);

/// True when the box overlaps the square window around the ego.
bool within_window(const OrientedBox& box, const VehiclePose& ego_pose, double resolution);

/// Writes one binary PGM per channel as `<stem>_c<k>.pgm`, forward pointing up.
std::vector<std::filesystem::path> write_pgm(const OgmStack& stack, const std::filesystem::path& stem);

}  // namespace negoplan
