#pragma once

#include "cardio/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace cardio {

/// Header of the binary field snapshot format. All integers and values are
/// little-endian; the header is followed by frame_count * prod(nodes) f64
/// values, frame-major.
struct SnapshotHeader {
  static constexpr char kMagic[4] = {'B', 'D', 'M', 'F'};
  static constexpr std::uint32_t kVersion = 1;
  std::uint32_t dim = 1;
  std::array<std::uint32_t, 3> nodes{1, 1, 1};
  std::uint64_t frame_count = 0;
};

void write_snapshot(std::ostream& out, const Grid& grid, const Eigen::MatrixXd& frames);
void write_snapshot(const std::filesystem::path& path, const Grid& grid, const Eigen::MatrixXd& frames);

struct Snapshot {
  SnapshotHeader header;
  Eigen::MatrixXd frames;  // nodes x frame_count
};
Snapshot read_snapshot(std::istream& in);
Snapshot read_snapshot(const std::filesystem::path& path);

/// One row per node: x,y,z,value.
void write_field_csv(std::ostream& out, const Grid& grid, const FieldRef& field);

/// Flat {"key": value} JSON object.
void write_norm_report(std::ostream& out, const NormReport& report);
NormReport read_norm_report(std::istream& in);

}  // namespace cardio
