#include "cardio/io.hpp"

#include "cardio/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace cardio {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw ValidationError("snapshot: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const Grid& grid, const Eigen::MatrixXd& frames) {
  if (frames.rows() != grid.node_count()) throw ValidationError("snapshot: frame size does not match grid");
  out.write(SnapshotHeader::kMagic, 4);
  put_le<std::uint32_t>(out, SnapshotHeader::kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
  for (int a = 0; a < 3; ++a) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.nodes(a)));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(frames.cols()));
  for (Eigen::Index k = 0; k < frames.cols(); ++k)
    for (Eigen::Index i = 0; i < frames.rows(); ++i) put_le<double>(out, frames(i, k));
  if (!out) throw ValidationError("snapshot: write failed");
}

void write_snapshot(const std::filesystem::path& path, const Grid& grid, const Eigen::MatrixXd& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("snapshot: cannot open " + path.string());
  write_snapshot(out, grid, frames);
}

Snapshot read_snapshot(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, SnapshotHeader::kMagic, 4) != 0) throw ValidationError("snapshot: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != SnapshotHeader::kVersion)
    throw ValidationError("snapshot: unsupported version " + std::to_string(version));
  Snapshot snap;
  snap.header.dim = get_le<std::uint32_t>(in);
  for (auto& n : snap.header.nodes) n = get_le<std::uint32_t>(in);
  snap.header.frame_count = get_le<std::uint64_t>(in);
  const std::uint64_t count =
      static_cast<std::uint64_t>(snap.header.nodes[0]) * snap.header.nodes[1] * snap.header.nodes[2];
  snap.frames.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(snap.header.frame_count));
  for (Eigen::Index k = 0; k < snap.frames.cols(); ++k)
    for (Eigen::Index i = 0; i < snap.frames.rows(); ++i) snap.frames(i, k) = get_le<double>(in);
  return snap;
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("snapshot: cannot open " + path.string());
  return read_snapshot(in);
}

void write_field_csv(std::ostream& out, const Grid& grid, const FieldRef& field) {
  if (field.size() != grid.node_count()) throw ValidationError("csv: field size does not match grid");
  out << "x,y,z,value\n" << std::setprecision(17);
  for (Eigen::Index n = 0; n < field.size(); ++n) {
    const auto x = grid.coords(n);
    out << x[0] << ',' << x[1] << ',' << x[2] << ',' << field[n] << '\n';
  }
}

void write_norm_report(std::ostream& out, const NormReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report) j[key] = value;
  out << j.dump(2) << '\n';
}

NormReport read_norm_report(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  NormReport report;
  for (const auto& [key, value] : j.items()) report[key] = value.get<double>();
  return report;
}

}  // namespace cardio
