#include "sldepth/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "sldepth/errors.hpp"

namespace sldepth {

namespace {

constexpr std::array<char, 4> kDepthMagic = {'S', 'L', 'D', 'R'};
constexpr std::array<char, 4> kLabelMagic = {'S', 'L', 'L', 'B'};
constexpr std::array<char, 4> kVolumeMagic = {'S', 'L', 'T', 'V'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kUnitsMillimetre = 1;
constexpr std::uint32_t kMaxSide = 1u << 16;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw IoError("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic, const char* what) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || got != magic) throw IoError(std::string("not a ") + what + " file");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

template <typename F>
auto with_path(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace

RasterEncoding choose_encoding(const DepthMap& map, double depth_step) {
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    if (!map.valid.data()[i]) continue;
    const double q = map.values.data()[i] / depth_step;
    if (!(q >= 1 && q <= 65535) || q != std::round(q) || std::round(q) * depth_step != map.values.data()[i])
      return RasterEncoding::float64;
  }
  return RasterEncoding::uint16_steps;
}

void write_depth_raster(std::ostream& out, const DepthMap& map, double depth_step) {
  if (!(depth_step > 0) || !std::isfinite(depth_step)) throw IoError("depth_step must be positive");
  const RasterEncoding enc = choose_encoding(map, depth_step);
  out.write(kDepthMagic.data(), 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(enc));
  put<std::uint8_t>(out, kUnitsMillimetre);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.width()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.height()));
  put<double>(out, depth_step);
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    const bool ok = map.valid.data()[i];
    const double z = map.values.data()[i];
    if (enc == RasterEncoding::uint16_steps)
      put<std::uint16_t>(out, ok ? static_cast<std::uint16_t>(std::lround(z / depth_step)) : 0);
    else
      put<double>(out, ok ? z : 0.0);
  }
}

DepthRaster read_depth_raster(std::istream& in) {
  expect_magic(in, kDepthMagic, "depth raster");
  if (get<std::uint16_t>(in) != kVersion) throw IoError("unsupported depth raster version");
  const auto enc = get<std::uint8_t>(in);
  if (enc > 1) throw IoError("unknown depth raster encoding");
  if (get<std::uint8_t>(in) != kUnitsMillimetre) throw IoError("unsupported depth units");
  const auto w = get<std::uint32_t>(in);
  const auto h = get<std::uint32_t>(in);
  if (w > kMaxSide || h > kMaxSide) throw IoError("depth raster dimensions out of range");
  DepthRaster r;
  r.depth_step = get<double>(in);
  if (!(r.depth_step > 0) || !std::isfinite(r.depth_step)) throw IoError("invalid depth_step in header");
  r.encoding = static_cast<RasterEncoding>(enc);
  r.map = DepthMap(w, h);
  for (Eigen::Index i = 0; i < r.map.size(); ++i) {
    const double z = r.encoding == RasterEncoding::uint16_steps ? get<std::uint16_t>(in) * r.depth_step
                                                                 : get<double>(in);
    if (z > 0 && std::isfinite(z)) {
      r.map.values.data()[i] = z;
      r.map.valid.data()[i] = true;
    }
  }
  return r;
}

void save_depth_raster(const std::filesystem::path& path, const DepthMap& map, double depth_step) {
  auto out = open_out(path);
  with_path(path, [&] { write_depth_raster(out, map, depth_step); });
  finish(out, path);
}

DepthRaster load_depth_raster(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_depth_raster(in); });
}

void write_label_raster(std::ostream& out, const LabelImage& labels) {
  out.write(kLabelMagic.data(), 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint16_t>(out, 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(labels.cols()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(labels.rows()));
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const std::int32_t l = labels.data()[i];
    if (l < kNoLabel || l >= 65535) throw IoError("label out of 16-bit range");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(l + 1));
  }
}

LabelImage read_label_raster(std::istream& in) {
  expect_magic(in, kLabelMagic, "label raster");
  if (get<std::uint16_t>(in) != kVersion) throw IoError("unsupported label raster version");
  get<std::uint16_t>(in);
  const auto w = get<std::uint32_t>(in);
  const auto h = get<std::uint32_t>(in);
  if (w > kMaxSide || h > kMaxSide) throw IoError("label raster dimensions out of range");
  LabelImage labels(h, w);
  for (Eigen::Index i = 0; i < labels.size(); ++i) labels.data()[i] = static_cast<std::int32_t>(get<std::uint16_t>(in)) - 1;
  return labels;
}

void save_label_raster(const std::filesystem::path& path, const LabelImage& labels) {
  auto out = open_out(path);
  with_path(path, [&] { write_label_raster(out, labels); });
  finish(out, path);
}

LabelImage load_label_raster(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_label_raster(in); });
}

void write_ply(std::ostream& out, const TriangleMesh& mesh, PlyFormat format) {
  const bool binary = format == PlyFormat::binary_little_endian;
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  if (binary) {
    for (const auto& v : mesh.vertices)
      for (int a = 0; a < 3; ++a) put<double>(out, v[a]);
    for (const auto& t : mesh.triangles) {
      put<std::uint8_t>(out, 3);
      for (int a = 0; a < 3; ++a) put<std::int32_t>(out, t[a]);
    }
  } else {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles) out << "3 " << t.x() << ' ' << t.y() << ' ' << t.z() << '\n';
  }
}

TriangleMesh read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw IoError("not a PLY file");
  bool binary = false;
  std::size_t nv = 0, nf = 0;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string key, a;
    ls >> key >> a;
    if (key == "format") {
      if (a == "binary_little_endian") binary = true;
      else if (a != "ascii") throw IoError("unsupported PLY format " + a);
    } else if (key == "element") {
      std::size_t n = 0;
      ls >> n;
      (a == "vertex" ? nv : nf) = n;
    }
  }
  if (line != "end_header") throw IoError("PLY header not terminated");
  TriangleMesh mesh;
  mesh.vertices.resize(nv);
  mesh.triangles.resize(nf);
  for (auto& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) {
      if (binary) v[a] = get<double>(in);
      else if (!(in >> v[a])) throw IoError("truncated PLY vertex list");
    }
  for (auto& t : mesh.triangles) {
    int n = 0;
    if (binary) n = get<std::uint8_t>(in);
    else if (!(in >> n)) throw IoError("truncated PLY face list");
    if (n != 3) throw IoError("only triangle faces are supported");
    for (int a = 0; a < 3; ++a) {
      if (binary) t[a] = get<std::int32_t>(in);
      else if (!(in >> t[a])) throw IoError("truncated PLY face list");
      if (t[a] < 0 || static_cast<std::size_t>(t[a]) >= nv) throw IoError("PLY face index out of range");
    }
  }
  return mesh;
}

void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format) {
  auto out = open_out(path);
  write_ply(out, mesh, format);
  finish(out, path);
}

TriangleMesh load_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_ply(in); });
}

void write_volume(std::ostream& out, const TsdfVolume& volume) {
  out.write(kVolumeMagic.data(), 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint16_t>(out, 0);
  for (int a = 0; a < 3; ++a) put<std::int32_t>(out, volume.dims()[a]);
  for (int a = 0; a < 3; ++a) put<double>(out, volume.origin()[a]);
  put<double>(out, volume.voxel_size());
  put<double>(out, volume.f_min());
  put<double>(out, volume.f_max());
  for (double v : volume.numerator()) put<double>(out, v);
  for (double v : volume.weight()) put<double>(out, v);
}

TsdfVolume read_volume(std::istream& in) {
  expect_magic(in, kVolumeMagic, "volume dump");
  if (get<std::uint16_t>(in) != kVersion) throw IoError("unsupported volume dump version");
  get<std::uint16_t>(in);
  VolumeParams p;
  for (int a = 0; a < 3; ++a) p.dims[a] = get<std::int32_t>(in);
  for (int a = 0; a < 3; ++a) p.origin[a] = get<double>(in);
  p.voxel_size = get<double>(in);
  p.f_min = get<double>(in);
  p.f_max = get<double>(in);
  if ((p.dims.array() <= 0).any() || (p.dims.cast<double>().prod() > 1e9)) throw IoError("volume dims out of range");
  std::optional<TsdfVolume> volume;
  try {
    volume.emplace(p);
  } catch (const ConfigError& e) {
    throw IoError(std::string("bad volume header: ") + e.what());
  }
  std::vector<double> f(volume->voxel_count()), w(volume->voxel_count());
  for (auto& v : f) v = get<double>(in);
  for (auto& v : w) v = get<double>(in);
  volume->assign(std::move(f), std::move(w));
  return std::move(*volume);
}

void save_volume(const std::filesystem::path& path, const TsdfVolume& volume) {
  auto out = open_out(path);
  write_volume(out, volume);
  finish(out, path);
}

TsdfVolume load_volume(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_volume(in); });
}

void write_resolution_csv(std::ostream& out, const ResolutionAnalysis& analysis) {
  out << "z_mm,delta_z_mm\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < analysis.delta_z.size(); ++i)
    out << analysis.unique_depths[i] << ',' << analysis.delta_z[i] << '\n';
}

void save_resolution_csv(const std::filesystem::path& path, const ResolutionAnalysis& analysis) {
  auto out = open_out(path);
  write_resolution_csv(out, analysis);
  finish(out, path);
}

std::string plane_list_to_json(const std::vector<PlaneModel>& planes) {
  auto list = nlohmann::json::array();
  for (const auto& p : planes) {
    list.push_back({
        {"affine", {{"alpha", p.affine.alpha}, {"beta", p.affine.beta}, {"gamma", p.affine.gamma}}},
        {"world", {p.world.abc.x(), p.world.abc.y(), p.world.abc.z()}},
        {"support", p.support},
    });
  }
  return list.dump(2) + "\n";
}

std::vector<PlaneModel> plane_list_from_json(const std::string& text) {
  std::vector<PlaneModel> planes;
  try {
    for (const auto& item : nlohmann::json::parse(text)) {
      PlaneModel p;
      const auto& a = item.at("affine");
      p.affine = {a.at("alpha").get<double>(), a.at("beta").get<double>(), a.at("gamma").get<double>()};
      const auto w = item.at("world").get<std::vector<double>>();
      if (w.size() != 3) throw IoError("world plane needs 3 coefficients");
      p.world.abc = {w[0], w[1], w[2]};
      p.support = item.at("support").get<std::size_t>();
      planes.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad plane list: ") + e.what());
  }
  return planes;
}

void save_plane_list(const std::filesystem::path& path, const std::vector<PlaneModel>& planes) {
  auto out = open_out(path);
  out << plane_list_to_json(planes);
  finish(out, path);
}

void write_pose(std::ostream& out, const Pose& pose) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int r = 0; r < 3; ++r)
    out << pose.R(r, 0) << ' ' << pose.R(r, 1) << ' ' << pose.R(r, 2) << ' ' << pose.T(r) << '\n';
}

Pose read_pose(std::istream& in) {
  Pose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c)
      if (!(in >> pose.R(r, c))) throw IoError("pose needs 12 numbers");
    if (!(in >> pose.T(r))) throw IoError("pose needs 12 numbers");
  }
  std::string extra;
  if (in >> extra) throw IoError("trailing data after pose");
  if (!pose.is_rigid(1e-6)) throw IoError("pose rotation is not orthonormal");
  return pose;
}

void save_pose(const std::filesystem::path& path, const Pose& pose) {
  auto out = open_out(path);
  write_pose(out, pose);
  finish(out, path);
}

Pose load_pose(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_pose(in); });
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string raster, pose, extra;
    if (!(ls >> raster)) continue;
    if (!(ls >> pose) || (ls >> extra))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected '<raster> <pose>'");
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    entries.push_back({resolve(raster), resolve(pose)});
  }
  return entries;
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sldepth
