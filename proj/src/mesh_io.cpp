#include "qcflow/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qcflow/error.hpp"

namespace qcflow {

namespace fs = std::filesystem;

namespace {

int parse_index(const std::string& token, int n_vertices, const fs::path& path) {
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoError, path.string() + ": bad face index '" + token + "'");
  }
  return idx < 0 ? n_vertices + idx : idx - 1;
}

}  // namespace

TriMesh read_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p = Vec3::Zero();
      if (!(ls >> p.x() >> p.y()))
        throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      ls >> p.z();
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) idx.push_back(parse_index(tok, static_cast<int>(vertices.size()), path));
      if (idx.size() != 3)
        throw Error(ErrorCode::IoError,
                    path.string() + ":" + std::to_string(line_no) + ": only triangles are supported");
      faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  TriMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
  for (std::size_t i = 0; i < vertices.size(); ++i) mesh.vertices.row(i) = vertices[i].transpose();
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      if (faces[i][k] < 0 || faces[i][k] >= static_cast<int>(vertices.size()))
        throw Error(ErrorCode::IoError, path.string() + ": face index out of range");
      mesh.faces(i, k) = faces[i][k];
    }
  return mesh;
}

void write_obj(const fs::path& path, const TriMesh& mesh, int precision) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(precision);
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
    out << "v " << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f)
    out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' ' << mesh.faces(f, 2) + 1 << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_positions_blob(const fs::path& path, const std::vector<Points>& frames, int dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::uint64_t header[3] = {frames.empty() ? 0u : static_cast<std::uint64_t>(frames.front().rows()),
                                   static_cast<std::uint64_t>(frames.size()), static_cast<std::uint64_t>(dim)};
  out.write(kPositionsMagic, sizeof(kPositionsMagic));
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& frame : frames)
    for (Eigen::Index v = 0; v < frame.rows(); ++v)
      for (int c = 0; c < dim; ++c) {
        const double x = frame(v, c);
        out.write(reinterpret_cast<const char*>(&x), sizeof(double));
      }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<Points> read_positions_blob(const fs::path& path, int* dim_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[8];
  std::uint64_t header[3];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kPositionsMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::IoError, path.string() + ": not a positions blob");
  const auto n_vertices = static_cast<Eigen::Index>(header[0]);
  const auto n_frames = static_cast<std::size_t>(header[1]);
  const int dim = static_cast<int>(header[2]);
  if (dim != 2 && dim != 3) throw Error(ErrorCode::IoError, path.string() + ": bad dim");
  std::vector<Points> frames(n_frames, Points::Zero(n_vertices, 3));
  for (auto& frame : frames)
    for (Eigen::Index v = 0; v < n_vertices; ++v)
      for (int c = 0; c < dim; ++c) in.read(reinterpret_cast<char*>(&frame(v, c)), sizeof(double));
  if (!in) throw Error(ErrorCode::IoError, path.string() + ": truncated payload");
  if (dim_out) *dim_out = dim;
  return frames;
}

MeshSequence load_sequence(const std::vector<fs::path>& frame_paths, const std::vector<double>& times) {
  if (frame_paths.size() < 2)
    throw Error(ErrorCode::TooFewFrames, "need at least 2 frames, got " + std::to_string(frame_paths.size()));
  std::vector<Points> frames;
  Faces faces;
  bool planar = true;
  for (std::size_t i = 0; i < frame_paths.size(); ++i) {
    if (!fs::exists(frame_paths[i])) throw Error(ErrorCode::IoError, "missing frame file " + frame_paths[i].string());
    TriMesh mesh = read_obj(frame_paths[i]);
    if (i == 0) {
      faces = mesh.faces;
    } else if (mesh.faces.rows() != faces.rows() || mesh.faces != faces) {
      throw Error(ErrorCode::MismatchedConnectivity,
                  frame_paths[i].string() + " has a face list different from " + frame_paths[0].string());
    }
    planar = planar && mesh.vertices.col(2).cwiseAbs().maxCoeff() == 0.0;
    frames.push_back(std::move(mesh.vertices));
  }
  return make_sequence(std::move(faces), std::move(frames), times, planar ? 2 : 3);
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".obj" && entry.path().stem() != "topology")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  return paths;
}

MeshSequence load_sequence_dir(const fs::path& dir) {
  std::vector<double> times;
  nlohmann::json manifest;
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::IoError, manifest_path.string() + ": " + e.what());
    }
    if (manifest.contains("times")) times = manifest["times"].get<std::vector<double>>();
  }
  if (fs::exists(dir / "positions.bin") && fs::exists(dir / "topology.obj")) {
    int dim = 3;
    auto frames = read_positions_blob(dir / "positions.bin", &dim);
    TriMesh topo = read_obj(dir / "topology.obj");
    return make_sequence(topo.faces, std::move(frames), times, dim);
  }
  std::vector<fs::path> paths;
  if (manifest.contains("frames")) {
    for (const auto& name : manifest["frames"]) paths.push_back(dir / name.get<std::string>());
  } else {
    paths = list_frames(dir);
  }
  MeshSequence seq = load_sequence(paths, times);
  if (manifest.contains("dim") && manifest["dim"].get<int>() == 3) seq.dim = 3;
  return seq;
}

void save_sequence(const fs::path& dir, const MeshSequence& seq, const nlohmann::json& extra) {
  fs::create_directories(dir);
  nlohmann::json manifest = extra;
  std::vector<std::string> names;
  for (int n = 0; n < seq.n_frames(); ++n) {
    std::ostringstream name;
    name << "frame_" << std::setw(3) << std::setfill('0') << n << ".obj";
    write_obj(dir / name.str(), seq.mesh(n));
    names.push_back(name.str());
  }
  manifest["frames"] = names;
  manifest["times"] = seq.times;
  manifest["dim"] = seq.dim;
  manifest["n_steps"] = seq.n_frames();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

LandmarkSet read_landmarks(const fs::path& indices_path, const fs::path& velocities_csv) {
  std::ifstream in(indices_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + indices_path.string());
  LandmarkSet landmarks;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int v;
    if (ls >> v) landmarks.vertices.push_back(v);
  }
  if (velocities_csv.empty()) return landmarks;

  std::ifstream csv(velocities_csv);
  if (!csv) throw Error(ErrorCode::IoError, "cannot open " + velocities_csv.string());
  const auto count = static_cast<Eigen::Index>(landmarks.vertices.size());
  while (std::getline(csv, line)) {
    if (line.empty() || !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-')) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int step = 0, idx = 0;
    Vec3 v = Vec3::Zero();
    if (!(ls >> step >> idx >> v.x() >> v.y()))
      throw Error(ErrorCode::IoError, velocities_csv.string() + ": bad row '" + line + "'");
    ls >> v.z();
    if (step < 0 || idx < 0 || idx >= count) throw Error(ErrorCode::IoError, velocities_csv.string() + ": bad index");
    while (static_cast<int>(landmarks.velocities.size()) <= step) landmarks.velocities.push_back(Points::Zero(count, 3));
    landmarks.velocities[step].row(idx) = v.transpose();
  }
  return landmarks;
}

void write_landmarks(const fs::path& path, const LandmarkSet& landmarks) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (int v : landmarks.vertices) out << v << '\n';
}

}  // namespace qcflow
