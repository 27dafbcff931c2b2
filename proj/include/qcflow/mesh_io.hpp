#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcflow/mesh.hpp"

namespace qcflow {

/// Reads `v x y z` and `f a b c` records (1-based, `a/b/c` slash forms accepted).
/// Polygons with more than three corners are rejected.
TriMesh read_obj(const std::filesystem::path& path);
/// Writes with 17 significant digits so positions round-trip exactly.
void write_obj(const std::filesystem::path& path, const TriMesh& mesh, int precision = 17);

/// Positions blob layout (little-endian):
///   char[8] magic "QCFPOS01", uint64 V, uint64 N, uint64 dim,
///   then N*V*dim float64 values, row-major as [N][V][dim].
inline constexpr char kPositionsMagic[8] = {'Q', 'C', 'F', 'P', 'O', 'S', '0', '1'};
void write_positions_blob(const std::filesystem::path& path, const std::vector<Points>& frames, int dim);
std::vector<Points> read_positions_blob(const std::filesystem::path& path, int* dim = nullptr);

/// Loads frames in the given order. The first frame fixes connectivity;
/// every later face list must match it exactly. A single frame is
/// rejected with TooFewFrames. Empty times default to uniform spacing.
/// The sequence is planar when every z coordinate is zero.
MeshSequence load_sequence(const std::vector<std::filesystem::path>& frame_paths,
                           const std::vector<double>& times = {});

/// Loads a sequence directory written by save_sequence: `manifest.json`
/// (optional) and `frame_*.obj`, or a `topology.obj` plus `positions.bin`.
MeshSequence load_sequence_dir(const std::filesystem::path& dir);

/// Writes frame_000.obj ... and manifest.json with times, dim and any extra fields.
void save_sequence(const std::filesystem::path& dir, const MeshSequence& seq,
                   const nlohmann::json& extra_manifest = nlohmann::json::object());

/// Landmarks: vertex indices, one per line ('#' comments allowed). The
/// optional CSV has rows `step,landmark,vx,vy[,vz]`.
LandmarkSet read_landmarks(const std::filesystem::path& indices_path,
                           const std::filesystem::path& velocities_csv = {});
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks);

/// Sorted list of frame files in a directory matching `*.obj`.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

}  // namespace qcflow
