#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcflow/post.hpp"

namespace qcflow {

/// Columns: face, D, S, D_norm, S_norm, axis_x, axis_y, axis_z.
void write_rates_csv(const std::filesystem::path& path, const RateField& rates);
RateField read_rates_csv(const std::filesystem::path& path);

/// Legacy ASCII VTK polydata with D_norm and S_norm as face scalars and the
/// major axis as a face vector.
void write_vtk(const std::filesystem::path& path, const Points& vertices, const Faces& faces, const RateField& rates);

/// Line charts of the max and mean of D and S against normalized time.
void write_summary_svg(const std::filesystem::path& path, const std::vector<double>& times,
                       const std::vector<RateField>& rates, const std::vector<std::vector<FaceFrame>>& frames);

/// Rows: step, vertex, vx, vy, vz.
void write_velocities_csv(const std::filesystem::path& path, const std::vector<Points>& velocities);
std::vector<Points> read_velocities_csv(const std::filesystem::path& path);
/// Rows: step, lambda1, lambda2, lambda3.
void write_lambdas_csv(const std::filesystem::path& path, const std::vector<std::array<double, 3>>& lambdas);
std::vector<std::array<double, 3>> read_lambdas_csv(const std::filesystem::path& path);
/// Rows: step, viscous, grad, bend, normal, boundary, landmark, lambda_reg, total.
void write_costs_csv(const std::filesystem::path& path, const std::vector<CostBreakdown>& costs);
/// Rows: step, time, eta, mean_D, mean_S, max_D, max_S.
void write_growth_csv(const std::filesystem::path& path, const std::vector<double>& times,
                      const std::vector<RateField>& rates, const std::vector<std::vector<FaceFrame>>& frames);

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

/// Writes every artifact of a run into out_dir and a manifest.json listing
/// them with content hashes. Returns the written file names.
std::vector<std::string> export_results(const std::filesystem::path& out_dir, const SolveResult& result,
                                        const std::vector<RateField>& rates, const Faces& faces,
                                        const nlohmann::json& run_info);

}  // namespace qcflow
