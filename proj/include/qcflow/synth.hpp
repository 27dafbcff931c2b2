#pragma once

#include <string>

#include <json.hpp>

#include "qcflow/mesh.hpp"

namespace qcflow {

/// Generator parameters. Fields that do not apply to a kind are ignored.
struct SynthSpec {
  std::string kind = "shear_disc";  ///< shear_disc | aniso_sphere | ricci_cylinder | linear_blend
  int n_steps = 30;
  int resolution = 600;  ///< target face count
  double factor = 1.5;   ///< stretch factor at t = 1 (disc and sphere)
  // Ricci cylinder
  double r0 = 0.16;
  double r1_frac = 0.1;
  double lambda_rate = 1.0;
  double L0 = 1.0;
  double k = 6.283185307179586;
};

nlohmann::json synth_to_json(const SynthSpec& spec);
SynthSpec synth_from_json(const nlohmann::json& j);

/// Concentric-ring disc: `rings` rings of 6 i vertices around a centre,
/// scaled to unit area, z = 0, counter-clockwise faces.
TriMesh disc_mesh(int rings);
/// Icosahedron refined `level` times (20 * 4^level faces) on the unit sphere, outward faces.
TriMesh icosphere(int level);
/// Surface of [-1, 1]^3 with an n x n grid per side, outward faces.
TriMesh cube_mesh(int n);
/// Structured cylinder grid, n_phi around and n_z along, outward faces, open ends.
/// Vertex (i, j) has index j * n_phi + i.
TriMesh cylinder_grid(int n_phi, int n_z, double radius, double length);

/// (x, y) -> (s x, y / s), s = factor^t, on a unit-area disc.
MeshSequence gen_shear_disc(const SynthSpec& spec);
/// (x, y, z) -> (a x, b y, b z), a = factor^t, b = a^{-1/2}, on a refined icosphere.
MeshSequence gen_aniso_sphere(const SynthSpec& spec);
/// Perturbed cylinder radius r0 + r1 sin(k z) e^{lambda t} with the matching axial drift.
MeshSequence gen_ricci_cylinder(const SynthSpec& spec);
/// Positions (1 - t) A + t B on a uniform time grid. Throws MismatchedConnectivity.
MeshSequence gen_linear_blend(const TriMesh& a, const TriMesh& b, int n_steps);
/// Cube surface blending into its radial projection on the unit sphere.
MeshSequence gen_cube_to_sphere(const SynthSpec& spec);

/// Dispatches on spec.kind; throws InvalidArgument on unknown kinds.
MeshSequence generate(const SynthSpec& spec);

/// Signed volume enclosed by a closed, outward-oriented mesh.
double enclosed_volume(const Points& vertices, const Faces& faces);

}  // namespace qcflow
