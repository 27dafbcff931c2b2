#pragma once

#include <cmath>
#include <random>

#include "qcflow/mesh.hpp"

namespace qcflow::test {

/// Structured nx x ny grid of the unit square split into 2 nx ny triangles,
/// with jittered interior vertices and an optional smooth height field.
inline TriMesh grid_patch(int nx, int ny, std::mt19937& rng, double jitter = 0.15, double bump = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TriMesh m;
  m.vertices.resize((nx + 1) * (ny + 1), 3);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double x = double(i) / nx, y = double(j) / ny;
      if (i > 0 && i < nx) x += jitter * u(rng) / nx;
      if (j > 0 && j < ny) y += jitter * u(rng) / ny;
      const double z = bump * (std::sin(2.1 * x + 0.3) * std::cos(1.7 * y - 0.2) + 0.3 * x * y);
      m.vertices.row(j * (nx + 1) + i) << x, y, z;
    }
  m.faces.resize(2 * nx * ny, 3);
  int f = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = j * (nx + 1) + i, b = a + 1, c = a + nx + 1, d = c + 1;
      m.faces.row(f++) << a, b, d;
      m.faces.row(f++) << a, d, c;
    }
  return m;
}

}  // namespace qcflow::test
