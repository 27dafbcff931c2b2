#include <cmath>

#include "qcflow/geometry.hpp"
#include "qcflow/pipeline.hpp"
#include "qcflow/strain.hpp"
#include "qcflow/synth.hpp"
#include "support.hpp"

using namespace qcflow;

namespace {

Eigen::Vector3d extent(const Points& X) { return X.colwise().maxCoeff() - X.colwise().minCoeff(); }

SynthSpec kind_spec(const std::string& kind, int resolution = 300, int n_steps = 30) {
  SynthSpec s;
  s.kind = kind;
  s.resolution = resolution;
  s.n_steps = n_steps;
  return s;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("mesh builders have the expected sizes and orientation") {
    const TriMesh disc = disc_mesh(4);
    CHECK(disc.faces.rows() == 6 * 16);
    CHECK(total_area(disc.vertices, disc.faces) == doctest::Approx(1.0).epsilon(1e-12));
    for (const FaceFrame& fr : face_frames(disc.vertices, disc.faces)) CHECK(fr.normal.z() > 0.99);

    const TriMesh sphere = icosphere(2);
    CHECK(sphere.faces.rows() == 320);
    CHECK(enclosed_volume(sphere.vertices, sphere.faces) > 0);
    for (Eigen::Index v = 0; v < sphere.vertices.rows(); ++v)
      CHECK(sphere.vertices.row(v).norm() == doctest::Approx(1.0).epsilon(1e-14));

    const TriMesh cube = cube_mesh(3);
    CHECK(cube.faces.rows() == 6 * 9 * 2);
    CHECK(enclosed_volume(cube.vertices, cube.faces) == doctest::Approx(8.0).epsilon(1e-12));

    const TriMesh cyl = cylinder_grid(12, 5, 0.5, 2.0);
    CHECK(cyl.vertices.rows() == 72);
    CHECK(cyl.faces.rows() == 2 * 12 * 5);
    CHECK(cyl.vertices(13, 2) == doctest::Approx(0.4));
  }

  TEST_CASE("shear disc: stretch factors, area, and constant strain rate") {
    const MeshSequence seq = gen_shear_disc(kind_spec("shear_disc", 600));
    CHECK(seq.planar());
    CHECK(seq.n_frames() == 30);
    const Eigen::Vector3d e0 = extent(seq.frames.front()), e1 = extent(seq.frames.back());
    CHECK(e1.x() / e0.x() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(e1.y() / e0.y() == doctest::Approx(1 / 1.5).epsilon(1e-12));
    for (const Points& X : seq.frames) CHECK(std::abs(total_area(X, seq.topology->faces()) - 1.0) < 1e-10);

    // The generating velocity at time t is ln(1.5) (x, -y), recovered from the frame positions.
    const double r = std::log(1.5);
    const Faces& F = seq.topology->faces();
    for (int n : {0, 14, 29}) {
      const Points& X = seq.frames[n];
      Points V(X.rows(), 3);
      V.col(0) = r * X.col(0);
      V.col(1) = -r * X.col(1);
      V.col(2).setZero();
      for (int f = 0; f < seq.n_faces(); f += 7) {
        const FaceFrame fr = face_frame(X, F, f);
        const Mat3 S = strain_rate_half(fr, Vec3(V.row(F(f, 0))), Vec3(V.row(F(f, 1))), Vec3(V.row(F(f, 2))));
        const TangentEigen te = tangent_eigen(S, fr.normal);
        CHECK(te.g1 == doctest::Approx(r).epsilon(1e-10));
        CHECK(te.g2 == doctest::Approx(-r).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("anisotropic sphere: constant volume and axis factors") {
    const MeshSequence seq = gen_aniso_sphere(kind_spec("aniso_sphere", 1280));
    CHECK(seq.n_faces() == 1280);
    const double v0 = enclosed_volume(seq.frames[0], seq.topology->faces());
    for (const Points& X : seq.frames)
      CHECK(std::abs(enclosed_volume(X, seq.topology->faces()) / v0 - 1.0) < 1e-8);
    const Points &A = seq.frames.front(), &B = seq.frames.back();
    for (Eigen::Index v = 0; v < A.rows(); ++v) {
      if (std::abs(A(v, 0)) > 0.1) CHECK(B(v, 0) / A(v, 0) == doctest::Approx(1.5).epsilon(1e-12));
      if (std::abs(A(v, 1)) > 0.1) CHECK(B(v, 1) / A(v, 1) == doctest::Approx(0.816496580927726).epsilon(1e-12));
      if (std::abs(A(v, 2)) > 0.1) CHECK(B(v, 2) / A(v, 2) == doctest::Approx(0.816496580927726).epsilon(1e-12));
    }
  }

  TEST_CASE("Ricci cylinder: parameters, initial profile, and amplitude growth") {
    const SynthSpec spec = kind_spec("ricci_cylinder", 1800);
    const nlohmann::json j = synth_to_json(spec);
    CHECK(j.at("r0").get<double>() == 0.16);
    CHECK(j.at("r1").get<double>() == doctest::Approx(0.016).epsilon(1e-15));
    CHECK(j.at("lambda_rate").get<double>() == 1.0);
    CHECK(j.at("L0").get<double>() == 1.0);
    CHECK(j.at("k").get<double>() == doctest::Approx(2 * M_PI));

    const MeshSequence seq = gen_ricci_cylinder(spec);
    CHECK(seq.n_faces() == doctest::Approx(1800).epsilon(0.05));
    const TriMesh grid = cylinder_grid(30, 30, 1.0, 1.0);
    REQUIRE(grid.vertices.rows() == seq.n_vertices());
    const Points &A = seq.frames.front(), &B = seq.frames.back();
    for (Eigen::Index v = 0; v < A.rows(); ++v) {
      const double z = grid.vertices(v, 2);
      const double ra = A.row(v).head<2>().norm(), rb = B.row(v).head<2>().norm();
      CHECK(A(v, 2) == z);
      CHECK(ra == doctest::Approx(0.16 + 0.016 * std::sin(2 * M_PI * z)).epsilon(1e-13));
      if (std::abs(std::sin(2 * M_PI * z)) > 0.1) CHECK((rb - 0.16) / (ra - 0.16) == doctest::Approx(M_E).epsilon(1e-10));
    }
  }

  TEST_CASE("linear blend: endpoints, midpoint, straight trajectories") {
    TriMesh a = icosphere(1), b = a;
    b.vertices *= 2.0;
    b.vertices.col(0).array() += 0.5;
    const MeshSequence three = gen_linear_blend(a, b, 3);
    CHECK(three.frames[0] == a.vertices);
    CHECK(three.frames[2] == b.vertices);
    CHECK((three.frames[1] - 0.5 * (a.vertices + b.vertices)).cwiseAbs().maxCoeff() < 1e-15);

    const MeshSequence cs = gen_cube_to_sphere(kind_spec("linear_blend", 2000));
    CHECK(cs.n_frames() == 30);
    CHECK(cs.n_faces() == doctest::Approx(2000).epsilon(0.05));
    for (int n = 1; n + 1 < cs.n_frames(); ++n)
      CHECK((cs.frames[n + 1] - 2 * cs.frames[n] + cs.frames[n - 1]).cwiseAbs().maxCoeff() < 1e-14);
    for (Eigen::Index v = 0; v < cs.n_vertices(); ++v)
      CHECK(cs.frames.back().row(v).norm() == doctest::Approx(1.0).epsilon(1e-14));

    TriMesh other = icosphere(2);
    CHECK(test::error_code_of([&] { gen_linear_blend(a, other, 5); }) == ErrorCode::MismatchedConnectivity);
    TriMesh permuted = a;
    permuted.faces.row(0) = a.faces.row(0).reverse();
    CHECK(test::error_code_of([&] { gen_linear_blend(a, permuted, 5); }) == ErrorCode::MismatchedConnectivity);
  }

  TEST_CASE("every generator output validates and passes the invariant checks") {
    for (const char* kind : {"shear_disc", "aniso_sphere", "ricci_cylinder", "linear_blend"}) {
      CAPTURE(kind);
      const MeshSequence seq = generate(kind_spec(kind, 200, 4));
      CHECK(seq.n_frames() == 4);
      for (const CheckResult& c : run_invariant_checks(seq)) {
        CAPTURE(c.name);
        CHECK(c.pass);
      }
    }
  }

  TEST_CASE("synth parameters JSON round-trip and errors") {
    SynthSpec s = kind_spec("ricci_cylinder", 900, 12);
    s.k = 11.0;
    const SynthSpec back = synth_from_json(synth_to_json(s));
    CHECK(back.kind == s.kind);
    CHECK(back.n_steps == 12);
    CHECK(back.resolution == 900);
    CHECK(back.k == 11.0);
    CHECK(test::error_code_of([] { generate(kind_spec("torus")); }) == ErrorCode::InvalidArgument);
    CHECK(test::error_code_of([] { generate(kind_spec("shear_disc", 100, 1)); }) == ErrorCode::InvalidArgument);
    CHECK(test::error_code_of([] { synth_from_json({{"n_steps", "many"}}); }) == ErrorCode::ConfigError);
  }
}
