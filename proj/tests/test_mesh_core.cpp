#include <cmath>
#include <fstream>
#include <numbers>

#include "qcflow/mesh_io.hpp"
#include "qcflow/preprocess.hpp"
#include "qcflow/synth.hpp"
#include "support.hpp"

using namespace qcflow;
using qcflow::test::error_code_of;

namespace {

TriMesh two_triangles() {
  TriMesh m;
  m.vertices.resize(4, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
  m.faces.resize(2, 3);
  m.faces << 0, 1, 2, 0, 2, 3;
  return m;
}

// Regular hexagon fan around vertex 0.
TriMesh hex_patch(const Vec3& center) {
  TriMesh m;
  m.vertices.resize(7, 3);
  m.vertices.row(0) = center.transpose();
  for (int k = 0; k < 6; ++k) {
    const double a = k * std::numbers::pi / 3.0;
    m.vertices.row(k + 1) = (center + Vec3(std::cos(a), std::sin(a), 0)).transpose();
  }
  m.faces.resize(6, 3);
  for (int k = 0; k < 6; ++k) m.faces.row(k) << 0, 1 + k, 1 + (k + 1) % 6;
  return m;
}

}  // namespace

TEST_SUITE("mesh_core") {
  TEST_CASE("topology of two triangles") {
    const TriMesh m = two_triangles();
    const Topology topo(m.faces, 4);
    CHECK(topo.n_edges() == 5);
    CHECK(topo.interior_edges().size() == 1);
    CHECK(topo.boundary_edges().size() == 4);
    CHECK_FALSE(topo.is_closed());
    // Lexicographic edge order.
    for (int e = 1; e < topo.n_edges(); ++e) {
      const auto a = topo.edges().row(e - 1), b = topo.edges().row(e);
      CHECK((a(0) < b(0) || (a(0) == b(0) && a(1) < b(1))));
    }
    const int diag = topo.find_edge(0, 2);
    REQUIRE(diag >= 0);
    CHECK(topo.edge_faces()(diag, 0) == 0);
    CHECK(topo.edge_faces()(diag, 1) == 1);
  }

  TEST_CASE("closed icosphere has no boundary and V - E + F = 2") {
    const TriMesh m = icosphere(2);
    const Topology topo(m.faces, static_cast<int>(m.vertices.rows()));
    CHECK(topo.is_closed());
    CHECK(topo.n_vertices() - topo.n_edges() + topo.n_faces() == 2);
  }

  TEST_CASE("edge in three faces is non-manifold") {
    Faces f(3, 3);
    f << 0, 1, 2, 1, 0, 3, 0, 1, 4;
    CHECK(error_code_of([&] { Topology(f, 5); }) == ErrorCode::NonManifold);
  }

  TEST_CASE("load_sequence of 30 identical-connectivity frames") {
    const auto dir = test::scratch_dir("load30");
    const TriMesh m = disc_mesh(3);
    std::vector<std::filesystem::path> paths;
    for (int n = 0; n < 30; ++n) {
      TriMesh k = m;
      k.vertices *= 1.0 + 0.01 * n;
      paths.push_back(dir / ("f" + std::to_string(100 + n) + ".obj"));
      write_obj(paths.back(), k);
    }
    const MeshSequence seq = load_sequence(paths);
    CHECK(seq.n_frames() == 30);
    CHECK(seq.dim == 2);
    CHECK(seq.times.front() == 0.0);
    CHECK(seq.times.back() == doctest::Approx(1.0));
  }

  TEST_CASE("single frame is rejected") {
    const auto dir = test::scratch_dir("single");
    write_obj(dir / "a.obj", two_triangles());
    CHECK(error_code_of([&] { load_sequence({dir / "a.obj"}); }) == ErrorCode::TooFewFrames);
  }

  TEST_CASE("permuted face triple is mismatched connectivity") {
    const auto dir = test::scratch_dir("perm");
    TriMesh a = two_triangles(), b = two_triangles();
    b.faces.row(1) << 2, 3, 0;
    write_obj(dir / "a.obj", a);
    write_obj(dir / "b.obj", b);
    CHECK(error_code_of([&] { load_sequence({dir / "a.obj", dir / "b.obj"}); }) ==
          ErrorCode::MismatchedConnectivity);
  }

  TEST_CASE("degenerate face is rejected") {
    const auto dir = test::scratch_dir("degen");
    TriMesh a = two_triangles(), b = two_triangles();
    b.vertices.row(1) = b.vertices.row(0);
    write_obj(dir / "a.obj", a);
    write_obj(dir / "b.obj", b);
    CHECK(error_code_of([&] { load_sequence({dir / "a.obj", dir / "b.obj"}); }) == ErrorCode::DegenerateFace);
  }

  TEST_CASE("missing frame names the path") {
    try {
      load_sequence({"/nonexistent/frame_a.obj", "/nonexistent/frame_b.obj"});
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoError);
      CHECK(std::string(e.what()).find("frame_a.obj") != std::string::npos);
    }
  }

  TEST_CASE("OBJ and positions blob round-trip bit-exactly") {
    const auto dir = test::scratch_dir("roundtrip");
    std::mt19937 rng(3);
    TriMesh m = test::grid_patch(5, 4, rng, 0.3, 0.7);
    m.vertices *= 1.0 / 3.0;
    write_obj(dir / "m.obj", m);
    const TriMesh back = read_obj(dir / "m.obj");
    CHECK(back.faces == m.faces);
    CHECK((back.vertices.array() == m.vertices.array()).all());

    std::vector<Points> frames{m.vertices, m.vertices * std::numbers::pi};
    write_positions_blob(dir / "p.bin", frames, 3);
    int dim = 0;
    const auto blob = read_positions_blob(dir / "p.bin", &dim);
    CHECK(dim == 3);
    REQUIRE(blob.size() == 2);
    CHECK((blob[1].array() == frames[1].array()).all());

    const MeshSequence seq = make_sequence(m.faces, frames, {0.0, 1.0}, 3);
    save_sequence(dir / "seq", seq);
    const MeshSequence re = load_sequence_dir(dir / "seq");
    CHECK((re.frames[1].array() == seq.frames[1].array()).all());
    CHECK(re.times == seq.times);
  }

  TEST_CASE("slash-form OBJ faces parse") {
    const auto dir = test::scratch_dir("slash");
    std::ofstream(dir / "s.obj") << "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3//1\n";
    const TriMesh m = read_obj(dir / "s.obj");
    CHECK(m.faces.rows() == 1);
    CHECK(m.faces(0, 2) == 2);
  }

  TEST_CASE("landmark file parsing and validation") {
    const auto dir = test::scratch_dir("landmarks");
    std::ofstream(dir / "lm.txt") << "# pins\n0\n3\n";
    const LandmarkSet lm = read_landmarks(dir / "lm.txt");
    CHECK(lm.vertices == std::vector<int>{0, 3});
    const TriMesh m = two_triangles();
    TriMesh m2 = m;
    m2.vertices *= 2.0;
    const MeshSequence seq = make_sequence(m.faces, {m.vertices, m2.vertices}, {0, 1}, 2);
    const LandmarkSet r = resolve_landmarks(seq, lm);
    REQUIRE(r.velocities.size() == 1);
    CHECK(r.velocities[0](1, 1) == doctest::Approx(1.0));
    CHECK(r.velocities[0](1, 0) == doctest::Approx(0.0));
    LandmarkSet dup{{1, 1}, {}};
    CHECK(error_code_of([&] { resolve_landmarks(seq, dup); }) == ErrorCode::InvalidArgument);
    LandmarkSet out_of_range{{9}, {}};
    CHECK(error_code_of([&] { resolve_landmarks(seq, out_of_range); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("normalize: area 4 halves coordinates, times map to [0, 1]") {
    TriMesh m = two_triangles();
    m.vertices *= 2.0;  // area 4
    const MeshSequence seq = make_sequence(m.faces, {m.vertices, m.vertices * 1.1, m.vertices * 1.2}, {0, 5, 10}, 2);
    const MeshSequence n = normalize_sequence(seq);
    CHECK(n.frames[0](2, 0) == doctest::Approx(1.0));
    CHECK(total_area(n.frames[0], m.faces) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(n.times == std::vector<double>{0.0, 0.5, 1.0});
    const MeshSequence again = normalize_sequence(n);
    CHECK((again.frames[2] - n.frames[2]).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("pchip: two points is linear, {0,1,1,1} never overshoots") {
    const std::vector<double> x2{0, 1}, y2{2, 4};
    const auto s2 = pchip_slopes(x2, y2);
    CHECK(pchip_eval(x2, y2, s2, 0.25) == doctest::Approx(2.5));

    const std::vector<double> x{0, 1, 2, 3}, y{0, 1, 1, 1};
    const auto s = pchip_slopes(x, y);
    double prev = -1.0;
    for (int i = 0; i <= 10000; ++i) {
      const double v = pchip_eval(x, y, s, 3.0 * i / 10000.0);
      CHECK(v <= 1.0 + 1e-15);
      CHECK(v >= prev - 1e-15);
      prev = v;
    }
    for (int k = 0; k < 4; ++k) CHECK(pchip_eval(x, y, s, x[k]) == doctest::Approx(y[k]));
  }

  TEST_CASE("densify: 4 keyframes to 30 frames through the keys") {
    const TriMesh m = two_triangles();
    std::vector<Points> keys;
    for (double s : {1.0, 1.3, 1.4, 2.0}) keys.push_back(m.vertices * s);
    const MeshSequence seq = make_sequence(m.faces, keys, {0, 1, 2, 3}, 2);
    const MeshSequence d = densify_temporal(seq, 30);
    CHECK(d.n_frames() == 30);
    CHECK(d.frames.front()(1, 0) == doctest::Approx(1.0));
    CHECK(d.frames.back()(1, 0) == doctest::Approx(2.0));
    const MeshSequence same = densify_temporal(seq, 4);
    for (int k = 0; k < 4; ++k) CHECK((same.frames[k] - seq.frames[k]).cwiseAbs().maxCoeff() < 1e-14);
    // Monotone trajectories stay monotone.
    for (int i = 1; i < 30; ++i) CHECK(d.frames[i](2, 0) >= d.frames[i - 1](2, 0));
  }

  TEST_CASE("taubin: identity at zero iterations, area-stable on a sphere") {
    const TriMesh s = icosphere(3);
    CHECK((taubin_smooth(s, {0, 0.5, -0.53}) - s.vertices).cwiseAbs().maxCoeff() == 0.0);
    const double a0 = total_area(s.vertices, s.faces);
    const double taubin = total_area(taubin_smooth(s, {10, 0.5, -0.53}), s.faces);
    const double shrink = total_area(taubin_smooth(s, {10, 0.5, 0.0}), s.faces);
    CHECK(std::abs(taubin - a0) / a0 < 0.02);
    CHECK(std::abs(shrink - a0) > 2.0 * std::abs(taubin - a0));
  }

  TEST_CASE("taubin: one lambda step reduces a bump on a flat patch") {
    std::mt19937 rng(1);
    TriMesh m = test::grid_patch(4, 4, rng, 0.0);
    const int v = 2 * 5 + 2;
    m.vertices(v, 2) = 0.3;
    const Points out = taubin_smooth(m, {1, 0.5, 0.0});
    CHECK(std::abs(out(v, 2)) < 0.3);
  }

  TEST_CASE("loop: counts, beta(6) = 1/16, hand-evaluated hex step") {
    CHECK(loop_beta(6) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
    CHECK(loop_beta(3) == doctest::Approx(3.0 / 16.0).epsilon(1e-15));
    TriMesh h = hex_patch(Vec3(0.1, 0.2, 0));
    const Topology topo(h.faces, 7);
    const TriMesh r = loop_subdivide(h);
    CHECK(r.faces.rows() == 4 * h.faces.rows());
    CHECK(r.vertices.rows() == 7 + topo.n_edges());
    CHECK((r.vertices.row(0) - h.vertices.row(0)).norm() < 1e-15);
    // Moving one neighbor by delta moves the center by beta(6) delta.
    h.vertices(1, 2) += 0.32;
    const TriMesh r2 = loop_subdivide(h);
    CHECK(r2.vertices(0, 2) == doctest::Approx(0.32 / 16.0).epsilon(1e-14));
    // Boundary vertex: (1/8, 3/4, 1/8) of its boundary neighbors.
    const Vec3 expect = 0.75 * h.vertices.row(1).transpose() +
                        0.125 * (h.vertices.row(2) + h.vertices.row(6)).transpose();
    CHECK((r2.vertices.row(1).transpose() - expect).norm() < 1e-14);
    // Boundary edge point is the midpoint.
    const int e = topo.find_edge(1, 2);
    const Vec3 mid = 0.5 * (h.vertices.row(1) + h.vertices.row(2)).transpose();
    CHECK((r2.vertices.row(7 + e).transpose() - mid).norm() < 1e-14);
  }

  TEST_CASE("loop: boundary vertex set is preserved as a subset") {
    const TriMesh d = disc_mesh(3);
    const Topology t0(d.faces, static_cast<int>(d.vertices.rows()));
    const TriMesh r = loop_subdivide(d);
    const Topology t1(r.faces, static_cast<int>(r.vertices.rows()));
    for (int v = 0; v < t0.n_vertices(); ++v)
      if (t0.is_boundary_vertex(v)) CHECK(t1.is_boundary_vertex(v));
  }

  TEST_CASE("triangulate: square, triangle, degenerate cloud") {
    Points sq(4, 3);
    sq << 0, 0, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1;
    CHECK(triangulate_point_cloud(sq).faces.rows() == 2);
    Points tri(3, 3);
    tri << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    CHECK(triangulate_point_cloud(tri).faces.rows() == 1);
    Points line(4, 3);
    line << 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3;
    CHECK(error_code_of([&] { triangulate_point_cloud(line); }) == ErrorCode::DegenerateCloud);
  }

  TEST_CASE("triangulate: 100-point leaf scan has no boundary slivers") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Points cloud(100, 3);
    for (int i = 0; i < 100;) {
      const double x = u(rng), y = u(rng);
      if (x * x + 4 * y * y > 1) continue;
      cloud.row(i++) << x, y, 0.05 * x * x;
    }
    const TriMesh m = triangulate_point_cloud(cloud);
    const Topology topo(m.faces, static_cast<int>(m.vertices.rows()));
    for (int e : topo.boundary_edges()) {
      const int f = topo.edge_faces()(e, 0);
      const Vec3 a = m.vertices.row(m.faces(f, 0)), b = m.vertices.row(m.faces(f, 1)),
                 c = m.vertices.row(m.faces(f, 2));
      CHECK(min_angle_deg(a, b, c) >= 15.0);
    }
    // One Loop round lands near 400 vertices.
    const TriMesh fine = loop_subdivide(m);
    CHECK(fine.vertices.rows() > 300);
    CHECK(fine.vertices.rows() < 450);
  }

  TEST_CASE("delaunay: empty circumcircle property") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::Matrix<double, Eigen::Dynamic, 2> p(60, 2);
    for (int i = 0; i < 60; ++i) p.row(i) << u(rng), u(rng);
    const Faces f = delaunay_2d(p);
    for (int t = 0; t < f.rows(); ++t) {
      const Vec2 a = p.row(f(t, 0)), b = p.row(f(t, 1)), c = p.row(f(t, 2));
      CHECK((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x() > 0);
      Mat3 m;
      for (int i = 0; i < 60; ++i) {
        const Vec2 q = p.row(i);
        int k = 0;
        for (const Vec2& v : {a, b, c}) {
          const Vec2 d = v - q;
          m.row(k++) << d.x(), d.y(), d.squaredNorm();
        }
        CHECK(m.determinant() <= 1e-12);
      }
    }
  }
}
