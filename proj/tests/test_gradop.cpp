#include <cmath>

#include <Eigen/SVD>

#include "qcflow/gradop.hpp"
#include "qcflow/synth.hpp"
#include "support.hpp"

using namespace qcflow;

namespace {

struct Built {
  TriMesh mesh;
  std::unique_ptr<Topology> topo;
  std::vector<FaceFrame> frames;
  GradientOperator op;
};

Built build(const TriMesh& m) {
  Built b;
  b.mesh = m;
  b.topo = std::make_unique<Topology>(m.faces, static_cast<int>(m.vertices.rows()));
  b.frames = face_frames(m.vertices, m.faces);
  b.op = GradientOperator::build(m.vertices, *b.topo, b.frames);
  return b;
}

// Dense oracle: U and Delta assembled from scratch, pseudoinverse via SVD.
Eigen::MatrixXd oracle_operator(const TriMesh& m) {
  const Topology topo(m.faces, static_cast<int>(m.vertices.rows()));
  const auto frames = face_frames(m.vertices, m.faces);
  const int M = topo.n_faces();
  const auto& interior = topo.interior_edges();
  const int L = static_cast<int>(interior.size());
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(L, 3 * M), D = Eigen::MatrixXd::Zero(L, M);
  for (int r = 0; r < L; ++r) {
    const int e = interior[r];
    const int a = std::min(topo.edge_faces()(e, 0), topo.edge_faces()(e, 1));
    const int b = std::max(topo.edge_faces()(e, 0), topo.edge_faces()(e, 1));
    const Vec3 mid = 0.5 * (m.vertices.row(topo.edges()(e, 0)) + m.vertices.row(topo.edges()(e, 1))).transpose();
    D(r, a) = -1;
    D(r, b) = 1;
    U.block<1, 3>(r, 3 * a) = (mid - frames[a].centroid).transpose();
    U.block<1, 3>(r, 3 * b) = (frames[b].centroid - mid).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd inv = svd.singularValues();
  const double tol = 1e-12 * inv(0);
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > tol ? 1.0 / inv(i) : 0.0;
  const Eigen::MatrixXd Upinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return Upinv * D;
}

TriMesh hypotenuse_pair() {
  TriMesh m;
  m.vertices.resize(4, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
  m.faces.resize(2, 3);
  m.faces << 0, 1, 2, 0, 2, 3;
  return m;
}

TriMesh strip(int n, double width, double length) {
  TriMesh m;
  m.vertices.resize(2 * (n + 1), 3);
  for (int i = 0; i <= n; ++i) {
    m.vertices.row(2 * i) << length * i / n, 0, 0;
    m.vertices.row(2 * i + 1) << length * i / n, width, 0;
  }
  m.faces.resize(2 * n, 3);
  for (int i = 0; i < n; ++i) {
    m.faces.row(2 * i) << 2 * i, 2 * i + 2, 2 * i + 3;
    m.faces.row(2 * i + 1) << 2 * i, 2 * i + 3, 2 * i + 1;
  }
  return m;
}

}  // namespace

TEST_SUITE("gradop") {
  TEST_CASE("structure of Delta and U") {
    std::mt19937 rng(1);
    const Built b = build(test::grid_patch(4, 3, rng, 0.2, 0.5));
    const auto& D = b.op.delta();
    CHECK(D.rows() == static_cast<Eigen::Index>(b.topo->interior_edges().size()));
    const Eigen::MatrixXd Dd(D), Ud(b.op.U());
    for (Eigen::Index r = 0; r < Dd.rows(); ++r) {
      CHECK(Dd.row(r).sum() == 0.0);
      CHECK((Dd.row(r).array() != 0).count() == 2);
      CHECK(Dd.row(r).minCoeff() == -1.0);
      CHECK((Ud.row(r).array() != 0).count() <= 6);
    }
  }

  TEST_CASE("hypotenuse pair: constant field, linear field, SVD oracle") {
    const TriMesh m = hypotenuse_pair();
    const Built b = build(m);
    const Eigen::MatrixXd P = b.op.dense();
    const Eigen::MatrixXd oracle = oracle_operator(m);
    CHECK((P - oracle).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    CHECK((P * ones).cwiseAbs().maxCoeff() < 1e-15);

    // s = centroid x. A single interior edge leaves the gradient under-determined;
    // the minimum-norm solution splits the difference -1/3 across both faces,
    // giving x-derivative 1/2 on each (hand evaluation: g = U^T (U U^T)^{-1} Delta s).
    Eigen::VectorXd s(2);
    s << b.frames[0].centroid.x(), b.frames[1].centroid.x();
    const Eigen::VectorXd g = P * s;
    CHECK(g(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g(1) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(g(3) == doctest::Approx(0.5).epsilon(1e-12));
    // The recovered field reproduces the edge difference exactly.
    const Eigen::MatrixXd U(b.op.U());
    CHECK((U * g - Eigen::MatrixXd(b.op.delta()) * s).norm() < 1e-14);
  }

  TEST_CASE("random fields on small meshes match the dense SVD oracle") {
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
      const TriMesh m = test::grid_patch(1 + trial % 4, 1 + trial % 3, rng, 0.3, 0.8);
      const Built b = build(m);
      const Eigen::MatrixXd oracle = oracle_operator(m);
      Eigen::MatrixXd field(b.op.n_faces(), 9);
      for (Eigen::Index i = 0; i < field.size(); ++i) field.data()[i] = gauss(rng);
      CHECK((b.op.apply(field) - oracle * field).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  TEST_CASE("pseudoinverse identity U U+ U = U") {
    std::mt19937 rng(9);
    for (const TriMesh& m : {test::grid_patch(6, 5, rng, 0.3, 0.6), icosphere(2), disc_mesh(4)}) {
      const Built b = build(m);
      const Eigen::MatrixXd U(b.op.U());
      const Eigen::MatrixXd Up = b.op.pseudoinverse();
      CHECK((U * Up * U - U).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((Up * U * Up - Up).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  TEST_CASE("tensor application: constants vanish, linearity, adjoint") {
    std::mt19937 rng(10);
    std::normal_distribution<double> gauss;
    const Built b = build(test::grid_patch(5, 4, rng, 0.2, 0.4));
    const int M = b.op.n_faces();
    Mat3 c = Mat3::Random();
    const auto zero = b.op.apply(TensorField(M, c + c.transpose()));
    for (const auto& comp : zero)
      for (const auto& t : comp) CHECK(t.cwiseAbs().maxCoeff() < 1e-12);

    TensorField f1(M), f2(M);
    for (int i = 0; i < M; ++i) {
      f1[i] = Mat3::Random();
      f2[i] = Mat3::Random();
    }
    TensorField mix(M);
    for (int i = 0; i < M; ++i) mix[i] = 2.0 * f1[i] - 3.0 * f2[i];
    const auto g1 = b.op.apply(f1), g2 = b.op.apply(f2), gm = b.op.apply(mix);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < M; ++i) CHECK((gm[a][i] - 2.0 * g1[a][i] + 3.0 * g2[a][i]).norm() < 1e-10);

    Eigen::MatrixXd x(M, 2), y(3 * M, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = gauss(rng);
    const double lhs = (b.op.apply(x).array() * y.array()).sum();
    const double rhs = (x.array() * b.op.apply_adjoint(y).array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }

  TEST_CASE("gradient quadratic form is positive semidefinite with constants in the null space") {
    std::mt19937 rng(12);
    const Built b = build(test::grid_patch(4, 4, rng, 0.2, 0.5));
    const Eigen::MatrixXd P = b.op.dense();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(P.rows(), P.rows());
    for (int f = 0; f < b.op.n_faces(); ++f) W.block<3, 3>(3 * f, 3 * f) = b.frames[f].area * Mat3::Identity();
    const Eigen::MatrixXd A = P.transpose() * W * P;
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    CHECK((A * Eigen::VectorXd::Ones(A.rows())).norm() < 1e-10);
  }

  TEST_CASE("flat strip: x-centroid field has unit x-derivative away from the ends") {
    const TriMesh m = strip(40, 0.1, 4.0);
    const Built b = build(m);
    TensorField field(b.op.n_faces());
    for (int f = 0; f < b.op.n_faces(); ++f) field[f] = b.frames[f].centroid.x() * Mat3::Identity();
    const auto g = b.op.apply(field);
    for (int f = 0; f < b.op.n_faces(); ++f) {
      const double x = b.frames[f].centroid.x();
      if (x < 0.5 || x > 3.5) continue;
      CHECK((g[0][f] - Mat3::Identity()).norm() / Mat3::Identity().norm() < 0.05);
      CHECK(g[1][f].norm() < 0.05);
      CHECK(g[2][f].norm() < 0.05);
    }
  }

  TEST_CASE("refinement: gradient error of a smooth field decreases with edge length") {
    auto error_at = [](int n) {
      std::mt19937 rng(3);
      const TriMesh m = test::grid_patch(n, n, rng, 0.0);
      const Built b = build(m);
      Eigen::VectorXd s(b.op.n_faces());
      for (int f = 0; f < b.op.n_faces(); ++f) {
        const Vec3 c = b.frames[f].centroid;
        s(f) = std::sin(c.x()) * std::cos(0.5 * c.y());
      }
      const Eigen::VectorXd g = b.op.apply(Eigen::MatrixXd(s));
      double err = 0, ref = 0;
      for (int f = 0; f < b.op.n_faces(); ++f) {
        const Vec3 c = b.frames[f].centroid;
        if (c.x() < 0.2 || c.x() > 0.8 || c.y() < 0.2 || c.y() > 0.8) continue;
        const Vec3 exact(std::cos(c.x()) * std::cos(0.5 * c.y()), -0.5 * std::sin(c.x()) * std::sin(0.5 * c.y()), 0);
        err += (g.segment<3>(3 * f) - exact).squaredNorm();
        ref += exact.squaredNorm();
      }
      return std::sqrt(err / ref);
    };
    const double e1 = error_at(8), e2 = error_at(16), e3 = error_at(32);
    MESSAGE("relative gradient error at n = 8, 16, 32: " << e1 << ", " << e2 << ", " << e3);
    CHECK(e2 < e1);
    CHECK(e3 < e2);
    CHECK(std::log2(e1 / e3) / 2.0 >= 1.0);
  }

  TEST_CASE("no interior edge is a singular system") {
    TriMesh m;
    m.vertices.resize(3, 3);
    m.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    m.faces.resize(1, 3);
    m.faces << 0, 1, 2;
    CHECK(test::error_code_of([&] { build(m); }) == ErrorCode::SingularSystem);
  }

  TEST_CASE("operator cache round-trip keyed by content hash") {
    const auto dir = test::scratch_dir("opcache");
    const TriMesh m = hypotenuse_pair();
    const Built b = build(m);
    const Eigen::MatrixXd P = b.op.dense();
    const auto key = content_hash(m.vertices);
    write_operator_cache(dir / "p.bin", P, key);
    Eigen::MatrixXd back;
    CHECK(read_operator_cache(dir / "p.bin", key, back));
    CHECK((back.array() == P.array()).all());
    CHECK_FALSE(read_operator_cache(dir / "p.bin", key + 1, back));
    CHECK_FALSE(read_operator_cache(dir / "missing.bin", key, back));
  }
}
