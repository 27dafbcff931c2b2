#include <cmath>

#include "qcflow/objective.hpp"
#include "qcflow/synth.hpp"
#include "gradient_check.hpp"
#include "support.hpp"

using namespace qcflow;
using namespace qcflow::test;


TEST_SUITE("objective") {
  TEST_CASE("presets match the model table") {
    const ModelSpec v = preset("viscous");
    CHECK(v.A1 == 1);
    CHECK(v.B1 == 1);
    CHECK(v.A3 == 1);
    CHECK(v.A2 == 0);
    CHECK(v.B2 == 0);
    const ModelSpec g = preset("geometric");
    CHECK(g.Cg == 0.1);
    CHECK(g.A1 == 1);
    CHECK(g.B1 == 1);
    CHECK((g.fit_lambda[0] && g.fit_lambda[1] && g.fit_lambda[2]));
    const ModelSpec u = preset("almost_uniform");
    CHECK(u.A2 == 1);
    CHECK(u.B2 == 1);
    CHECK(u.A1 + u.B1 + u.A3 == 0);
    const ModelSpec c = preset("almost_conformal");
    CHECK(c.A2 + c.B2 + c.A3 == 0);
    for (const auto& name : preset_names()) {
      const ModelSpec p = preset(name);
      CHECK(p.Cn == 1e5);
      CHECK(p.Cb == 1e5);
      CHECK(p.CL == 1e5);
      CHECK(p.coercivity_warnings().empty());
    }
    CHECK(test::error_code_of([] { preset("rigid"); }) == ErrorCode::UnknownPreset);
  }

  TEST_CASE("almost-conformal density penalizes only shear") {
    const ModelSpec c = preset("almost_conformal");
    auto density = [&](double g1, double g2) {
      const double tr = g1 + g2;
      return (c.A1 - c.B1 / 2) * tr * tr + c.B1 * (g1 * g1 + g2 * g2);
    };
    CHECK(density(0.7, 0.7) == doctest::Approx(0.0));
    CHECK(density(0.5, -0.5) == doctest::Approx(0.5));  // S = 1 -> S^2 / 2
  }

  TEST_CASE("model JSON round-trip and config errors") {
    ModelSpec s = all_terms();
    s.fit_lambda = {true, false, true};
    const ModelSpec back = model_from_json(model_to_json(s));
    CHECK(back.A1 == s.A1);
    CHECK(back.B2 == s.B2);
    CHECK(back.CL == s.CL);
    CHECK(back.fit_lambda == s.fit_lambda);
    const ModelSpec p = model_from_json({{"preset", "geometric"}, {"Cg", 0.5}});
    CHECK(p.Cg == 0.5);
    CHECK(p.fit_lambda[2]);
    CHECK(test::error_code_of([] { model_from_json({{"A1", "one"}}); }) == ErrorCode::ConfigError);
    CHECK(s.coercivity_warnings().empty());
    ModelSpec bad;
    bad.A1 = -1;
    bad.B1 = 0.5;
    CHECK(bad.coercivity_warnings().size() == 1);
  }

  TEST_CASE("analytic gradients match central differences on 50 random instances") {
    std::mt19937 rng(2024);
    std::vector<ModelSpec> specs;
    for (const auto& name : preset_names()) specs.push_back(preset(name));
    specs.push_back(all_terms());
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
      ModelSpec spec = specs[trial % specs.size()];
      // Keep the constraint weights moderate so the strain terms are visible in the check.
      spec.Cn = spec.Cb = spec.CL = 3.0;
      if (trial % 7 == 3) spec.fit_lambda = {true, false, true};
      const bool planar = trial % 5 == 4;
      const Instance in = random_instance(rng, spec, planar);
      const double err = gradient_error(in);
      worst = std::max(worst, err);
      CHECK_MESSAGE(err < 1e-5, "trial " << trial << " (" << spec.preset_name << ", planar=" << planar << ")");
    }
    MESSAGE("worst componentwise relative error: " << worst);
  }

  TEST_CASE("gradients with production weights 1e5") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 10; ++trial) {
      const Instance in = random_instance(rng, preset(preset_names()[trial % 4]), trial % 3 == 0);
      CHECK(gradient_error(in) < 1e-5);
    }
  }

  TEST_CASE("cost parts are nonnegative and add up") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Instance in = random_instance(rng, all_terms(), false);
      const CostBreakdown c = StepObjective(in.geo, in.spec, in.targets).evaluate(in.V, in.lambda);
      for (double part : {c.viscous, c.grad, c.bend, c.normal, c.boundary, c.landmark, c.lambda_reg}) CHECK(part >= 0);
      CHECK(c.total() == doctest::Approx(c.viscous + c.grad + c.bend + c.normal + c.boundary + c.landmark +
                                         c.lambda_reg));
    }
  }

  TEST_CASE("translation changes only the constraint terms") {
    std::mt19937 rng(6);
    const Instance in = random_instance(rng, all_terms(), false);
    const StepObjective obj(in.geo, in.spec, in.targets);
    Points W = in.V;
    W.rowwise() += Eigen::RowVector3d(0.4, -1.2, 0.7);
    const CostBreakdown a = obj.evaluate(in.V, in.lambda), b = obj.evaluate(W, in.lambda);
    CHECK(b.viscous == doctest::Approx(a.viscous).epsilon(1e-10));
    CHECK(b.grad == doctest::Approx(a.grad).epsilon(1e-10));
    CHECK(b.bend == doctest::Approx(a.bend).epsilon(1e-10));
    CHECK(b.normal != doctest::Approx(a.normal));
  }

  TEST_CASE("geometric with lambda = 0 has the viscous preset's viscous term") {
    std::mt19937 rng(8);
    const Instance in = random_instance(rng, preset("geometric"), false);
    const StepGeometry geo_v = make_step_geometry(in.topo, in.X, in.geo.dt, false, preset("viscous"));
    const double geometric = StepObjective(in.geo, preset("geometric"), in.targets).evaluate(in.V, {0, 0, 0}).viscous;
    const double viscous = StepObjective(geo_v, preset("viscous"), in.targets).evaluate(in.V, {0, 0, 0}).viscous;
    CHECK(geometric == viscous);
  }

  TEST_CASE("rigid flow at data velocities costs nothing, also after rescaling") {
    const TriMesh s = icosphere(2);
    for (double scale : {1.0, 3.7}) {
      const Points X0 = s.vertices * scale;
      const Vec3 c(0.1, -0.3, 0.2);
      std::vector<Points> frames{X0, X0};
      frames[1].rowwise() += 0.05 * c.transpose();
      const MeshSequence seq = make_sequence(s.faces, frames, {0.0, 0.05}, 3);
      const PrescribedFields pf = extract_constraints(seq);
      const Points V = data_velocity(seq, 0);
      const CostBreakdown cost = evaluate_total_cost(seq, 0, V, {0, 0, 0}, preset("viscous"), pf);
      CHECK(cost.total() <= 1e-10 * 1e5 * c.squaredNorm());
    }
  }

  TEST_CASE("extract_constraints: static, planar shear, inflating sphere") {
    const TriMesh d = disc_mesh(4);
    const MeshSequence still = make_sequence(d.faces, {d.vertices, d.vertices}, {0, 1}, 2);
    const PrescribedFields z = extract_constraints(still);
    CHECK(z.normal[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.boundary[0].cwiseAbs().maxCoeff() == 0.0);

    SynthSpec spec;
    spec.n_steps = 5;
    const MeshSequence disc = gen_shear_disc(spec);
    const PrescribedFields pd = extract_constraints(disc);
    CHECK(pd.normal[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(pd.boundary[0].cwiseAbs().maxCoeff() > 0.1);

    const TriMesh s = icosphere(3);
    const double t1 = 1e-6;
    const MeshSequence infl = make_sequence(s.faces, {s.vertices, s.vertices * (1 + t1)}, {0, t1}, 3);
    const PrescribedFields ps = extract_constraints(infl);
    const auto frames = face_frames(s.vertices, s.faces);
    double normal_cost = 0;
    for (int f = 0; f < s.faces.rows(); ++f) {
      CHECK(ps.normal[0](f) == doctest::Approx(frames[f].centroid.norm()).epsilon(1e-3));
      normal_cost += 1e5 * t1 * frames[f].area * ps.normal[0](f) * ps.normal[0](f);
    }
    // V = 0 under almost-conformal leaves only the normal residual.
    const Points V0 = Points::Zero(s.vertices.rows(), 3);
    const CostBreakdown c = evaluate_total_cost(infl, 0, V0, {0, 0, 0}, preset("almost_conformal"), ps);
    CHECK(c.normal == doctest::Approx(normal_cost).epsilon(1e-10));
    CHECK(c.total() == doctest::Approx(c.normal));
  }

  TEST_CASE("planar mode ignores normal and bending terms") {
    std::mt19937 rng(9);
    Instance in = random_instance(rng, all_terms(), true);
    const CostBreakdown c = StepObjective(in.geo, in.spec, in.targets).evaluate(in.V, in.lambda);
    CHECK(c.normal == 0.0);
    CHECK(c.bend == 0.0);
  }

  TEST_CASE("target shape mismatch is reported") {
    std::mt19937 rng(10);
    Instance in = random_instance(rng, preset("viscous"), false);
    in.targets.normal.resize(1);
    CHECK(test::error_code_of([&] { StepObjective(in.geo, in.spec, in.targets); }) == ErrorCode::ShapeMismatch);
  }
}
