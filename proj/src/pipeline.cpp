#include "qcflow/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#include "qcflow/error.hpp"
#include "qcflow/mesh_io.hpp"
#include "qcflow/preprocess.hpp"

namespace qcflow {

namespace fs = std::filesystem;

namespace {

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

// Rigid velocity omega x X + c with targets measured from the same field, so
// every term of the cost should vanish.
double rigid_motion_residual(const MeshSequence& seq, int frame, const Vec3& omega, const Vec3& c, double A3) {
  ModelSpec spec;
  spec.A1 = spec.B1 = spec.A2 = spec.B2 = 1.0;
  spec.A3 = A3;
  const double dt = 1.0 / 32.0;
  const Points& X = seq.frames[frame];
  const bool planar = seq.planar();
  Vec3 w = omega;
  Vec3 shift = c;
  if (planar) {
    w = Vec3(0, 0, omega.z());
    shift.z() = 0;
  }
  Points V(X.rows(), 3);
  for (Eigen::Index v = 0; v < X.rows(); ++v) V.row(v) = (w.cross(Vec3(X.row(v).transpose())) + shift).transpose();
  const StepGeometry geo = make_step_geometry(seq.topology, X, dt, planar, spec);
  const Topology& topo = *seq.topology;
  StepTargets targets;
  targets.normal = Eigen::VectorXd::Zero(topo.n_faces());
  for (int f = 0; f < topo.n_faces(); ++f) {
    const Vec3 vc = (V.row(topo.faces()(f, 0)) + V.row(topo.faces()(f, 1)) + V.row(topo.faces()(f, 2))) / 3.0;
    targets.normal(f) = planar ? 0.0 : geo.frames[f].normal.dot(vc);
  }
  targets.boundary.resize(static_cast<Eigen::Index>(geo.boundary.size()));
  for (std::size_t i = 0; i < geo.boundary.size(); ++i) {
    const int e = geo.boundary[i].edge;
    const Vec3 vm = 0.5 * (V.row(topo.edges()(e, 0)) + V.row(topo.edges()(e, 1))).transpose();
    targets.boundary(static_cast<Eigen::Index>(i)) = geo.boundary[i].conormal.dot(vm);
  }
  targets.landmark = Points(0, 3);
  const StepObjective obj(geo, spec, targets);
  const double cost = obj.evaluate(V, {0, 0, 0}).total();
  double scale = 0.0;
  for (int f = 0; f < topo.n_faces(); ++f) {
    const Vec3 vc = (V.row(topo.faces()(f, 0)) + V.row(topo.faces()(f, 1)) + V.row(topo.faces()(f, 2))) / 3.0;
    scale += spec.Cn * dt * geo.frames[f].area * vc.squaredNorm();
  }
  return cost / std::max(scale, 1e-300);
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(const MeshSequence& seq) {
  const Topology& topo = *seq.topology;
  double proj = 0.0, pinv = 0.0, rigid = 0.0, translation = 0.0, constant_grad = 0.0, smoothing = 0.0;
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss;
  for (int n = 0; n < seq.n_frames(); ++n) {
    const Points& X = seq.frames[n];
    const auto frames = face_frames(X, topo.faces());
    for (const auto& fr : frames) {
      const Mat3& Q = fr.projector;
      proj = std::max({proj, max_abs(Q * Q - Q), (Q * fr.normal).cwiseAbs().maxCoeff(), max_abs(Q - Q.transpose()),
                       std::abs(Q.trace() - 2.0), max_abs(Q - (Mat3::Identity() - fr.normal * fr.normal.transpose()))});
    }
    if (!topo.interior_edges().empty()) {
      const GradientOperator op = GradientOperator::build(X, topo, frames);
      Eigen::MatrixXd probe(op.U().cols(), 3);
      for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = gauss(rng);
      // U U^+ (U x) = U x, with U^+ applied as the minimum-norm solve.
      const Eigen::MatrixXd y = op.U() * probe;
      const Eigen::MatrixXd back = op.U() * op.solve_min_norm(y);
      pinv = std::max(pinv, (back - y).cwiseAbs().maxCoeff() / std::max(1.0, y.cwiseAbs().maxCoeff()));

      Mat3 c = Mat3::Random();
      c = c + c.transpose();
      const auto d = op.apply(TensorField(topo.n_faces(), c));
      for (const auto& field : d)
        for (const auto& t : field) constant_grad = std::max(constant_grad, max_abs(t));
    }
    rigid = std::max(rigid, rigid_motion_residual(seq, n, Vec3(0.3, -0.2, 0.5), Vec3(0.1, 0.2, -0.3), 0.0));
    translation = std::max(translation, rigid_motion_residual(seq, n, Vec3::Zero(), Vec3(0.1, 0.2, -0.3), 1.0));
  }
  for (int n : {0, seq.n_frames() - 1}) {
    const auto frames = face_frames(seq.frames[n], topo.faces());
    const Eigen::VectorXd ones = Eigen::VectorXd::Constant(topo.n_faces(), 2.5);
    const Eigen::VectorXd s = smooth_field(ones, topo, frames);
    smoothing = std::max(smoothing, (s - ones).cwiseAbs().maxCoeff() / 2.5);
  }
  return {{"projector identities", proj <= 1e-10, proj, 1e-10},
          {"pseudoinverse U U+ U = U", pinv <= 1e-8, pinv, 1e-8},
          {"rigid motion zero cost (no bending)", rigid <= 1e-10, rigid, 1e-10},
          {"translation zero cost (with bending)", translation <= 1e-10, translation, 1e-10},
          {"constant field zero gradient", constant_grad <= 1e-10, constant_grad, 1e-10},
          {"smoothing preserves constants", smoothing <= 1e-12, smoothing, 1e-12}};
}

MeshSequence load_input(const std::vector<fs::path>& inputs) {
  if (inputs.empty()) throw Error(ErrorCode::ConfigError, "no input given");
  for (const auto& p : inputs)
    if (!fs::exists(p)) throw Error(ErrorCode::IoError, "missing input " + p.string());
  if (inputs.size() == 1 && fs::is_directory(inputs.front())) return load_sequence_dir(inputs.front());
  return load_sequence(inputs);
}

namespace {

std::vector<fs::path> input_paths(const nlohmann::json& config) {
  std::vector<fs::path> paths;
  if (!config.contains("input")) throw Error(ErrorCode::ConfigError, "missing 'input'");
  const auto& in = config.at("input");
  if (in.is_string()) {
    paths.emplace_back(in.get<std::string>());
  } else {
    for (const auto& p : in) paths.emplace_back(p.get<std::string>());
  }
  return paths;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  try {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string(key) + ": " + e.what());
  }
}

ModelSpec model_from_config(const nlohmann::json& config) {
  if (config.contains("model")) return model_from_json(config.at("model"));
  if (config.contains("preset")) return preset(config.at("preset").get<std::string>());
  throw Error(ErrorCode::ConfigError, "missing 'model' or 'preset'");
}

SolveOptions options_from_config(const nlohmann::json& config) {
  SolveOptions o;
  if (!config.contains("solver")) return o;
  const auto& s = config.at("solver");
  o.lbfgs.max_iters = get_or(s, "max_iters", o.lbfgs.max_iters);
  o.lbfgs.grad_tol = get_or(s, "grad_tol", o.lbfgs.grad_tol);
  o.lbfgs.memory = get_or(s, "memory", o.lbfgs.memory);
  o.reproject = get_or(s, "reproject", o.reproject);
  const std::string seed = get_or<std::string>(s, "seed", "data");
  if (seed == "zero")
    o.seed = SeedVelocity::Zero;
  else if (seed != "data")
    throw Error(ErrorCode::ConfigError, "solver.seed must be 'data' or 'zero'");
  if (o.lbfgs.max_iters < 1 || !(o.lbfgs.grad_tol > 0) || o.lbfgs.memory < 1)
    throw Error(ErrorCode::ConfigError, "solver options out of range");
  return o;
}

nlohmann::json options_to_json(const SolveOptions& o) {
  return {{"max_iters", o.lbfgs.max_iters}, {"grad_tol", o.lbfgs.grad_tol},   {"memory", o.lbfgs.memory},
          {"c1", o.lbfgs.c1},               {"c2", o.lbfgs.c2},               {"reproject", o.reproject},
          {"seed", o.seed == SeedVelocity::Data ? "data" : "zero"}};
}

void smooth_rates(std::vector<RateField>& rates, const SolveResult& result, const Topology& topo, double fraction) {
  for (int n = 0; n < static_cast<int>(rates.size()); ++n) {
    const auto frames = face_frames(result.positions[n], topo.faces());
    RateField& r = rates[n];
    r.D = smooth_field(r.D, topo, frames, {fraction});
    r.S = smooth_field(r.S, topo, frames, {fraction});
    double peak = 0.0;
    for (int f = 0; f < r.size(); ++f) peak = std::max({peak, std::abs(r.D(f)), r.S(f)});
    r.D_norm = peak > 0 ? Eigen::VectorXd(r.D / peak) : Eigen::VectorXd::Zero(r.size());
    r.S_norm = peak > 0 ? Eigen::VectorXd(r.S / peak) : Eigen::VectorXd::Zero(r.size());
  }
}

}  // namespace

RunOutput run_solve(const nlohmann::json& config) {
  const auto inputs = input_paths(config);
  MeshSequence seq = load_input(inputs);
  if (get_or(config, "normalize", true)) seq = normalize_sequence(seq);
  const int densify = get_or(config, "densify", 0);
  if (densify > 0) seq = densify_temporal(seq, densify);
  const ModelSpec spec = model_from_config(config);
  for (const auto& w : spec.coercivity_warnings()) std::cerr << "warning: " << w << '\n';
  const SolveOptions opts = options_from_config(config);

  LandmarkSet landmarks;
  if (config.contains("landmarks")) {
    const fs::path lm = config.at("landmarks").get<std::string>();
    const fs::path vel = config.contains("landmark_velocities")
                             ? fs::path(config.at("landmark_velocities").get<std::string>())
                             : fs::path();
    landmarks = read_landmarks(lm, vel);
  }

  RunOutput out;
  out.result = solve_sequence(seq, spec, landmarks, opts);
  out.rates = rates_for_result(out.result, seq.topology->faces());
  if (get_or(config, "smooth", false))
    smooth_rates(out.rates, out.result, *seq.topology, get_or(config, "d_bar_fraction", 0.10));

  if (!config.contains("out")) throw Error(ErrorCode::ConfigError, "missing 'out'");
  nlohmann::json info;
  info["command"] = "solve";
  info["model"] = model_to_json(spec);
  info["solver"] = options_to_json(opts);
  info["normalize"] = get_or(config, "normalize", true);
  info["densify"] = densify;
  info["smooth"] = get_or(config, "smooth", false);
  std::vector<std::string> input_names;
  for (const auto& p : inputs) input_names.push_back(p.string());
  info["inputs"] = input_names;
  std::vector<std::string> hashes;
  char buf[17];
  for (const auto& f : seq.frames) {
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(content_hash(f)));
    hashes.push_back(buf);
  }
  info["input_frame_hashes"] = hashes;
  info["landmarks"] = landmarks.vertices;
  out.files = export_results(config.at("out").get<std::string>(), out.result, out.rates, seq.topology->faces(), info);
  return out;
}

std::vector<RateField> run_analyze(const nlohmann::json& config) {
  if (!config.contains("run")) throw Error(ErrorCode::ConfigError, "missing 'run'");
  const fs::path dir = config.at("run").get<std::string>();
  for (const char* name : {"manifest.json", "positions.bin", "topology.obj", "velocities.csv", "lambdas.csv"})
    if (!fs::exists(dir / name)) throw Error(ErrorCode::IoError, "missing " + (dir / name).string());
  std::ifstream mf(dir / "manifest.json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, (dir / "manifest.json").string() + ": " + e.what());
  }
  int dim = 3;
  const auto positions = read_positions_blob(dir / "positions.bin", &dim);
  const TriMesh topo_mesh = read_obj(dir / "topology.obj");
  const auto velocities = read_velocities_csv(dir / "velocities.csv");
  const auto lambdas = read_lambdas_csv(dir / "lambdas.csv");
  const auto times = manifest.at("times").get<std::vector<double>>();
  const auto topology = std::make_shared<const Topology>(topo_mesh.faces, static_cast<int>(topo_mesh.vertices.rows()));
  if (velocities.size() != lambdas.size() || positions.size() < velocities.size())
    throw Error(ErrorCode::ShapeMismatch, "run files disagree on the number of steps");

  ModelSpec spec = manifest.contains("model") ? model_from_json(manifest.at("model")) : ModelSpec{};
  spec.A2 = spec.B2 = 0.0;
  std::vector<RateField> rates;
  std::vector<std::vector<FaceFrame>> frames;
  for (std::size_t n = 0; n < velocities.size(); ++n) {
    const StepGeometry geo = make_step_geometry(topology, positions[n], times[n + 1] - times[n], dim == 2, spec);
    StepTargets none;
    none.normal = Eigen::VectorXd::Zero(topology->n_faces());
    none.boundary = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(geo.boundary.size()));
    none.landmark = Points(0, 3);
    const StepObjective obj(geo, spec, none);
    rates.push_back(eigen_rates(obj.growth_strains(velocities[n], lambdas[n]), geo.frames));
    frames.push_back(geo.frames);
  }
  if (get_or(config, "smooth", false)) {
    SolveResult shim;
    shim.positions = positions;
    smooth_rates(rates, shim, *topology, get_or(config, "d_bar_fraction", 0.10));
  }
  const fs::path out_dir = config.contains("out") ? fs::path(config.at("out").get<std::string>()) : dir;
  fs::create_directories(out_dir);
  for (std::size_t n = 0; n < rates.size(); ++n) {
    char name[32];
    std::snprintf(name, sizeof(name), "rates_%03zu.csv", n);
    write_rates_csv(out_dir / name, rates[n]);
  }
  const std::vector<double> step_times(times.begin(), times.begin() + static_cast<long>(rates.size()));
  write_summary_svg(out_dir / "summary.svg", step_times, rates, frames);
  write_growth_csv(out_dir / "growth.csv", step_times, rates, frames);
  return rates;
}

int run_pipeline(const nlohmann::json& config) {
  try {
    const std::string command = get_or<std::string>(config, "command", "");
    if (command == "synth") {
      const SynthSpec spec = synth_from_json(config.value("synth", nlohmann::json::object()));
      if (!config.contains("out")) throw Error(ErrorCode::ConfigError, "missing 'out'");
      const MeshSequence seq = generate(spec);
      save_sequence(config.at("out").get<std::string>(), seq, {{"synth", synth_to_json(spec)}});
      std::cout << "wrote " << seq.n_frames() << " frames (" << seq.n_faces() << " faces) to "
                << config.at("out").get<std::string>() << '\n';
      return 0;
    }
    if (command == "solve") {
      const RunOutput out = run_solve(config);
      if (!out.result.ok()) {
        std::cerr << "error: step " << out.result.failed_step << ": " << out.result.error << '\n';
        return 3;
      }
      double l3 = 0.0;
      for (const auto& l : out.result.lambdas) l3 += l[2];
      std::cout << "solved " << out.result.n_steps() << " steps; mean lambda3 = "
                << (out.result.n_steps() ? l3 / out.result.n_steps() : 0.0) << '\n';
      return 0;
    }
    if (command == "analyze") {
      const auto rates = run_analyze(config);
      std::cout << "analyzed " << rates.size() << " steps\n";
      return 0;
    }
    if (command == "check") {
      const MeshSequence seq = load_input(input_paths(config));
      bool all = true;
      for (const auto& c : run_invariant_checks(seq)) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (tol " << c.tolerance << ")\n";
        all = all && c.pass;
      }
      return all ? 0 : 4;
    }
    throw Error(ErrorCode::ConfigError, "unknown command '" + command + "'");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_pipeline(const fs::path& config_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: IoError: cannot open config " << config_path.string() << '\n';
    return 2;
  }
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: ConfigError: " << config_path.string() << ": " << e.what() << '\n';
    return 2;
  }
  return run_pipeline(config);
}

}  // namespace qcflow
