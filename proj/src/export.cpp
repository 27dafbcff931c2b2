#include "qcflow/export.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qcflow/error.hpp"
#include "qcflow/mesh_io.hpp"

namespace qcflow {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::vector<std::vector<double>> read_numeric_rows(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    double x;
    while (ls >> x) row.push_back(x);
    rows.push_back(std::move(row));
  }
  return rows;
}

void check(std::ofstream& out, const fs::path& path) {
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::string step_name(const char* prefix, int n, const char* ext) {
  std::ostringstream s;
  s << prefix << std::setw(3) << std::setfill('0') << n << ext;
  return s.str();
}

}  // namespace

void write_rates_csv(const fs::path& path, const RateField& r) {
  auto out = open_out(path);
  out << "face,D,S,D_norm,S_norm,axis_x,axis_y,axis_z\n";
  for (int f = 0; f < r.size(); ++f)
    out << f << ',' << r.D(f) << ',' << r.S(f) << ',' << r.D_norm(f) << ',' << r.S_norm(f) << ',' << r.axis[f](0)
        << ',' << r.axis[f](1) << ',' << r.axis[f](2) << '\n';
  check(out, path);
}

RateField read_rates_csv(const fs::path& path) {
  const auto rows = read_numeric_rows(path);
  RateField r;
  const auto m = static_cast<Eigen::Index>(rows.size());
  r.D.resize(m);
  r.S.resize(m);
  r.D_norm.resize(m);
  r.S_norm.resize(m);
  r.axis.resize(m);
  for (Eigen::Index f = 0; f < m; ++f) {
    if (rows[f].size() != 8) throw Error(ErrorCode::IoError, path.string() + ": malformed row");
    r.D(f) = rows[f][1];
    r.S(f) = rows[f][2];
    r.D_norm(f) = rows[f][3];
    r.S_norm(f) = rows[f][4];
    r.axis[f] = Vec3(rows[f][5], rows[f][6], rows[f][7]);
  }
  return r;
}

void write_vtk(const fs::path& path, const Points& vertices, const Faces& faces, const RateField& r) {
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\nqcflow rates\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << vertices.rows() << " double\n";
  for (Eigen::Index v = 0; v < vertices.rows(); ++v)
    out << vertices(v, 0) << ' ' << vertices(v, 1) << ' ' << vertices(v, 2) << '\n';
  out << "POLYGONS " << faces.rows() << ' ' << 4 * faces.rows() << '\n';
  for (Eigen::Index f = 0; f < faces.rows(); ++f)
    out << "3 " << faces(f, 0) << ' ' << faces(f, 1) << ' ' << faces(f, 2) << '\n';
  out << "CELL_DATA " << faces.rows() << '\n';
  out << "SCALARS D_norm double 1\nLOOKUP_TABLE default\n";
  for (int f = 0; f < r.size(); ++f) out << r.D_norm(f) << '\n';
  out << "SCALARS S_norm double 1\nLOOKUP_TABLE default\n";
  for (int f = 0; f < r.size(); ++f) out << r.S_norm(f) << '\n';
  out << "VECTORS axis double\n";
  for (int f = 0; f < r.size(); ++f) out << r.axis[f](0) << ' ' << r.axis[f](1) << ' ' << r.axis[f](2) << '\n';
  check(out, path);
}

void write_summary_svg(const fs::path& path, const std::vector<double>& times, const std::vector<RateField>& rates,
                       const std::vector<std::vector<FaceFrame>>& frames) {
  const int steps = static_cast<int>(rates.size());
  struct Series {
    const char* label;
    const char* color;
    std::vector<double> y;
  };
  std::vector<Series> d_series{{"max D", "#7b3294", {}}, {"mean D", "#c2a5cf", {}}};
  std::vector<Series> s_series{{"max S", "#e66101", {}}, {"mean S", "#fdb863", {}}};
  for (int n = 0; n < steps; ++n) {
    d_series[0].y.push_back(rates[n].D.size() ? rates[n].D.maxCoeff() : 0.0);
    d_series[1].y.push_back(area_mean(rates[n].D, frames[n]));
    s_series[0].y.push_back(rates[n].S.size() ? rates[n].S.maxCoeff() : 0.0);
    s_series[1].y.push_back(area_mean(rates[n].S, frames[n]));
  }
  const double t0 = times.empty() ? 0.0 : times.front();
  const double t1 = times.size() > 1 ? times.back() : 1.0;

  auto out = open_out(path);
  out << std::setprecision(6);
  const int W = 720, H = 320, pad = 50, panel_w = (W - 3 * pad) / 2, panel_h = H - 2 * pad;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto panel = [&](int x0, const char* title, const std::vector<Series>& series) {
    double lo = 0.0, hi = 0.0;
    for (const auto& s : series)
      for (double v : s.y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (hi - lo <= 0) hi = lo + 1.0;
    auto px = [&](double t) { return x0 + panel_w * (t - t0) / (t1 - t0); };
    auto py = [&](double v) { return pad + panel_h * (1.0 - (v - lo) / (hi - lo)); };
    out << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"" << pad - 20 << "\" text-anchor=\"middle\">" << title << "</text>\n";
    out << "<rect x=\"" << x0 << "\" y=\"" << pad << "\" width=\"" << panel_w << "\" height=\"" << panel_h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << py(0.0) << "\" x2=\"" << x0 + panel_w << "\" y2=\"" << py(0.0)
        << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    out << "<text x=\"" << x0 - 4 << "\" y=\"" << py(hi) + 4 << "\" text-anchor=\"end\">" << hi << "</text>\n";
    out << "<text x=\"" << x0 - 4 << "\" y=\"" << py(lo) + 4 << "\" text-anchor=\"end\">" << lo << "</text>\n";
    out << "<text x=\"" << x0 << "\" y=\"" << pad + panel_h + 15 << "\">" << t0 << "</text>\n";
    out << "<text x=\"" << x0 + panel_w << "\" y=\"" << pad + panel_h + 15 << "\" text-anchor=\"end\">" << t1 << "</text>\n";
    out << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"" << pad + panel_h + 30 << "\" text-anchor=\"middle\">normalized time</text>\n";
    int legend = 0;
    for (const auto& s : series) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
      for (int n = 0; n < steps; ++n) out << px(times[n]) << ',' << py(s.y[n]) << ' ';
      out << "\"/>\n";
      out << "<text x=\"" << x0 + 8 << "\" y=\"" << pad + 14 + 14 * legend++ << "\" fill=\"" << s.color << "\">"
          << s.label << "</text>\n";
    }
  };
  panel(pad, "dilation rate", d_series);
  panel(2 * pad + panel_w, "shear rate", s_series);
  out << "</svg>\n";
  check(out, path);
}

void write_velocities_csv(const fs::path& path, const std::vector<Points>& velocities) {
  auto out = open_out(path);
  out << "step,vertex,vx,vy,vz\n";
  for (std::size_t n = 0; n < velocities.size(); ++n)
    for (Eigen::Index v = 0; v < velocities[n].rows(); ++v)
      out << n << ',' << v << ',' << velocities[n](v, 0) << ',' << velocities[n](v, 1) << ',' << velocities[n](v, 2)
          << '\n';
  check(out, path);
}

std::vector<Points> read_velocities_csv(const fs::path& path) {
  const auto rows = read_numeric_rows(path);
  std::vector<Points> out;
  std::vector<std::vector<std::array<double, 3>>> by_step;
  for (const auto& r : rows) {
    if (r.size() != 5) throw Error(ErrorCode::IoError, path.string() + ": malformed row");
    const auto step = static_cast<std::size_t>(r[0]), v = static_cast<std::size_t>(r[1]);
    if (by_step.size() <= step) by_step.resize(step + 1);
    if (by_step[step].size() <= v) by_step[step].resize(v + 1);
    by_step[step][v] = {r[2], r[3], r[4]};
  }
  for (const auto& s : by_step) {
    Points p(static_cast<Eigen::Index>(s.size()), 3);
    for (std::size_t v = 0; v < s.size(); ++v) p.row(v) << s[v][0], s[v][1], s[v][2];
    out.push_back(std::move(p));
  }
  return out;
}

void write_lambdas_csv(const fs::path& path, const std::vector<std::array<double, 3>>& lambdas) {
  auto out = open_out(path);
  out << "step,lambda1,lambda2,lambda3\n";
  for (std::size_t n = 0; n < lambdas.size(); ++n)
    out << n << ',' << lambdas[n][0] << ',' << lambdas[n][1] << ',' << lambdas[n][2] << '\n';
  check(out, path);
}

std::vector<std::array<double, 3>> read_lambdas_csv(const fs::path& path) {
  std::vector<std::array<double, 3>> out;
  for (const auto& r : read_numeric_rows(path)) {
    if (r.size() != 4) throw Error(ErrorCode::IoError, path.string() + ": malformed row");
    out.push_back({r[1], r[2], r[3]});
  }
  return out;
}

void write_costs_csv(const fs::path& path, const std::vector<CostBreakdown>& costs) {
  auto out = open_out(path);
  out << "step,viscous,grad,bend,normal,boundary,landmark,lambda_reg,total\n";
  for (std::size_t n = 0; n < costs.size(); ++n) {
    const auto& c = costs[n];
    out << n << ',' << c.viscous << ',' << c.grad << ',' << c.bend << ',' << c.normal << ',' << c.boundary << ','
        << c.landmark << ',' << c.lambda_reg << ',' << c.total() << '\n';
  }
  check(out, path);
}

void write_growth_csv(const fs::path& path, const std::vector<double>& times, const std::vector<RateField>& rates,
                      const std::vector<std::vector<FaceFrame>>& frames) {
  auto out = open_out(path);
  out << "step,time,eta,mean_D,mean_S,max_D,max_S\n";
  for (std::size_t n = 0; n < rates.size(); ++n) {
    const auto& r = rates[n];
    out << n << ',' << times[n] << ',' << growth_cost(r, frames[n]) << ',' << area_mean(r.D, frames[n]) << ','
        << area_mean(r.S, frames[n]) << ',' << (r.size() ? r.D.maxCoeff() : 0.0) << ','
        << (r.size() ? r.S.maxCoeff() : 0.0) << '\n';
  }
  check(out, path);
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::vector<std::string> export_results(const fs::path& out_dir, const SolveResult& result,
                                        const std::vector<RateField>& rates, const Faces& faces,
                                        const nlohmann::json& run_info) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::string> files;
  std::vector<std::vector<FaceFrame>> frames;
  for (int n = 0; n < result.n_steps(); ++n) frames.push_back(face_frames(result.positions[n], faces));

  for (int n = 0; n < static_cast<int>(rates.size()); ++n) {
    const std::string csv = step_name("rates_", n, ".csv"), vtk = step_name("mesh_", n, ".vtk");
    write_rates_csv(out_dir / csv, rates[n]);
    write_vtk(out_dir / vtk, result.positions[n], faces, rates[n]);
    files.push_back(csv);
    files.push_back(vtk);
  }
  const std::vector<double> step_times(result.times.begin(), result.times.begin() + result.n_steps());
  write_summary_svg(out_dir / "summary.svg", step_times, rates, frames);
  write_growth_csv(out_dir / "growth.csv", step_times, rates, frames);
  write_velocities_csv(out_dir / "velocities.csv", result.velocities);
  write_lambdas_csv(out_dir / "lambdas.csv", result.lambdas);
  write_costs_csv(out_dir / "costs.csv", result.costs);
  write_positions_blob(out_dir / "positions.bin", result.positions, result.planar ? 2 : 3);
  write_obj(out_dir / "topology.obj", TriMesh{result.positions.front(), faces});
  for (const char* name : {"summary.svg", "growth.csv", "velocities.csv", "lambdas.csv", "costs.csv", "positions.bin",
                           "topology.obj"})
    files.push_back(name);

  nlohmann::json manifest = run_info;
  manifest["n_steps"] = result.n_steps();
  manifest["planar"] = result.planar;
  manifest["failed_step"] = result.failed_step;
  if (!result.ok()) manifest["error"] = result.error;
  manifest["times"] = std::vector<double>(result.times.begin(), result.times.begin() + result.positions.size());
  manifest["iterations"] = result.iterations;
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& f : files) hashes[f] = file_hash(out_dir / f);
  manifest["files"] = hashes;
  auto out = open_out(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  check(out, out_dir / "manifest.json");
  files.push_back("manifest.json");
  return files;
}

}  // namespace qcflow
