// gsmfield: fit Gaussian surface models to point clouds and evaluate
// distance, gradient, and collision-probability fields over 2D slices.
//
// Exit codes: 0 ok, 2 parse/usage, 3 numeric failure, 4 empty or invalid
// model. Flags override GSM_FIELD_* environment variables, which override
// the built-in defaults shown by --help.

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Geometry>

#include "gsm/bench.hpp"
#include "gsm/field.hpp"
#include "gsm/io.hpp"
#include "gsm/metrics.hpp"
#include "gsm/surface_model.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitModel = 4;

std::vector<double> parse_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, sep)) {
    if (token.empty()) continue;
    std::size_t used = 0;
    out.push_back(std::stod(token, &used));
  }
  return out;
}

// "ax ay az yaw pitch roll": semi-axes in meters, z-y-x Euler angles in
// degrees.
gsm::Ellipsoid parse_robot(const std::string& spec) {
  std::vector<double> v;
  std::stringstream ss(spec);
  double x = 0.0;
  while (ss >> x) v.push_back(x);
  if (v.size() != 6) {
    throw gsm::ParseError("--robot expects 'ax ay az yaw pitch roll'", 1);
  }
  if (v[0] <= 0.0 || v[1] <= 0.0 || v[2] <= 0.0) {
    throw gsm::ParseError("robot semi-axes must be positive", 1);
  }
  const double deg = std::numbers::pi / 180.0;
  const Eigen::AngleAxisd yaw(v[3] * deg, Eigen::Vector3d::UnitZ());
  const Eigen::AngleAxisd pitch(v[4] * deg, Eigen::Vector3d::UnitY());
  const Eigen::AngleAxisd roll(v[5] * deg, Eigen::Vector3d::UnitX());
  const Eigen::Matrix3d rot = (yaw * pitch * roll).toRotationMatrix();
  const Eigen::Vector3d inv_sq(1.0 / (v[0] * v[0]), 1.0 / (v[1] * v[1]),
                               1.0 / (v[2] * v[2]));
  const Eigen::Matrix3d shape = rot * inv_sq.asDiagonal() * rot.transpose();
  return gsm::Ellipsoid(Eigen::Vector3d::Zero(), shape);
}

// 13 comma-separated numbers:
// ox,oy,oz,ux,uy,uz,vx,vy,vz,extent_u,extent_v,res_u,res_v
gsm::field::SliceSpec parse_slice(const std::string& spec) {
  const std::vector<double> v = parse_numbers(spec, ',');
  if (v.size() != 13) {
    throw gsm::ParseError(
        "--slice expects ox,oy,oz,ux,uy,uz,vx,vy,vz,eu,ev,ru,rv", 1);
  }
  return gsm::field::make_slice(
      {v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, v[9], v[10],
      static_cast<int>(v[11]), static_cast<int>(v[12]));
}

int run(int argc, char** argv) {
  CLI::App app{"Gaussian surface model distance, gradient, and collision "
               "probability fields"};
  app.require_subcommand(1);

  // fit ---------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "Fit a GMM to a point cloud");
  std::string fit_cloud, fit_out;
  int fit_components = 8;
  std::uint64_t fit_seed = 0;
  double fit_level = 3.0;
  fit->add_option("--cloud", fit_cloud, "Input point cloud (xyz or ascii ply)")
      ->required();
  fit->add_option("--components", fit_components, "Component count")
      ->capture_default_str();
  fit->add_option("--seed", fit_seed, "RNG seed")->capture_default_str();
  fit->add_option("--out", fit_out, "Output model file")->required();
  fit->add_option("--level", fit_level, "Isocontour level for realization")
      ->envname("GSM_FIELD_LEVEL")
      ->capture_default_str();

  // shared field/prob options ------------------------------------------
  std::string model_path, robot_spec = "0.15 0.15 0.07 45 0 0";
  std::string slice_spec = "0,0,0,1,0,0,0,1,0,4,4,200,200";
  std::string out_prefix;

  auto add_field_common = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_path, "Surface model file")->required();
    cmd->add_option("--robot", robot_spec,
                    "Robot 'ax ay az yaw pitch roll' (m, deg)")
        ->envname("GSM_FIELD_ROBOT")
        ->capture_default_str();
    cmd->add_option("--slice", slice_spec,
                    "Slice ox,oy,oz,ux,uy,uz,vx,vy,vz,eu,ev,ru,rv")
        ->envname("GSM_FIELD_SLICE")
        ->capture_default_str();
    cmd->add_option("--out", out_prefix, "Output prefix")->required();
  };

  auto* field_cmd =
      app.add_subcommand("field", "Distance and gradient field over a slice");
  add_field_common(field_cmd);
  std::string prune = "on";
  field_cmd->add_option("--prune", prune, "K-NN pruning: on (exact) or off")
      ->envname("GSM_FIELD_PRUNE")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));

  auto* prob_cmd =
      app.add_subcommand("prob", "Collision probability field over a slice");
  add_field_common(prob_cmd);
  double sigma_sq = 0.01;
  int blend_k = 9;
  std::string blend = "on";
  prob_cmd->add_option("--sigma", sigma_sq, "Center covariance sigma^2 (m^2)")
      ->envname("GSM_FIELD_SIGMA")
      ->capture_default_str();
  prob_cmd->add_option("--K", blend_k, "Nearest components to blend")
      ->envname("GSM_FIELD_K")
      ->capture_default_str();
  prob_cmd->add_option("--blend", blend, "Blend over K components: on or off")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));

  // metrics -------------------------------------------------------------
  auto* metrics_cmd =
      app.add_subcommand("metrics", "RMSE and cosine error between fields");
  std::string pred_prefix, truth_prefix;
  metrics_cmd->add_option("--pred", pred_prefix, "Predicted field prefix")
      ->required();
  metrics_cmd->add_option("--truth", truth_prefix, "Ground-truth field prefix")
      ->required();

  // bench ----------------------------------------------------------------
  auto* bench_cmd =
      app.add_subcommand("bench", "Single-thread per-pair timing benchmark");
  int bench_pairs = 100000;
  std::uint64_t bench_seed = 0;
  std::string device_label = "local";
  bench_cmd->add_option("--pairs", bench_pairs, "Number of random pairs")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed, "RNG seed")
      ->capture_default_str();
  bench_cmd->add_option("--device-label", device_label, "Label for the row")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  if (*fit) {
    const Eigen::MatrixXd cloud = gsm::load_point_cloud(fit_cloud);
    gsm::FitReport report;
    const gsm::SurfaceModel model =
        gsm::fit_gmm(cloud, fit_components, fit_seed, 200, 1e-5, fit_level,
                     &report);
    gsm::save_model(model, fit_out);
    std::cout << "components=" << model.size()
              << " loglik=" << report.log_likelihood
              << " iterations=" << report.iterations << '\n';
  } else if (*field_cmd) {
    const gsm::SurfaceModel model = gsm::load_model(model_path);
    const gsm::Ellipsoid robot = parse_robot(robot_spec);
    const gsm::field::SliceSpec slice = parse_slice(slice_spec);
    const int prune_k = prune == "on" ? model.size() : 0;
    const gsm::field::FieldGrid grid =
        gsm::field::distance_field(robot, model, slice, prune_k);
    gsm::field::write_distance_csv(grid, out_prefix + ".dist.csv");
    gsm::field::write_gradient_csv(grid, out_prefix + ".grad.csv");
    gsm::field::write_distance_ppm(grid, out_prefix + ".dist.ppm");
    std::cout << "cells=" << grid.cells() << " out=" << out_prefix << '\n';
  } else if (*prob_cmd) {
    const gsm::SurfaceModel model = gsm::load_model(model_path);
    const gsm::Ellipsoid robot = parse_robot(robot_spec);
    const gsm::field::SliceSpec slice = parse_slice(slice_spec);
    const gsm::field::FieldGrid grid = gsm::field::probability_field(
        robot, model, slice, sigma_sq, blend_k, blend == "on");
    gsm::field::write_probability_csv(grid, out_prefix + ".prob.csv");
    gsm::field::write_probability_ppm(grid, out_prefix + ".prob.ppm");
    gsm::field::write_probability_isocontour_csv(grid, 0.1,
                                                 out_prefix + ".iso10.csv");
    std::cout << "cells=" << grid.cells() << " out=" << out_prefix << '\n';
  } else if (*metrics_cmd) {
    const gsm::field::FieldGrid pred = gsm::field::read_field_csv(pred_prefix);
    const gsm::field::FieldGrid truth =
        gsm::field::read_field_csv(truth_prefix);
    const gsm::field::MetricsReport report =
        gsm::field::compute_metrics(pred, truth);
    std::cout << "rmse,ces,cells\n"
              << report.rmse << ',' << report.ces << ',' << report.cells
              << '\n';
  } else if (*bench_cmd) {
    const gsm::bench::BenchResult result =
        gsm::bench::run_bench(bench_pairs, bench_seed);
    std::cout << gsm::bench::bench_csv_header() << '\n'
              << gsm::bench::bench_csv_row(device_label, result) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gsm::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const gsm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const gsm::ShapeMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const gsm::InvalidK& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const gsm::EmptyModel& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitModel;
  } catch (const gsm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
