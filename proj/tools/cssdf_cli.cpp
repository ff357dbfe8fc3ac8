#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cssdf/bench.hpp"
#include "cssdf/config_field.hpp"
#include "cssdf/cspace_grid.hpp"
#include "cssdf/errors.hpp"
#include "cssdf/external_dataset.hpp"
#include "cssdf/geometry_oracle.hpp"
#include "cssdf/safe_mpc.hpp"
#include "cssdf/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace cssdf;

namespace {

struct Common {
  std::uint64_t seed = 1;
  int workers = default_workers();
  std::string out = "out";
  int verbose = 0;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return 3;
    case ErrorKind::kSchema: return 4;
    case ErrorKind::kVersionMismatch: return 5;
    case ErrorKind::kDivergence: return 6;
    case ErrorKind::kPlanningFailed: return 7;
    case ErrorKind::kOptimization: return 8;
    default: return 2;
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir);
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw InvalidInputError(std::string("missing --") + what);
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " file not found: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

Configuration to_config(const std::vector<double>& v, const RobotModel& model, const char* what) {
  if (static_cast<int>(v.size()) != model.dof())
    throw InvalidInputError(std::string("--") + what + " needs " + std::to_string(model.dof()) + " values");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string fmt(const Eigen::VectorXd& v) {
  std::ostringstream s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? " " : "") << v[i];
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Configuration-space signed distance fields: datasets, training, planning and control"};
  app.set_config("--config", "", "TOML configuration file (flags override it)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  Common common;
  app.add_option("--seed", common.seed, "Random seed for every stage")->capture_default_str();
  app.add_option("--workers", common.workers, "Worker threads (default: CSSDF_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_flag("-v,--verbose", common.verbose, "More progress output");

  // gen-self
  auto* gen_self = app.add_subcommand("gen-self", "Self-collision dataset");
  std::string robot_path;
  SelfDatasetOptions self_opts;
  bool no_balance = false, no_mine = false;
  gen_self->add_option("--robot", robot_path, "Robot JSON file")->required();
  gen_self->add_option("--n", self_opts.base_samples, "Uniform base samples")->capture_default_str();
  gen_self->add_option("--tau", self_opts.balancing.tau, "Class-ratio bound")->capture_default_str();
  gen_self->add_option("--sigma", self_opts.balancing.sigma, "Perturbation std (rad)")->capture_default_str();
  gen_self->add_option("--tol", self_opts.tol, "Bisection tolerance (rad)")->capture_default_str();
  gen_self->add_option("--target", self_opts.target_size, "Final size after shuffling (0 = all)");
  gen_self->add_flag("--no-balance", no_balance, "Skip class balancing");
  gen_self->add_flag("--no-mine", no_mine, "Skip boundary mining");

  // gen-external
  auto* gen_ext = app.add_subcommand("gen-external", "Per-point external dataset");
  std::string scene_path;
  ExternalOptions ext_opts;
  std::size_t random_points = 0;
  double cloud_spacing = 0.1;
  gen_ext->add_option("--robot", robot_path, "Robot JSON file")->required();
  gen_ext->add_option("--scene", scene_path, "Scene JSON file providing obstacle points");
  gen_ext->add_option("--points", random_points, "Random workspace points instead of a scene");
  gen_ext->add_option("--spacing", cloud_spacing, "Surface sampling of scene primitives (m)")->capture_default_str();
  gen_ext->add_option("--dx", ext_opts.dx, "Voxel edge (m, 0 = smallest sphere radius)");
  gen_ext->add_option("--map-configs", ext_opts.map_configs, "Configurations in the voxel map")->capture_default_str();
  gen_ext->add_option("--per-point", ext_opts.samples_per_point, "Samples per point")->capture_default_str();
  gen_ext->add_option("--tol", ext_opts.tol, "Bisection tolerance (rad)")->capture_default_str();
  std::size_t self_samples = 0;
  gen_ext->add_option("--self-samples", self_samples,
                      "Compose with self-collision distance from this many mined samples (0 = off)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the field network");
  std::string data_path;
  TrainConfig train_cfg;
  FieldNetConfig net_cfg;
  train_cmd->add_option("--robot", robot_path, "Robot JSON file")->required();
  train_cmd->add_option("--data", data_path, "CSD1 dataset")->required();
  std::string mix_path;
  double self_fraction = 0.5;
  train_cmd->add_option("--mix-with", mix_path, "Second CSD1 dataset (external samples) mixed into --data");
  train_cmd->add_option("--self-fraction", self_fraction, "Share of --data samples when mixing")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--epochs", train_cfg.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", train_cfg.batch_size, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", train_cfg.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--width", net_cfg.width, "Hidden width")->capture_default_str();
  train_cmd->add_option("--layers", net_cfg.hidden_layers, "Hidden layers")->capture_default_str();
  train_cmd->add_option("--w-dist", train_cfg.weights.dist, "Distance loss weight")->capture_default_str();
  train_cmd->add_option("--w-eik", train_cfg.weights.eikonal, "Eikonal loss weight")->capture_default_str();
  train_cmd->add_option("--w-dir", train_cfg.weights.direction, "Direction loss weight")->capture_default_str();
  train_cmd->add_flag("--fd-gradients", train_cfg.finite_difference_gradients,
                      "Finite-difference input gradients in the loss");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model or the grid oracle");
  std::string model_path;
  bool use_oracle = false;
  int grid_cells = 201;
  eval_cmd->add_option("--model", model_path, "CSN1 checkpoint");
  eval_cmd->add_option("--data", data_path, "CSD1 dataset (default: oracle-labelled test set)");
  eval_cmd->add_option("--robot", robot_path, "Robot JSON file (oracle mode and default test set)");
  eval_cmd->add_flag("--oracle", use_oracle, "Predict with the self-collision grid oracle");
  eval_cmd->add_option("--cells", grid_cells, "Oracle grid cells per axis")->capture_default_str();

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Sampling initializer plus safe trajectory optimization");
  std::vector<double> start_v, goal_v;
  PlanningOptions plan_opts;
  plan_cmd->add_option("--robot", robot_path, "Robot JSON file")->required();
  plan_cmd->add_option("--scene", scene_path, "Scene JSON file (default: empty)");
  plan_cmd->add_option("--model", model_path, "CSN1 checkpoint (default: grid oracle field)");
  plan_cmd->add_option("--start", start_v, "Start configuration")->required()->delimiter(',');
  plan_cmd->add_option("--goal", goal_v, "Goal configuration")->required()->delimiter(',');
  plan_cmd->add_option("--segments", plan_opts.segments, "Spline segments")->capture_default_str();
  plan_cmd->add_option("--lambda-s", plan_opts.weights.smooth, "Smoothness weight")->capture_default_str();
  plan_cmd->add_option("--lambda-phi", plan_opts.weights.safety, "Safety weight")->capture_default_str();
  plan_cmd->add_option("--d0", plan_opts.weights.penalty.d0, "Penalty offset (rad)")->capture_default_str();
  plan_cmd->add_option("--alpha", plan_opts.weights.penalty.alpha, "Penalty rate (1/rad)")->capture_default_str();
  plan_cmd->add_option("--cells", grid_cells, "Oracle grid cells per axis")->capture_default_str();
  plan_cmd->add_option("--spacing", cloud_spacing, "Point-cloud spacing for the network field (m)");

  // mpc
  auto* mpc_cmd = app.add_subcommand("mpc", "Closed-loop safe MPC simulation");
  mpc_cmd->set_help_flag("--help", "Print this help message and exit");
  int horizon = 10;
  double dt = 0.01, gamma = 0.05, duration = 5.0, u_max = 1.0;
  bool barrier = false;
  mpc_cmd->add_option("--robot", robot_path, "Robot JSON file")->required();
  mpc_cmd->add_option("--scene", scene_path, "Scene JSON file (default: empty)");
  mpc_cmd->add_option("--model", model_path, "CSN1 checkpoint (default: grid oracle field)");
  mpc_cmd->add_option("--start", start_v, "Start configuration")->required()->delimiter(',');
  mpc_cmd->add_option("--goal", goal_v, "Goal configuration")->required()->delimiter(',');
  mpc_cmd->add_option("--h", horizon, "Horizon")->capture_default_str()->check(CLI::PositiveNumber);
  mpc_cmd->add_option("--dt", dt, "Step (s)")->capture_default_str();
  mpc_cmd->add_option("--gamma", gamma, "Safety margin (rad)")->capture_default_str();
  mpc_cmd->add_option("--duration", duration, "Simulated time (s)")->capture_default_str();
  mpc_cmd->add_option("--u-max", u_max, "Input bound (rad/s)")->capture_default_str();
  mpc_cmd->add_option("--cells", grid_cells, "Oracle grid cells per axis")->capture_default_str();
  mpc_cmd->add_option("--spacing", cloud_spacing, "Point-cloud spacing for the network field (m)");
  mpc_cmd->add_flag("--barrier-form", barrier, "Use the barrier-style safety row");

  // bench-latency
  auto* bench_cmd = app.add_subcommand("bench-latency", "Batched inference latency per scale");
  int max_exp = 5, repeats = 5;
  bench_cmd->add_option("--model", model_path, "CSN1 checkpoint")->required();
  bench_cmd->add_option("--max-exp", max_exp, "Largest scale exponent")->capture_default_str();
  bench_cmd->add_option("--repeats", repeats, "Repeats per scale")->capture_default_str();

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Dataset and loss ablation matrix");
  AblationOptions abl;
  ablate_cmd->add_option("--robot", robot_path, "Robot JSON file")->required();
  ablate_cmd->add_option("--samples", abl.samples, "Samples per variant")->capture_default_str();
  ablate_cmd->add_option("--epochs", abl.epochs, "Epoch budget")->capture_default_str();
  ablate_cmd->add_option("--width", abl.net.width, "Hidden width")->capture_default_str();
  ablate_cmd->add_option("--layers", abl.net.hidden_layers, "Hidden layers")->capture_default_str();

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "SVG plot from a CSV produced by another command");
  std::string plot_kind, input_csv;
  plot_cmd->add_option("--kind", plot_kind, "loss | latency | episode")
      ->required()
      ->check(CLI::IsMember({"loss", "latency", "episode"}));
  plot_cmd->add_option("--input", input_csv, "CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ensure_dir(common.out);
    write_text(common.out + "/config.toml", app.config_to_str(true, false));
    auto log = [&](const std::string& msg) {
      if (common.verbose) std::cerr << msg << '\n';
    };

    if (*gen_self) {
      require_file(robot_path, "robot");
      const RobotModel model = load_robot(robot_path);
      self_opts.seed = common.seed;
      self_opts.balance = !no_balance;
      self_opts.mine = !no_mine;
      DatasetReport rep;
      const Dataset data = build_self_dataset(model, self_opts, &rep);
      data.save(common.out + "/dataset.csd");
      std::ostringstream s;
      s << "base," << rep.base << "\nperturbed," << rep.perturbed << "\nboundary," << rep.boundary << "\ntotal,"
        << rep.total << "\nbsr," << rep.bsr << "\nclass_ratio," << rep.class_ratio << '\n';
      write_text(common.out + "/report.txt", s.str());
      std::cout << s.str();
    } else if (*gen_ext) {
      require_file(robot_path, "robot");
      const RobotModel model = load_robot(robot_path);
      std::vector<Point> points;
      if (!scene_path.empty()) {
        require_file(scene_path, "scene");
        points = load_scene(scene_path).point_cloud(cloud_spacing);
      } else if (random_points > 0) {
        points = make_self_collision_points(model, model.workspace_bounds(1.0), random_points, common.seed, 0.0);
      }
      if (points.empty())
        throw InvalidInputError(
            "gen-external needs at least one obstacle point (--scene or --points); use gen-self for "
            "self-collision data");
      ext_opts.seed = common.seed;
      ext_opts.workers = common.workers;
      std::unique_ptr<SelfDistanceModel> self_model;
      if (self_samples > 0)
        self_model = std::make_unique<SelfDistanceModel>(
            model, sample_base_configs(model, self_samples, common.seed + 11), true, ext_opts.tol, ext_opts.backend);
      ExternalReport rep;
      const Dataset data = build_external_dataset(model, points, ext_opts, self_model.get(), &rep);
      data.save(common.out + "/dataset.csd");
      std::ostringstream s;
      s << "points," << points.size() << "\nunreachable_points," << rep.unreachable << "\ntotal,"
        << data.size() << "\nbsr," << boundary_sample_ratio(data) << "\nclass_ratio," << class_ratio(data)
        << '\n';
      write_text(common.out + "/report.txt", s.str());
      std::cout << s.str();
    } else if (*train_cmd) {
      require_file(robot_path, "robot");
      require_file(data_path, "data");
      const RobotModel model = load_robot(robot_path);
      Dataset data = Dataset::load(data_path);
      if (!mix_path.empty()) {
        require_file(mix_path, "mixed dataset");
        data = mix_datasets(data, Dataset::load(mix_path), self_fraction, 0, common.seed);
      }
      net_cfg.dof = model.dof();
      net_cfg.point_dim = model.point_dim();
      if (data.dof != model.dof()) throw SchemaError("dataset dof does not match the robot");
      FieldModel field = FieldModel::for_robot(model, net_cfg, common.seed);
      train_cfg.seed = common.seed;
      log("training on " + std::to_string(data.size()) + " samples");
      const TrainHistory h = train(field, data, train_cfg);
      field.save(common.out + "/model.csn");
      h.save_csv(common.out + "/history.csv");
      std::ostringstream s;
      s << "epochs," << h.epochs.size() << "\ntrain_loss," << h.epochs.back().train_loss << "\nval_loss,"
        << h.epochs.back().val_loss << "\nzero_gradients," << h.zero_gradients << '\n';
      write_text(common.out + "/summary.txt", s.str());
      std::cout << s.str();
    } else if (*eval_cmd) {
      Dataset data;
      RobotModel model;
      if (!robot_path.empty()) {
        require_file(robot_path, "robot");
        model = load_robot(robot_path);
      }
      if (!data_path.empty()) {
        require_file(data_path, "data");
        data = Dataset::load(data_path);
      } else {
        if (robot_path.empty()) throw InvalidInputError("eval needs --data or --robot");
        AblationOptions o;
        o.seed = common.seed;
        o.workers = common.workers;
        o.grid_cells = grid_cells;
        data = oracle_test_set(model, o);
      }
      EvalReport rep;
      if (use_oracle) {
        if (robot_path.empty()) throw InvalidInputError("--oracle needs --robot");
        const CSpaceGrid grid = oracle_self_distance(model, default_grid_spec(model, grid_cells), common.workers);
        std::vector<double> v;
        std::vector<Eigen::VectorXd> g;
        for (const auto& s : data.samples) {
          Eigen::VectorXd gr;
          v.push_back(grid.interpolate(s.q, &gr));
          g.push_back(gr);
        }
        rep = evaluate_predictions(data, v, g);
      } else {
        require_file(model_path, "model");
        rep = evaluate(FieldModel::load(model_path), data);
      }
      write_text(common.out + "/report.txt", rep.to_text());
      std::cout << rep.to_text();
    } else if (*plan_cmd) {
      require_file(robot_path, "robot");
      const RobotModel model = load_robot(robot_path);
      Scene scene(model.point_dim(), {});
      if (!scene_path.empty()) {
        require_file(scene_path, "scene");
        scene = load_scene(scene_path);
      }
      const Configuration start = to_config(start_v, model, "start"), goal = to_config(goal_v, model, "goal");
      std::unique_ptr<ConfigField> field;
      FieldModel net;
      if (!model_path.empty()) {
        require_file(model_path, "model");
        net = FieldModel::load(model_path);
        field = std::make_unique<NetSceneField>(net, scene.point_cloud(cloud_spacing));
      } else {
        field = std::make_unique<GridField>(
            oracle_scene_distance(model, scene, default_grid_spec(model, grid_cells), common.workers));
      }
      plan_opts.rrt.seed = common.seed;
      const PlanningResult r = plan_trial(model, scene, field.get(), start, goal, plan_opts);
      save_trajectory_csv(r.optimized.traj, common.out + "/trajectory.csv");
      std::ostringstream s;
      s << "cr," << r.metrics.collision_rate << "\ntl," << r.metrics.length << "\nat_ms," << r.planning_ms
        << "\nsampling_tl," << r.sampling_length << "\niterations," << r.optimized.iterations << "\nconverged,"
        << r.optimized.converged << "\nfeasible," << r.optimized.feasible << "\nmax_violation,"
        << r.optimized.max_violation << "\nstart," << fmt(start) << "\ngoal," << fmt(goal) << "\nlambda_phi,"
        << plan_opts.weights.safety << "\nd0," << plan_opts.weights.penalty.d0 << "\nalpha,"
        << plan_opts.weights.penalty.alpha << '\n';
      write_text(common.out + "/report.txt", s.str());
      std::cout << s.str();
    } else if (*mpc_cmd) {
      require_file(robot_path, "robot");
      const RobotModel model = load_robot(robot_path);
      Scene scene(model.point_dim(), {});
      if (!scene_path.empty()) {
        require_file(scene_path, "scene");
        scene = load_scene(scene_path);
      }
      const Configuration start = to_config(start_v, model, "start"), goal = to_config(goal_v, model, "goal");
      MpcProblem problem = default_mpc_problem(model, horizon, u_max);
      problem.dt = dt;
      problem.gamma = gamma;
      problem.reference = {goal};
      problem.barrier_form = barrier;
      std::unique_ptr<OracleSceneField> oracle;
      std::unique_ptr<NetSceneField> netfield;
      FieldModel net;
      ConfigField* field = nullptr;
      std::function<void(const Scene&)> observe;
      if (!model_path.empty()) {
        require_file(model_path, "model");
        net = FieldModel::load(model_path);
        netfield = std::make_unique<NetSceneField>(net, std::vector<Point>{});
        observe = [&](const Scene& s) { netfield->set_points(s.point_cloud(cloud_spacing)); };
        field = netfield.get();
      } else {
        oracle = std::make_unique<OracleSceneField>(model, default_grid_spec(model, grid_cells), common.workers);
        observe = [&](const Scene& s) { oracle->update(s); };
        field = oracle.get();
      }
      MpcController controller(field, problem);
      const Episode ep = simulate(model, scene, controller, observe, start, goal, duration);
      ep.save_csv(common.out + "/episode.csv");
      const auto& m = ep.metrics;
      std::ostringstream s;
      s << "horizon," << horizon << "\ncr," << m.collision_rate << "\nmci," << m.max_control << "\ncf,"
        << m.control_frequency << "\ngoal_reached," << m.goal_reached << "\nfinal_error," << m.final_error
        << "\nsteps," << m.steps << "\nsolved," << m.solved << "\nfallbacks," << m.fallbacks
        << "\nmax_residual," << m.max_residual << '\n';
      write_text(common.out + "/summary.txt", s.str());
      std::cout << s.str();
    } else if (*bench_cmd) {
      require_file(model_path, "model");
      const FieldModel field = FieldModel::load(model_path);
      const auto rows = latency_bench(field, decade_scales(max_exp), repeats, common.seed);
      save_latency_csv(rows, common.out + "/latency.csv");
      for (const auto& r : rows) std::cout << r.scale << ',' << r.dist_ms << ',' << r.grad_ms << '\n';
    } else if (*ablate_cmd) {
      require_file(robot_path, "robot");
      const RobotModel model = load_robot(robot_path);
      abl.seed = common.seed;
      abl.workers = common.workers;
      const auto rows = ablation_run(model, default_ablation_variants(), abl);
      save_ablation_csv(rows, common.out + "/ablation.csv");
      std::ifstream in(common.out + "/ablation.csv");
      std::cout << in.rdbuf();
    } else if (*plot_cmd) {
      require_file(input_csv, "input");
      const CsvTable t = read_csv(input_csv);
      LinePlot plot;
      if (plot_kind == "loss") {
        plot.title = "Training loss";
        plot.x_label = "epoch";
        plot.y_label = "loss";
        plot.log_y = true;
        plot.series = {{"train", t.column("epoch"), t.column("train_loss")},
                       {"validation", t.column("epoch"), t.column("val_loss")}};
      } else if (plot_kind == "latency") {
        plot.title = "Inference latency";
        plot.x_label = "batch size";
        plot.y_label = "ms";
        plot.log_x = plot.log_y = true;
        plot.series = {{"distance", t.column("scale"), t.column("dist_ms")},
                       {"distance+gradient", t.column("scale"), t.column("dist_grad_ms")}};
      } else {
        plot.title = "Avoidance episode";
        plot.x_label = "t (s)";
        plot.y_label = "rad";
        const auto& time = t.column("t");
        for (int d = 1; t.has("q_" + std::to_string(d)); ++d)
          plot.series.push_back({"q" + std::to_string(d), time, t.column("q_" + std::to_string(d))});
        plot.series.push_back({"min phi", time, t.column("min_phi")});
      }
      const std::string out = common.out + "/" + plot_kind + ".svg";
      plot.save(out);
      std::cout << out << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
