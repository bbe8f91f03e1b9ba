// pak: pose-based video anomaly detection pipeline.
//
// Subcommands: synth, fit-prior, train, score, eval, plot.
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include "pak/checkpoint.hpp"
#include "pak/errors.hpp"
#include "pak/manifest.hpp"
#include "pak/motion_prior.hpp"
#include "pak/plot.hpp"
#include "pak/preprocess.hpp"
#include "pak/scorer.hpp"
#include "pak/synth.hpp"
#include "pak/trainer.hpp"
#include "pak/trajectory.hpp"
#include "pak/transformer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("PAK_SEED")) {
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw pak::ArgumentError("PAK_SEED is not an unsigned integer");
    return v;
  }
  return flag_seed;
}

struct WindowFlags {
  int window = 16;
  int stride = 2;
  int poses = 8;
};

void add_window_flags(CLI::App* cmd, WindowFlags& w) {
  cmd->add_option("--window", w.window, "Sliding window size in frames")
      ->capture_default_str();
  cmd->add_option("--stride", w.stride, "Sliding window stride")
      ->capture_default_str();
  cmd->add_option("--t-poses", w.poses, "Poses kept per window")
      ->capture_default_str();
}

std::vector<pak::WindowSample> all_windows(
    const std::vector<pak::PoseTrajectory>& trajectories, const WindowFlags& w) {
  std::vector<pak::WindowSample> out;
  for (const pak::PoseTrajectory& traj : trajectories) {
    auto windows = pak::sample_windows(traj, w.window, w.stride, w.poses);
    out.insert(out.end(), std::make_move_iterator(windows.begin()),
               std::make_move_iterator(windows.end()));
  }
  return out;
}

std::vector<pak::Scalar> training_displacements(
    const std::vector<pak::WindowSample>& samples, std::size_t* dropped) {
  std::vector<std::vector<pak::DecomposedPose>> decomposed;
  std::size_t drop_count = 0;
  for (const pak::WindowSample& s : samples) {
    try {
      decomposed.push_back(pak::decompose_sequence(s));
    } catch (const pak::DegeneratePoseError&) {
      ++drop_count;
    }
  }
  if (dropped) *dropped = drop_count;
  return pak::collect_displacements(decomposed);
}

// --------------------------------------------------------------------------

struct SynthArgs {
  pak::SynthSpec spec;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& args) {
  const pak::SynthData data = pak::generate(args.spec);
  fs::create_directories(args.out_dir);
  const std::string traj_path = args.out_dir + "/trajectories.jsonl";
  const std::string train_path = args.out_dir + "/train.jsonl";
  const std::string labels_path = args.out_dir + "/labels.csv";
  pak::write_trajectories(traj_path, data.trajectories);
  // Anomaly detection trains on normal data only.
  const std::vector<pak::PoseTrajectory> normal_only(
      data.trajectories.begin(),
      data.trajectories.begin() + args.spec.n_normal);
  pak::write_trajectories(train_path, normal_only);
  pak::write_labels_csv(labels_path, data.labels);

  pak::RunManifest manifest;
  manifest.command = "synth";
  manifest.seed = args.spec.seed;
  manifest.data_path = traj_path;
  manifest.data_hash = pak::file_hash_hex(traj_path);
  manifest.save(args.out_dir + "/manifest.json");

  std::cout << "wrote " << data.trajectories.size() << " trajectories to "
            << traj_path << "\n";
  return 0;
}

// --------------------------------------------------------------------------

struct FitPriorArgs {
  std::string data;
  std::string family = "rayleigh";
  std::string out;
  std::string histogram;
  WindowFlags window;
  std::uint64_t seed = 0;
};

int cmd_fit_prior(const FitPriorArgs& args) {
  const auto trajectories = pak::load_trajectories(args.data);
  const auto samples = all_windows(trajectories, args.window);
  std::size_t dropped = 0;

  std::vector<std::vector<pak::DecomposedPose>> decomposed;
  for (const pak::WindowSample& s : samples) {
    try {
      decomposed.push_back(pak::decompose_sequence(s));
    } catch (const pak::DegeneratePoseError&) {
      ++dropped;
    }
  }
  if (decomposed.empty())
    throw pak::FitError("no usable windows in " + args.data);

  const auto displacements = pak::collect_displacements(decomposed);
  const pak::MotionPrior prior =
      pak::fit_prior(displacements, pak::prior_family_from_string(args.family));
  prior.save(args.out);

  const pak::DisplacementHistogram hist = pak::collect_statistics(decomposed);
  const std::string hist_path =
      args.histogram.empty() ? args.out + ".histogram.json" : args.histogram;
  {
    std::ofstream out(hist_path);
    if (!out) throw pak::IoError("cannot write histogram: " + hist_path);
    out << hist.to_json().dump(2) << '\n';
  }

  pak::RunManifest manifest;
  manifest.command = "fit-prior";
  manifest.seed = args.seed;
  manifest.window = args.window.window;
  manifest.stride = args.window.stride;
  manifest.prior = prior.to_json();
  manifest.prior_path = args.out;
  manifest.data_path = args.data;
  manifest.data_hash = pak::file_hash_hex(args.data);
  manifest.save(args.out + ".manifest.json");

  std::cout << "fitted " << args.family << " prior on " << displacements.size()
            << " displacements (" << dropped << " windows dropped): "
            << prior.to_json().dump() << "\n";
  return 0;
}

// --------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string prior_path;
  std::string out_dir;
  WindowFlags window;
  pak::TransformerConfig net;
  pak::TrainConfig train;
  std::string fuse_mode = "divide";
  bool no_motion_embed = false;
  std::uint64_t seed = 0;
};

void write_loss_csv(const std::string& path, const std::vector<pak::Scalar>& losses) {
  std::ofstream out(path);
  if (!out) throw pak::IoError("cannot write loss log: " + path);
  out << "step,loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < losses.size(); ++i)
    out << i << ',' << losses[i] << '\n';
}

int cmd_train(TrainArgs args) {
  args.net.poses_per_window = args.window.poses;
  args.train.seed = args.seed;

  const auto trajectories = pak::load_trajectories(args.data);
  if (trajectories.empty()) throw pak::ArgumentError("no trajectories in " + args.data);
  args.net.joints_per_pose = trajectories.front().joints_per_pose();
  args.net.validate();

  const pak::MotionPrior prior = pak::MotionPrior::load(args.prior_path);
  const auto samples = all_windows(trajectories, args.window);
  std::size_t dropped = 0;
  const auto windows = pak::prepare_training_windows(
      samples, prior, pak::fuse_mode_from_string(args.fuse_mode),
      !args.no_motion_embed, args.net, &dropped);
  if (windows.empty()) throw pak::ArgumentError("no usable training windows");
  std::cout << "training on " << windows.size() << " windows (" << dropped
            << " dropped)\n";

  fs::create_directories(args.out_dir);
  const std::string ckpt_path = args.out_dir + "/checkpoint.pakckpt";

  pak::RunManifest manifest;
  manifest.command = "train";
  manifest.seed = args.seed;
  manifest.window = args.window.window;
  manifest.stride = args.window.stride;
  manifest.fuse_mode = args.fuse_mode;
  manifest.motion_embed = !args.no_motion_embed;
  manifest.net_config = args.net.to_json();
  manifest.train_config = args.train.to_json();
  manifest.prior = prior.to_json();
  manifest.prior_path = args.prior_path;
  manifest.data_path = args.data;
  manifest.data_hash = pak::file_hash_hex(args.data);
  manifest.checkpoint_path = ckpt_path;

  auto on_checkpoint = [&](std::int64_t step, const pak::TransformerParams& p) {
    pak::save_checkpoint(ckpt_path, p, args.net);
    std::cout << "checkpoint at step " << step << "\n";
  };

  pak::TransformerParams initial = pak::TransformerParams::init(args.net, args.seed);
  pak::TrainResult result;
  try {
    result = pak::train(windows, std::move(initial), args.net, args.train,
                        on_checkpoint);
  } catch (const pak::NumericError& e) {
    manifest.save(args.out_dir + "/manifest.json");
    std::cerr << "error: " << e.what() << " (partial checkpoint retained)\n";
    return 1;
  }

  pak::save_checkpoint(ckpt_path, result.params, args.net);
  manifest.save(args.out_dir + "/manifest.json");
  write_loss_csv(args.out_dir + "/loss.csv", result.loss_history);

  std::cout << "trained " << result.steps << " steps, first loss "
            << (result.loss_history.empty() ? 0.0 : result.loss_history.front())
            << ", final loss "
            << (result.loss_history.empty() ? 0.0 : result.loss_history.back())
            << "\nwrote " << ckpt_path << "\n";
  return 0;
}

// --------------------------------------------------------------------------

struct ScoreArgs {
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string labels;
  std::string fuse_mode;   // optional override, must match manifest
  std::string prior_path;  // optional override, must match manifest
  bool no_motion_embed = false;
  bool me_flag_given = false;
};

int cmd_score(const ScoreArgs& args) {
  const fs::path manifest_path = fs::path(args.checkpoint).parent_path() / "manifest.json";
  if (!fs::exists(manifest_path))
    throw pak::IoError("no manifest.json next to checkpoint: " +
                       manifest_path.string());
  const pak::RunManifest train_manifest = pak::RunManifest::load(manifest_path.string());

  if (!args.fuse_mode.empty() && args.fuse_mode != train_manifest.fuse_mode)
    throw pak::ConfigError("refusing to score: --fuse-mode " + args.fuse_mode +
                           " disagrees with training manifest (" +
                           train_manifest.fuse_mode + ")");
  if (args.me_flag_given &&
      args.no_motion_embed == train_manifest.motion_embed)
    throw pak::ConfigError(
        "refusing to score: motion-embed flag disagrees with training manifest");
  if (!args.prior_path.empty()) {
    const pak::MotionPrior flag_prior = pak::MotionPrior::load(args.prior_path);
    if (flag_prior.to_json() != train_manifest.prior)
      throw pak::ConfigError(
          "refusing to score: --prior disagrees with training manifest");
  }

  auto [params, net] = pak::load_checkpoint(args.checkpoint);
  const pak::MotionPrior prior = pak::MotionPrior::from_json(train_manifest.prior);
  const pak::FuseMode fuse = pak::fuse_mode_from_string(train_manifest.fuse_mode);

  WindowFlags window;
  window.window = train_manifest.window;
  window.stride = train_manifest.stride;
  window.poses = net.poses_per_window;

  const auto trajectories = pak::load_trajectories(args.data);

  // Score trajectories in parallel; results land in per-trajectory slots so
  // the output is independent of scheduling.
  pak::tune_allocator_for_large_buffers();
  std::vector<std::vector<pak::WindowScoreRecord>> traj_records(
      trajectories.size());
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      pak::ForwardCache cache;  // reused across windows as workspace
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= trajectories.size()) break;
        const pak::PoseTrajectory& traj = trajectories[i];
        const auto samples = pak::sample_windows(traj, window.window,
                                                 window.stride, window.poses);
        for (const pak::WindowSample& sample : samples) {
          std::vector<pak::TrainingWindow> prepared =
              pak::prepare_training_windows({sample}, prior, fuse,
                                            train_manifest.motion_embed, net);
          if (prepared.empty()) continue;  // degenerate pose, window dropped
          const pak::MatX pred = pak::transformer_forward(
              prepared[0].input, params, net, false, 0, &cache);
          traj_records[i].push_back(
              {traj.track_id, sample.covered_frames,
               pak::window_score(pred, prepared[0].target)});
        }
      }
    };
    const unsigned n_threads =
        std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();
  }

  struct VideoAgg {
    std::string scene;
    std::vector<pak::WindowScoreRecord> records;
    int length = 0;
  };
  std::map<std::pair<std::string, std::string>, VideoAgg> videos;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const pak::PoseTrajectory& traj = trajectories[i];
    VideoAgg& agg = videos[{traj.scene_id, traj.video_id}];
    agg.scene = traj.scene_id;
    if (!traj.frame_indices.empty())
      agg.length = std::max(agg.length, traj.frame_indices.back() + 1);
    agg.records.insert(agg.records.end(), traj_records[i].begin(),
                       traj_records[i].end());
  }

  // Videos the labels file mentions but the data lacks score 0 everywhere.
  if (!args.labels.empty()) {
    for (const pak::FrameLabel& l : pak::read_labels_csv(args.labels)) {
      VideoAgg& agg = videos[{l.scene_id, l.video_id}];
      agg.scene = l.scene_id;
      agg.length = std::max(agg.length, l.frame + 1);
    }
  }

  std::vector<pak::ScoreSeries> series;
  series.reserve(videos.size());
  for (const auto& [key, agg] : videos) {
    pak::ScoreSeries s;
    s.scene_id = key.first;
    s.video_id = key.second;
    s.frame_scores = pak::frame_scores(agg.records, agg.length);
    series.push_back(std::move(s));
  }

  pak::normalize_per_scene(series);
  if (!args.labels.empty()) pak::apply_labels_csv(args.labels, series);
  pak::write_score_csv(args.out, series);

  pak::RunManifest manifest = train_manifest;
  manifest.command = "score";
  manifest.data_path = args.data;
  manifest.data_hash = pak::file_hash_hex(args.data);
  manifest.checkpoint_path = args.checkpoint;
  manifest.save(args.out + ".manifest.json");

  std::cout << "scored " << series.size() << " videos -> " << args.out << "\n";
  return 0;
}

// --------------------------------------------------------------------------

struct EvalArgs {
  std::string scores;
  std::string labels;
  bool per_video = false;
};

std::string auc_or_na(const std::vector<pak::ScoreSeries>& series) {
  std::ostringstream os;
  os.precision(6);
  try {
    os << pak::overall_auc(series);
  } catch (const pak::MetricError&) {
    os << "n/a (single class)";
  }
  return os.str();
}

int cmd_eval(const EvalArgs& args) {
  std::vector<pak::ScoreSeries> series = pak::read_score_csv(args.scores);
  if (!args.labels.empty()) pak::apply_labels_csv(args.labels, series);

  std::cout.precision(6);
  const pak::Scalar overall = pak::overall_auc(series);
  std::cout << "overall AUC: " << overall << "\n";

  std::map<std::string, std::vector<pak::ScoreSeries>> by_scene;
  for (const pak::ScoreSeries& s : series) by_scene[s.scene_id].push_back(s);
  for (const auto& [scene, members] : by_scene)
    std::cout << "scene " << scene << " AUC: " << auc_or_na(members) << "\n";
  if (args.per_video) {
    for (const pak::ScoreSeries& s : series)
      std::cout << "video " << s.video_id << " AUC: " << auc_or_na({s}) << "\n";
  }
  return 0;
}

// --------------------------------------------------------------------------

struct PlotArgs {
  std::string scores;
  std::string out_dir;
};

int cmd_plot(const PlotArgs& args) {
  const std::vector<pak::ScoreSeries> series = pak::read_score_csv(args.scores);
  fs::create_directories(args.out_dir);
  int written = 0;
  for (const pak::ScoreSeries& s : series) {
    const std::string path =
        args.out_dir + "/" + s.scene_id + "_" + s.video_id + ".svg";
    pak::write_score_svg(path, s);
    ++written;
  }

  pak::RunManifest manifest;
  manifest.command = "plot";
  manifest.data_path = args.scores;
  manifest.data_hash = pak::file_hash_hex(args.scores);
  manifest.save(args.out_dir + "/manifest.json");

  std::cout << "wrote " << written << " images to " << args.out_dir << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// JSON config file support: keys mirror long flag names (without dashes),
// e.g. {"lr": 1e-4, "batch-size": 64}. Flags given on the command line win.

void apply_config_file(CLI::App* cmd, const std::string& path,
                       const std::map<std::string, std::function<void(const json&)>>& setters) {
  std::ifstream in(path);
  if (!in) throw pak::IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw pak::ParseError("bad config file " + path + ": " + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end())
      throw pak::ArgumentError("unknown config key: " + key);
    const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) continue;  // CLI flag wins
    it->second(value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose-based video anomaly detection pipeline"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;

  // ---- synth ----
  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--n-normal", synth_args.spec.n_normal, "Normal trajectories")->capture_default_str();
  synth->add_option("--n-anomalous", synth_args.spec.n_anomalous, "Fast-walk anomalous trajectories")->capture_default_str();
  synth->add_option("--normal-speed", synth_args.spec.normal_speed, "Rayleigh sigma of the normalized step size")->capture_default_str();
  synth->add_option("--multiplier", synth_args.spec.anomaly_speed_multiplier, "Anomalous speed multiplier (> 1)")->capture_default_str();
  synth->add_option("--joints", synth_args.spec.joints_per_pose, "Joints per pose")->capture_default_str();
  synth->add_option("--jitter", synth_args.spec.jitter_std, "Per-joint jitter std, fraction of box size")->capture_default_str();
  synth->add_option("--frames", synth_args.spec.frames_per_trajectory, "Frames per trajectory")->capture_default_str();
  synth->add_option("--seed", seed, "RNG seed (PAK_SEED overrides)")->capture_default_str();

  // ---- fit-prior ----
  FitPriorArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit-prior", "Fit the motion prior");
  fit->add_option("--data", fit_args.data, "Trajectory JSON-lines file")->required();
  fit->add_option("--family", fit_args.family, "rayleigh|gaussian|uniform")
      ->capture_default_str();
  fit->add_option("--out", fit_args.out, "Prior JSON output path")->required();
  fit->add_option("--histogram", fit_args.histogram, "Histogram JSON output path");
  add_window_flags(fit, fit_args.window);

  // ---- train ----
  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train the reconstruction model");
  std::string train_config_file;
  train->add_option("--data", train_args.data, "Trajectory JSON-lines file")->required();
  train->add_option("--prior", train_args.prior_path, "Fitted prior JSON")->required();
  train->add_option("--out", train_args.out_dir, "Output directory")->required();
  train->add_option("--config", train_config_file, "JSON config file mirroring flag names");
  add_window_flags(train, train_args.window);
  train->add_option("--embed-dim", train_args.net.embed_dim, "Token embedding dimension")
      ->capture_default_str();
  train->add_option("--ls", train_args.net.spatial_layers, "Spatial attention layers")
      ->capture_default_str();
  train->add_option("--lt", train_args.net.temporal_layers, "Temporal attention layers")
      ->capture_default_str();
  train->add_option("--heads", train_args.net.heads, "Attention heads")->capture_default_str();
  train->add_option("--mask-ratio", train_args.net.mask_ratio,
                    "Training-time token masking probability")
      ->capture_default_str();
  std::string attention_mode = "spatial_temporal";
  train->add_option("--attention-mode", attention_mode,
                    "spatial_temporal|joint|spatial_only|temporal_only|none")
      ->capture_default_str();
  std::string spe = "on", tpe = "on";
  train->add_option("--spe", spe, "Spatial position embedding: on|off")->capture_default_str();
  train->add_option("--tpe", tpe, "Temporal position embedding: on|off")->capture_default_str();
  train->add_option("--fuse-mode", train_args.fuse_mode, "divide|multiply|add")
      ->capture_default_str();
  train->add_flag("--no-me", train_args.no_motion_embed,
                  "Disable motion embedding (every scale is 1)");
  train->add_option("--lr", train_args.train.learning_rate, "Peak learning rate")
      ->capture_default_str();
  train->add_option("--warmup-steps", train_args.train.warmup_steps,
                    "Linear warm-up length (must not exceed total steps)")
      ->capture_default_str();
  train->add_option("--batch-size", train_args.train.batch_size, "Windows per step")
      ->capture_default_str();
  train->add_option("--epochs", train_args.train.epochs, "Passes over the windows")
      ->capture_default_str();
  train->add_option("--weight-decay", train_args.train.weight_decay,
                    "Decoupled weight decay")
      ->capture_default_str();
  train->add_option("--checkpoint-interval", train_args.train.checkpoint_interval,
                    "Steps between checkpoint snapshots (0 = final only)")
      ->capture_default_str();
  train->add_option("--threads", train_args.train.threads,
                    "Worker threads (0 = auto; results are thread-count independent)")
      ->capture_default_str();
  train->add_option("--seed", seed, "RNG seed (PAK_SEED overrides)")->capture_default_str();

  // ---- score ----
  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand("score", "Score trajectories with a checkpoint");
  score->add_option("--data", score_args.data, "Trajectory JSON-lines file")->required();
  score->add_option("--checkpoint", score_args.checkpoint, "Trained checkpoint")->required();
  score->add_option("--out", score_args.out, "Score CSV output path")->required();
  score->add_option("--labels", score_args.labels, "Labels CSV to merge");
  score->add_option("--fuse-mode", score_args.fuse_mode,
                    "Must match the training manifest");
  score->add_option("--prior", score_args.prior_path,
                    "Must match the training manifest");
  CLI::Option* me_opt = score->add_flag("--no-me", score_args.no_motion_embed,
                                        "Must match the training manifest");

  // ---- eval ----
  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Report AUC from a score CSV");
  eval_cmd->add_option("--scores", eval_args.scores, "Score CSV")->required();
  eval_cmd->add_option("--labels", eval_args.labels, "Labels CSV");
  eval_cmd->add_flag("--per-video", eval_args.per_video, "Also print per-video AUC");

  // ---- plot ----
  PlotArgs plot_args;
  CLI::App* plot = app.add_subcommand("plot", "Render per-video score curves");
  plot->add_option("--scores", plot_args.scores, "Score CSV")->required();
  plot->add_option("--out", plot_args.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train && !train_config_file.empty()) {
      const std::map<std::string, std::function<void(const json&)>> setters = {
          {"window", [&](const json& v) { train_args.window.window = v.get<int>(); }},
          {"stride", [&](const json& v) { train_args.window.stride = v.get<int>(); }},
          {"t-poses", [&](const json& v) { train_args.window.poses = v.get<int>(); }},
          {"embed-dim", [&](const json& v) { train_args.net.embed_dim = v.get<int>(); }},
          {"ls", [&](const json& v) { train_args.net.spatial_layers = v.get<int>(); }},
          {"lt", [&](const json& v) { train_args.net.temporal_layers = v.get<int>(); }},
          {"heads", [&](const json& v) { train_args.net.heads = v.get<int>(); }},
          {"mask-ratio", [&](const json& v) { train_args.net.mask_ratio = v.get<double>(); }},
          {"attention-mode", [&](const json& v) { attention_mode = v.get<std::string>(); }},
          {"spe", [&](const json& v) { spe = v.get<std::string>(); }},
          {"tpe", [&](const json& v) { tpe = v.get<std::string>(); }},
          {"fuse-mode", [&](const json& v) { train_args.fuse_mode = v.get<std::string>(); }},
          {"no-me", [&](const json& v) { train_args.no_motion_embed = v.get<bool>(); }},
          {"lr", [&](const json& v) { train_args.train.learning_rate = v.get<double>(); }},
          {"warmup-steps", [&](const json& v) { train_args.train.warmup_steps = v.get<int>(); }},
          {"batch-size", [&](const json& v) { train_args.train.batch_size = v.get<int>(); }},
          {"epochs", [&](const json& v) { train_args.train.epochs = v.get<int>(); }},
          {"weight-decay", [&](const json& v) { train_args.train.weight_decay = v.get<double>(); }},
          {"checkpoint-interval",
           [&](const json& v) { train_args.train.checkpoint_interval = v.get<int>(); }},
          {"threads", [&](const json& v) { train_args.train.threads = v.get<int>(); }},
          {"seed", [&](const json& v) { seed = v.get<std::uint64_t>(); }},
      };
      apply_config_file(train, train_config_file, setters);
    }

    if (*synth) {
      synth_args.spec.seed = resolve_seed(seed);
      return cmd_synth(synth_args);
    }
    if (*fit) {
      fit_args.seed = resolve_seed(seed);
      return cmd_fit_prior(fit_args);
    }
    if (*train) {
      train_args.net.attention_mode = pak::attention_mode_from_string(attention_mode);
      if (spe != "on" && spe != "off") throw pak::ArgumentError("--spe must be on|off");
      if (tpe != "on" && tpe != "off") throw pak::ArgumentError("--tpe must be on|off");
      train_args.net.use_spe = spe == "on";
      train_args.net.use_tpe = tpe == "on";
      train_args.seed = resolve_seed(seed);
      return cmd_train(train_args);
    }
    if (*score) {
      score_args.me_flag_given = me_opt->count() > 0;
      return cmd_score(score_args);
    }
    if (*eval_cmd) return cmd_eval(eval_args);
    if (*plot) return cmd_plot(plot_args);
  } catch (const pak::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
