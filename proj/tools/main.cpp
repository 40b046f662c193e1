// Command-line front end: dataset generation, training (with clustering and
// gradient ablations), evaluation, concept reports, the plateau-descent demo
// and checkpoint management.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hierpool/checkpoint.hpp"
#include "hierpool/concepts.hpp"
#include "hierpool/data.hpp"
#include "hierpool/hyperplane.hpp"
#include "hierpool/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hierpool;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct DatasetBundle {
  std::vector<Graph> graphs;
  int num_classes = 0;
  int in_dim = 0;
};

fs::path data_root(const RunConfig& config) {
  if (!config.data_dir.empty()) return config.data_dir;
  if (const char* env = std::getenv("HIERPOOL_DATA_ROOT")) return env;
  return ".";
}

DatasetBundle load_dataset(const RunConfig& config) {
  DatasetBundle bundle;
  if (config.dataset == "hierarchical") {
    bundle.graphs = gen_hierarchical(config.dataset_size, config.data_seed);
  } else if (config.dataset == "expressivity") {
    bundle.graphs = gen_expressivity(config.dataset_size, config.data_seed);
  } else if (config.dataset.rfind("tu:", 0) == 0) {
    const std::string name = config.dataset.substr(3);
    bundle.graphs = parse_tu_dataset(data_root(config) / name, name);
  } else {
    throw std::runtime_error("unknown dataset '" + config.dataset +
                             "' (expected hierarchical | expressivity | tu:<NAME>)");
  }
  for (const Graph& g : bundle.graphs)
    bundle.num_classes = std::max(bundle.num_classes, g.label.value_or(0) + 1);
  bundle.in_dim = static_cast<int>(bundle.graphs.front().features.cols());
  return bundle;
}

/// Table-driven defaults for fields the user left untouched.
void apply_dataset_defaults(RunConfig& config, bool clusters_set, bool epochs_set,
                            bool batch_set, bool size_set) {
  const bool reddit = config.dataset == "tu:REDDIT-BINARY";
  if (!batch_set) config.batch_size = reddit ? 32 : 64;
  if (config.dataset == "hierarchical") {
    if (!clusters_set) config.clusters = {10, 15};
    if (!epochs_set) config.epochs = 10000;
    if (!size_set) config.dataset_size = 2000;
  } else if (config.dataset == "expressivity") {
    if (!clusters_set) config.clusters = {10, 15};
    if (!epochs_set) config.epochs = 100;
    if (!size_set) config.dataset_size = 500;
  } else if (config.dataset == "tu:Mutagenicity") {
    if (!clusters_set) config.clusters = {20, 20};
    if (!epochs_set) config.epochs = 1000;
  } else if (reddit) {
    if (!clusters_set) config.clusters = {30, 30};
    if (!epochs_set) config.epochs = 1500;
  }
}

int effective_epochs(const RunConfig& config) {
  return std::max(0, static_cast<int>(std::llround(config.epochs * config.budget)));
}

TrainOptions to_train_options(const RunConfig& config) {
  TrainOptions opts;
  opts.epochs = effective_epochs(config);
  opts.batch_size = config.batch_size;
  opts.lr = config.lr;
  opts.weight_decay = config.weight_decay;
  opts.cluster_mode = config.cluster_mode == "global" ? ClusterMode::Global : ClusterMode::Batch;
  opts.grad_mode =
      config.grad_mode == "hyperplane" ? GradMode::Hyperplane : GradMode::StraightThrough;
  opts.hyperplane.n_samples = config.hyper_samples;
  opts.hyperplane.sigma = config.hyper_sigma;
  opts.hyperplane.mix = config.hyper_mix;
  opts.seed = config.seed;
  opts.early_stop_patience = config.early_stop_patience;
  opts.eval_every = config.eval_every;
  return opts;
}

HelpModel build_model(const RunConfig& config, const DatasetBundle& data) {
  const Architecture arch = parse_architecture(config.dims);
  if (arch.block_widths.size() != config.clusters.size())
    throw std::runtime_error("cluster count list must have one entry per [Pool] marker");
  std::vector<PoolBlockConfig> blocks;
  for (int k : config.clusters) blocks.push_back(PoolBlockConfig{k, config.merge_fraction});
  return make_help_model(arch, blocks, data.in_dim, data.num_classes, config.seed);
}

json history_to_json(const TrainResult& result) {
  json history = json::array();
  for (const EpochStats& e : result.history)
    history.push_back(json{{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"train_acc", e.train_acc},
                           {"val_acc", std::isnan(e.val_acc) ? json() : json(e.val_acc)},
                           {"seconds", e.seconds},
                           {"forward_passes", e.forward_passes}});
  return history;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << "\n";
}

std::vector<int> labels_of(const std::vector<Graph>& graphs, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(graphs[i].label.value_or(-1));
  return out;
}

std::vector<Graph> subset(const std::vector<Graph>& graphs, const std::vector<int>& idx) {
  std::vector<Graph> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(graphs[i]);
  return out;
}

Matrix rows_of(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<int>(i)) = m.row(idx[i]);
  return out;
}

int cumulative_layers(const Architecture& arch, int level) {
  int layers = 0;
  for (int s = 0; s < level && s < static_cast<int>(arch.block_widths.size()); ++s)
    layers += static_cast<int>(arch.block_widths[s].size());
  return layers;
}

/// Full metrics bundle for a trained model: accuracy, per-level completeness
/// and conformity (pooled and L-hop), feature completeness.
json metrics_report(const HelpModel& model, const RunConfig& config,
                    const std::vector<Graph>& graphs, const Split& split, int lhop_override,
                    const fs::path& dot_dir, int requested_level) {
  const Architecture arch = parse_architecture(config.dims);
  json report;
  report["dataset"] = config.dataset;
  report["seed"] = config.seed;
  report["merge_fraction"] = config.merge_fraction;
  report["threshold"] = 0.1;
  report["test_accuracy"] = evaluate_accuracy(model, graphs, split.test);

  const std::vector<int> train_y = labels_of(graphs, split.train);
  const std::vector<int> test_y = labels_of(graphs, split.test);
  {
    const CompletenessResult fc = feature_completeness(
        subset(graphs, split.train), train_y, subset(graphs, split.test), test_y, config.seed);
    report["feature_completeness"] = {{"mean", fc.mean}, {"std", fc.stdev}, {"runs", fc.runs}};
  }

  const std::vector<Graph> test_graphs = subset(graphs, split.test);
  json levels = json::object();
  for (int level = 1; level <= model.num_blocks(); ++level) {
    if (requested_level > 0 && level != requested_level) continue;
    json entry;

    const Matrix counts = concept_multiset(model, graphs, level);
    const CompletenessResult comp = completeness(
        rows_of(counts, split.train), train_y, rows_of(counts, split.test), test_y, config.seed);
    entry["completeness"] = {{"mean", comp.mean}, {"std", comp.stdev}, {"runs", comp.runs}};

    const ConceptExtraction ex = extract_concepts(model, test_graphs, level);
    const ConceptTable table = bucket_instances(ex.instances, ex.num_concepts, level);
    const ConformityReport conf = conformity(table, 0.1);
    entry["conformity"] = {{"layer_average", conf.layer_average},
                           {"per_concept", conf.per_concept}};

    const int hops = lhop_override > 0 ? lhop_override : cumulative_layers(arch, level);
    const ConceptTable lhop_table =
        bucket_instances(lhop_instances(ex, hops), ex.num_concepts, level);
    const ConformityReport lhop_conf = conformity(lhop_table, 0.1);
    entry["lhop"] = {{"hops", hops}, {"layer_average", lhop_conf.layer_average}};

    json concepts_json = json::array();
    for (const auto& [cid, buckets] : table.buckets) {
      json bucket_list = json::array();
      for (const ConceptBucket& bucket : buckets)
        bucket_list.push_back(json{{"wl_key", bucket.key.hash},
                                   {"count", bucket.count},
                                   {"example_graph_ref", bucket.example_graph},
                                   {"hash_only", bucket.hash_only}});
      concepts_json.push_back(json{{"concept", cid}, {"buckets", std::move(bucket_list)}});
    }
    entry["concepts"] = std::move(concepts_json);

    if (!dot_dir.empty()) export_concept_dot(table, ex, hops, dot_dir);
    levels[std::to_string(level)] = std::move(entry);
  }
  report["levels"] = std::move(levels);
  return report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical latent pooling for graph classification"};
  app.require_subcommand(1);

  RunConfig config;
  std::string out_path, record_path, checkpoint_path, dot_dir;
  int lhop = 0;
  int level = 0;
  int gcexplainer_k = 0;
  std::string split_name = "test";
  std::uint64_t demo_seed = 1;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--dataset", config.dataset, "hierarchical | expressivity | tu:<NAME>");
    cmd->add_option("--data-dir", config.data_dir, "TU dataset root (or HIERPOOL_DATA_ROOT)");
    cmd->add_option("--n", config.dataset_size, "synthetic dataset size");
    cmd->add_option("--data-seed", config.data_seed, "generation + split seed");
    cmd->add_option("--dims", config.dims, "layer widths with [Pool] markers");
    cmd->add_option("--clusters", config.clusters, "cluster count per pool block");
    cmd->add_option("--merge-fraction", config.merge_fraction,
                    "centroid merge threshold as a fraction of the max distance");
    cmd->add_option("--epochs", config.epochs, "training epochs before budget scaling");
    cmd->add_option("--budget", config.budget, "epoch budget scaler");
    cmd->add_option("--batch-size", config.batch_size, "graphs per batch");
    cmd->add_option("--lr", config.lr, "Adam learning rate");
    cmd->add_option("--weight-decay", config.weight_decay, "L2 strength");
    cmd->add_option("--cluster-mode", config.cluster_mode, "batch | global");
    cmd->add_option("--grad", config.grad_mode, "straight-through | hyperplane");
    cmd->add_option("--samples", config.hyper_samples, "hyperplane sample count");
    cmd->add_option("--sigma", config.hyper_sigma, "hyperplane noise std (<=0: scale-aware)");
    cmd->add_option("--mix", config.hyper_mix, "hyperplane gradient weight");
    cmd->add_option("--seed", config.seed, "model/training seed");
    cmd->add_option("--patience", config.early_stop_patience,
                    "stop after this many perfect validation evals (0 = off)");
    cmd->add_option("--eval-every", config.eval_every, "validation cadence in epochs");
    cmd->set_config("--config");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset as TU files");
  fs::path gen_out;
  add_config_flags(generate);
  generate->add_option("--out", gen_out, "output directory")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "train a pooled model");
  add_config_flags(train_cmd);
  train_cmd->add_option("--out", out_path, "checkpoint path")->required();
  train_cmd->add_option("--record", record_path, "run record JSON path");

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "accuracy of a checkpoint");
  evaluate_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
  evaluate_cmd->add_option("--split", split_name, "train | val | test");
  evaluate_cmd->add_option("--data-dir", config.data_dir, "TU dataset root override");

  CLI::App* concepts_cmd = app.add_subcommand("concepts", "concept metrics and DOT exports");
  concepts_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
  concepts_cmd->add_option("--out", out_path, "metrics JSON path")->required();
  concepts_cmd->add_option("--level", level, "restrict to one pool level");
  concepts_cmd->add_option("--lhop", lhop, "L-hop context size override");
  concepts_cmd->add_option("--dot", dot_dir, "directory for DOT exports");
  concepts_cmd->add_option("--data-dir", config.data_dir, "TU dataset root override");

  CLI::App* baseline_cmd = app.add_subcommand("baseline", "train the pooling-free GCN");
  add_config_flags(baseline_cmd);
  baseline_cmd->add_option("--out", out_path, "checkpoint path")->required();
  baseline_cmd->add_option("--record", record_path, "run record JSON path");
  baseline_cmd->add_option("--gcexplainer", gcexplainer_k,
                           "post-hoc concept count (0 = skip concept report)");

  CLI::App* demo_cmd = app.add_subcommand("demo-hyperplane", "plateau-descent trajectory CSV");
  demo_cmd->add_option("--seed", demo_seed, "trajectory seed");
  demo_cmd->add_option("--out", out_path, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*generate) {
      apply_dataset_defaults(config, generate->count("--clusters") > 0,
                             generate->count("--epochs") > 0,
                             generate->count("--batch-size") > 0, generate->count("--n") > 0);
      const DatasetBundle data = load_dataset(config);
      const std::string name =
          config.dataset.rfind("tu:", 0) == 0 ? config.dataset.substr(3) : config.dataset;
      write_tu_dataset(gen_out, name, data.graphs);
      std::cout << "wrote " << data.graphs.size() << " graphs to " << gen_out.string() << "\n";
      return kExitOk;
    }

    if (*train_cmd || *baseline_cmd) {
      CLI::App* cmd = *train_cmd ? train_cmd : baseline_cmd;
      apply_dataset_defaults(config, cmd->count("--clusters") > 0, cmd->count("--epochs") > 0,
                             cmd->count("--batch-size") > 0, cmd->count("--n") > 0);
      if (*train_cmd && config.dataset == "hierarchical" && cmd->count("--budget") == 0 &&
          cmd->count("--epochs") == 0)
        config.budget = 0.2;  // 10000 published epochs scaled to the 2000 desk default
      const DatasetBundle data = load_dataset(config);
      const Split split =
          split_dataset(static_cast<int>(data.graphs.size()), {0.8, 0.1, 0.1}, config.data_seed);
      const TrainOptions opts = to_train_options(config);

      Checkpoint cp;
      cp.config = config;
      json record;
      record["config"] = to_json(config);
      record["effective_epochs"] = opts.epochs;

      if (*train_cmd) {
        HelpModel model = build_model(config, data);
        const TrainResult result = train(model, data.graphs, split, opts);
        cp.kind = "help";
        cp.model = std::move(model);
        record["history"] = history_to_json(result);
        record["epochs_run"] = result.epochs_run;
        record["seconds"] = result.seconds;
        record["forward_passes"] = result.total_forward_passes;
        record["final"] = {
            {"train_accuracy", evaluate_accuracy(cp.model, data.graphs, split.train)},
            {"val_accuracy", evaluate_accuracy(cp.model, data.graphs, split.val)},
            {"test_accuracy", evaluate_accuracy(cp.model, data.graphs, split.test)}};
      } else {
        const Architecture arch = parse_architecture(config.dims);
        std::vector<int> dims;
        for (const auto& widths : arch.block_widths)
          dims.insert(dims.end(), widths.begin(), widths.end());
        dims.insert(dims.end(), arch.final_widths.begin(), arch.final_widths.end());
        GcnBaseline model = make_baseline(dims, data.in_dim, data.num_classes, config.seed);
        const TrainResult result = train_baseline(model, data.graphs, split, opts);
        cp.kind = "baseline";
        cp.baseline = std::move(model);
        record["history"] = history_to_json(result);
        record["epochs_run"] = result.epochs_run;
        record["seconds"] = result.seconds;
        record["final"] = {
            {"train_accuracy", evaluate_baseline_accuracy(cp.baseline, data.graphs, split.train)},
            {"val_accuracy", evaluate_baseline_accuracy(cp.baseline, data.graphs, split.val)},
            {"test_accuracy", evaluate_baseline_accuracy(cp.baseline, data.graphs, split.test)}};

        if (gcexplainer_k > 0) {
          const std::vector<Graph> test_graphs = subset(data.graphs, split.test);
          const GcExplainerResult gc =
              gcexplainer_concepts(cp.baseline, test_graphs, gcexplainer_k,
                                   static_cast<int>(dims.size()), config.seed);
          const ConformityReport conf = conformity(gc.table, 0.1);
          const Matrix train_counts =
              gcexplainer_concepts(cp.baseline, subset(data.graphs, split.train), gcexplainer_k,
                                   static_cast<int>(dims.size()), config.seed)
                  .multisets;
          record["gcexplainer"] = {
              {"k", gcexplainer_k},
              {"conformity", conf.layer_average},
              {"completeness",
               completeness(train_counts, labels_of(data.graphs, split.train), gc.multisets,
                            labels_of(data.graphs, split.test), config.seed)
                   .mean}};
        }
      }

      cp.metadata = record;
      save_checkpoint(out_path, cp);
      record["checkpoint"] = out_path;
      if (!record_path.empty()) write_json(record_path, record);
      std::cout << record["final"].dump(1) << "\n";
      return kExitOk;
    }

    if (*evaluate_cmd) {
      const Checkpoint cp = load_checkpoint(checkpoint_path);
      RunConfig loaded = cp.config;
      if (!config.data_dir.empty()) loaded.data_dir = config.data_dir;
      const DatasetBundle data = load_dataset(loaded);
      const Split split =
          split_dataset(static_cast<int>(data.graphs.size()), {0.8, 0.1, 0.1}, loaded.data_seed);
      const std::vector<int>& idx = split_name == "train" ? split.train
                                    : split_name == "val" ? split.val
                                                          : split.test;
      const double acc = cp.kind == "help"
                             ? evaluate_accuracy(cp.model, data.graphs, idx)
                             : evaluate_baseline_accuracy(cp.baseline, data.graphs, idx);
      json report{{"split", split_name}, {"accuracy", acc}, {"graphs", idx.size()}};
      std::cout << report.dump(1) << "\n";
      return kExitOk;
    }

    if (*concepts_cmd) {
      const Checkpoint cp = load_checkpoint(checkpoint_path);
      if (cp.kind != "help")
        throw std::runtime_error("concepts requires a pooled-model checkpoint");
      RunConfig loaded = cp.config;
      if (!config.data_dir.empty()) loaded.data_dir = config.data_dir;
      const DatasetBundle data = load_dataset(loaded);
      const Split split =
          split_dataset(static_cast<int>(data.graphs.size()), {0.8, 0.1, 0.1}, loaded.data_seed);
      const json report =
          metrics_report(cp.model, loaded, data.graphs, split, lhop, dot_dir, level);
      write_json(out_path, report);
      std::cout << "wrote " << out_path << "\n";
      return kExitOk;
    }

    if (*demo_cmd) {
      const auto trajectory = run_demo(demo_seed);
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot write " + out_path);
      out << "step,x1,x2,f\n";
      out.precision(17);
      for (const DemoStep& s : trajectory)
        out << s.step << ',' << s.x1 << ',' << s.x2 << ',' << s.f << "\n";
      std::cout << "final x1 " << trajectory.back().x1 << "\n";
      return kExitOk;
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
