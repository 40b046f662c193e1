#include "hierpool/checkpoint.hpp"

#include <fstream>

namespace hierpool {

using nlohmann::json;

json to_json(const RunConfig& c) {
  return json{{"dataset", c.dataset},
              {"data_dir", c.data_dir},
              {"dataset_size", c.dataset_size},
              {"data_seed", c.data_seed},
              {"dims", c.dims},
              {"clusters", c.clusters},
              {"merge_fraction", c.merge_fraction},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"cluster_mode", c.cluster_mode},
              {"grad_mode", c.grad_mode},
              {"hyper_samples", c.hyper_samples},
              {"hyper_sigma", c.hyper_sigma},
              {"hyper_mix", c.hyper_mix},
              {"seed", c.seed},
              {"early_stop_patience", c.early_stop_patience},
              {"eval_every", c.eval_every},
              {"budget", c.budget}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.dataset = j.at("dataset").get<std::string>();
  c.data_dir = j.value("data_dir", std::string());
  c.dataset_size = j.at("dataset_size").get<int>();
  c.data_seed = j.at("data_seed").get<std::uint64_t>();
  c.dims = j.at("dims").get<std::string>();
  c.clusters = j.at("clusters").get<std::vector<int>>();
  c.merge_fraction = j.at("merge_fraction").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.cluster_mode = j.at("cluster_mode").get<std::string>();
  c.grad_mode = j.at("grad_mode").get<std::string>();
  c.hyper_samples = j.at("hyper_samples").get<int>();
  c.hyper_sigma = j.at("hyper_sigma").get<double>();
  c.hyper_mix = j.at("hyper_mix").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.early_stop_patience = j.value("early_stop_patience", 0);
  c.eval_every = j.value("eval_every", 1);
  c.budget = j.value("budget", 1.0);
  return c;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  Matrix m(rows, cols);
  const json& data = j.at("data");
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data.at(r).at(c).get<double>();
  return m;
}

namespace {

json stack_to_json(const GnnStack& stack) {
  json layers = json::array();
  for (const GcnLayer& l : stack.layers)
    layers.push_back(json{{"weight", matrix_to_json(l.weight)}, {"bias", matrix_to_json(l.bias)}});
  return layers;
}

GnnStack stack_from_json(const json& j) {
  GnnStack stack;
  for (const json& l : j)
    stack.layers.push_back(
        GcnLayer{matrix_from_json(l.at("weight")), matrix_from_json(l.at("bias"))});
  return stack;
}

json cluster_to_json(const ClusterModel& m) {
  return json{{"centroids", matrix_to_json(m.centroids)},
              {"counts", m.counts},
              {"inertia", m.inertia},
              {"iterations", m.iterations}};
}

ClusterModel cluster_from_json(const json& j) {
  ClusterModel m;
  m.centroids = matrix_from_json(j.at("centroids"));
  m.counts = j.at("counts").get<std::vector<long>>();
  m.inertia = j.at("inertia").get<double>();
  m.iterations = j.at("iterations").get<int>();
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  json j;
  j["format"] = "hierpool-checkpoint";
  j["version"] = 1;
  j["kind"] = checkpoint.kind;
  j["config"] = to_json(checkpoint.config);
  j["metadata"] = checkpoint.metadata;
  if (checkpoint.kind == "help") {
    const HelpModel& m = checkpoint.model;
    json blocks = json::array();
    for (int s = 0; s < m.num_blocks(); ++s)
      blocks.push_back(json{{"stack", stack_to_json(m.block_stacks[s])},
                            {"num_clusters", m.blocks[s].num_clusters},
                            {"merge_fraction", m.blocks[s].merge_fraction}});
    j["model"] = json{{"in_dim", m.in_dim},
                      {"num_classes", m.num_classes},
                      {"act_slope", m.act_slope},
                      {"keep_self_loops", m.keep_self_loops},
                      {"blocks", std::move(blocks)},
                      {"final_stack", stack_to_json(m.final_stack)},
                      {"head_weight", matrix_to_json(m.head.weight)},
                      {"head_bias", matrix_to_json(m.head.bias)}};
    json centroids = json::array();
    for (const ClusterModel& c : m.cluster_models) centroids.push_back(cluster_to_json(c));
    j["centroids"] = std::move(centroids);
  } else if (checkpoint.kind == "baseline") {
    const GcnBaseline& m = checkpoint.baseline;
    j["model"] = json{{"in_dim", m.in_dim},
                      {"num_classes", m.num_classes},
                      {"act_slope", m.act_slope},
                      {"stack", stack_to_json(m.stack)},
                      {"head_weight", matrix_to_json(m.head.weight)},
                      {"head_bias", matrix_to_json(m.head.bias)}};
  } else {
    throw std::invalid_argument("save_checkpoint: unknown kind " + checkpoint.kind);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path.string());
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot read " + path.string());
  json j;
  in >> j;
  if (j.value("format", std::string()) != "hierpool-checkpoint")
    throw std::runtime_error("load_checkpoint: not a checkpoint file");
  Checkpoint cp;
  cp.kind = j.at("kind").get<std::string>();
  cp.config = run_config_from_json(j.at("config"));
  cp.metadata = j.value("metadata", json::object());
  const json& m = j.at("model");
  if (cp.kind == "help") {
    HelpModel model;
    model.in_dim = m.at("in_dim").get<int>();
    model.num_classes = m.at("num_classes").get<int>();
    model.act_slope = m.at("act_slope").get<double>();
    model.keep_self_loops = m.at("keep_self_loops").get<bool>();
    for (const json& b : m.at("blocks")) {
      model.block_stacks.push_back(stack_from_json(b.at("stack")));
      model.blocks.push_back(
          PoolBlockConfig{b.at("num_clusters").get<int>(), b.at("merge_fraction").get<double>()});
    }
    model.final_stack = stack_from_json(m.at("final_stack"));
    model.head.weight = matrix_from_json(m.at("head_weight"));
    model.head.bias = matrix_from_json(m.at("head_bias"));
    for (const json& c : j.at("centroids")) model.cluster_models.push_back(cluster_from_json(c));
    cp.model = std::move(model);
  } else if (cp.kind == "baseline") {
    GcnBaseline model;
    model.in_dim = m.at("in_dim").get<int>();
    model.num_classes = m.at("num_classes").get<int>();
    model.act_slope = m.at("act_slope").get<double>();
    model.stack = stack_from_json(m.at("stack"));
    model.head.weight = matrix_from_json(m.at("head_weight"));
    model.head.bias = matrix_from_json(m.at("head_bias"));
    cp.baseline = std::move(model);
  } else {
    throw std::runtime_error("load_checkpoint: unknown kind " + cp.kind);
  }
  return cp;
}

}  // namespace hierpool
