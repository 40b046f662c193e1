#include "hierpool/train.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>

#include "hierpool/rng.hpp"
#include "hierpool/tape.hpp"

namespace hierpool {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int argmax_row(const Matrix& m, int row) {
  int best = 0;
  for (int c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return best;
}

double batch_accuracy(const Matrix& logits, const std::vector<int>& labels) {
  int hit = 0;
  for (std::size_t g = 0; g < labels.size(); ++g)
    if (argmax_row(logits, static_cast<int>(g)) == labels[g]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::vector<std::vector<int>> ordered_chunks(const std::vector<int>& indices, int size) {
  std::vector<std::vector<int>> out;
  for (std::size_t at = 0; at < indices.size(); at += size)
    out.emplace_back(indices.begin() + at,
                     indices.begin() + std::min(indices.size(), at + size));
  return out;
}

}  // namespace

Matrix block_embeddings(const HelpModel& model, const BatchView& batch,
                        const std::vector<ClusterModel>& models, int block) {
  ad::Tape tape(false);
  BatchView view = batch;
  ad::Var x = tape.constant(batch.stacked_features());
  for (int s = 0; s <= block; ++s) {
    const NormAdjacency adj = normalized_adjacency(view);
    StackVars vars = lift(tape, model.block_stacks[s]);
    x = stack_forward(tape, adj, x, vars, model.act_slope);
    if (s == block) break;
    const std::vector<int> c = assign(tape.value(x), models.at(s));
    PoolStepResult step = pool_step(tape, view, x, c, model.keep_self_loops, false);
    view = std::move(step.pooled);
    x = step.pooled_x;
  }
  return tape.value(x);
}

std::vector<ClusterModel> fit_centroids(const HelpModel& model, const std::vector<Graph>& data,
                                        const std::vector<int>& indices, int batch_size,
                                        std::uint64_t seed) {
  std::vector<ClusterModel> models;
  const auto chunks = ordered_chunks(indices, batch_size);
  for (int s = 0; s < model.num_blocks(); ++s) {
    std::vector<Matrix> pieces;
    long rows = 0;
    for (const auto& chunk : chunks) {
      const BatchView batch = make_batch(data, chunk);
      pieces.push_back(block_embeddings(model, batch, models, s));
      rows += pieces.back().rows();
    }
    Matrix all(rows, pieces.front().cols());
    long at = 0;
    for (const Matrix& p : pieces) {
      all.middleRows(at, p.rows()) = p;
      at += p.rows();
    }
    const ClusterModel raw = kmeans_fit(all, model.blocks[s].num_clusters,
                                        Rng::mix({seed, 0xF17C, static_cast<std::uint64_t>(s)}));
    models.push_back(merge_centroids(raw, model.blocks[s].merge_fraction));
  }
  return models;
}

double evaluate_accuracy(const HelpModel& model, const std::vector<Graph>& data,
                         const std::vector<int>& indices,
                         const std::vector<ClusterModel>* fixed, int batch_size,
                         std::uint64_t seed) {
  long hit = 0;
  const bool have_fixed = fixed != nullptr || model.has_centroids();
  for (const auto& chunk : ordered_chunks(indices, batch_size)) {
    const BatchView batch = make_batch(data, chunk);
    ad::Tape tape(false);
    PoolForwardOptions opts;
    if (have_fixed) {
      opts.source = ClusterSource::Fixed;
      opts.fixed = fixed;
    } else {
      opts.source = ClusterSource::FitPerBatch;
      opts.kmeans_seed = Rng::mix({seed, 0xE7A1});
    }
    opts.want_trace = false;
    const HelpForward fwd = help_forward(tape, batch, model, opts);
    const Matrix& logits = tape.value(fwd.logits);
    for (std::size_t g = 0; g < chunk.size(); ++g)
      if (argmax_row(logits, static_cast<int>(g)) == batch.labels[g]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(indices.size());
}

TrainResult train(HelpModel& model, const std::vector<Graph>& data, const Split& split,
                  const TrainOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Matrix*> params = parameters(model);
  AdamState adam = AdamState::like(params);
  AdamOptions adam_opts;
  adam_opts.lr = opts.lr;
  adam_opts.weight_decay = opts.weight_decay;

  TrainResult result;
  int perfect_streak = 0;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto epoch_t0 = std::chrono::steady_clock::now();
    std::vector<ClusterModel> epoch_models;
    if (opts.cluster_mode == ClusterMode::Global)
      epoch_models = fit_centroids(model, data, split.train, opts.batch_size,
                                   Rng::mix({opts.seed, static_cast<std::uint64_t>(epoch)}));

    double loss_sum = 0.0;
    double acc_sum = 0.0;
    long seen = 0;
    long fpasses = 0;
    const auto batches = make_batches(split.train, opts.batch_size, opts.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const BatchView batch = make_batch(data, batches[b]);
      PoolForwardOptions fopts;
      fopts.want_trace = false;
      if (opts.cluster_mode == ClusterMode::Global) {
        fopts.source = ClusterSource::Fixed;
        fopts.fixed = &epoch_models;
      } else {
        fopts.source = ClusterSource::FitPerBatch;
        fopts.kmeans_seed = Rng::mix({opts.seed, static_cast<std::uint64_t>(epoch), b});
      }

      double loss = 0.0;
      std::vector<Matrix> grads;
      Matrix logits;
      if (opts.grad_mode == GradMode::Hyperplane && opts.hyperplane.mix > 0.0) {
        Rng rng(Rng::mix({opts.seed, static_cast<std::uint64_t>(epoch), b, 0x4B9E}));
        SmoothedResult sm = smoothed_backward(model, batch, fopts, opts.hyperplane, rng);
        loss = sm.loss;
        grads = std::move(sm.grads);
        logits = std::move(sm.logits);
        fpasses += sm.forward_passes;
      } else {
        ad::Tape tape;
        const HelpForward fwd = help_forward(tape, batch, model, fopts);
        ad::Var loss_var = ad::softmax_cross_entropy(fwd.logits, batch.labels);
        loss = tape.value(loss_var)(0, 0);
        logits = tape.value(fwd.logits);
        tape.backward(loss_var);
        grads.reserve(fwd.param_vars.size());
        for (ad::Var p : fwd.param_vars) grads.push_back(tape.grad(p));
        fpasses += 1;
      }

      if (!std::isfinite(loss)) throw DivergenceError(epoch);
      adam_step(params, grads, adam, adam_opts);

      loss_sum += loss * static_cast<double>(batches[b].size());
      acc_sum += batch_accuracy(logits, batch.labels) * static_cast<double>(batches[b].size());
      seen += static_cast<long>(batches[b].size());
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    stats.train_acc = acc_sum / static_cast<double>(seen);
    stats.forward_passes = fpasses;
    result.total_forward_passes += fpasses;

    if ((epoch + 1) % opts.eval_every == 0 || epoch + 1 == opts.epochs) {
      stats.val_acc = evaluate_accuracy(
          model, data, split.val,
          opts.cluster_mode == ClusterMode::Global ? &epoch_models : nullptr, 256,
          Rng::mix({opts.seed, static_cast<std::uint64_t>(epoch), 0xEA1}));
      if (stats.val_acc >= 1.0)
        ++perfect_streak;
      else
        perfect_streak = 0;
    } else {
      stats.val_acc = std::numeric_limits<double>::quiet_NaN();
    }
    stats.seconds = seconds_since(epoch_t0);
    result.history.push_back(stats);
    result.epochs_run = epoch + 1;
    if (opts.verbose)
      std::cerr << "epoch " << epoch << " loss " << stats.train_loss << " train_acc "
                << stats.train_acc << " val_acc " << stats.val_acc << "\n";

    if (opts.early_stop_patience > 0 && perfect_streak >= opts.early_stop_patience) break;
  }

  model.cluster_models =
      fit_centroids(model, data, split.train, opts.batch_size, Rng::mix({opts.seed, 0xF1A1}));
  result.seconds = seconds_since(t0);
  return result;
}

TrainResult train_baseline(GcnBaseline& model, const std::vector<Graph>& data,
                           const Split& split, const TrainOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Matrix*> params = parameters(model);
  AdamState adam = AdamState::like(params);
  AdamOptions adam_opts;
  adam_opts.lr = opts.lr;
  adam_opts.weight_decay = opts.weight_decay;

  TrainResult result;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto epoch_t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    double acc_sum = 0.0;
    long seen = 0;
    const auto batches = make_batches(split.train, opts.batch_size, opts.seed, epoch);
    for (const auto& indices : batches) {
      const BatchView batch = make_batch(data, indices);
      ad::Tape tape;
      const BaselineForward fwd = baseline_forward(tape, batch, model);
      ad::Var loss_var = ad::softmax_cross_entropy(fwd.logits, batch.labels);
      const double loss = tape.value(loss_var)(0, 0);
      if (!std::isfinite(loss)) throw DivergenceError(epoch);
      const Matrix logits = tape.value(fwd.logits);
      tape.backward(loss_var);
      std::vector<Matrix> grads;
      grads.reserve(fwd.param_vars.size());
      for (ad::Var p : fwd.param_vars) grads.push_back(tape.grad(p));
      adam_step(params, grads, adam, adam_opts);
      loss_sum += loss * static_cast<double>(indices.size());
      acc_sum += batch_accuracy(logits, batch.labels) * static_cast<double>(indices.size());
      seen += static_cast<long>(indices.size());
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    stats.train_acc = acc_sum / static_cast<double>(seen);
    stats.val_acc = evaluate_baseline_accuracy(model, data, split.val);
    stats.seconds = seconds_since(epoch_t0);
    stats.forward_passes = static_cast<long>(batches.size());
    result.total_forward_passes += stats.forward_passes;
    result.history.push_back(stats);
    result.epochs_run = epoch + 1;
    if (opts.verbose)
      std::cerr << "baseline epoch " << epoch << " loss " << stats.train_loss << " val_acc "
                << stats.val_acc << "\n";
  }
  result.seconds = seconds_since(t0);
  return result;
}

double evaluate_baseline_accuracy(const GcnBaseline& model, const std::vector<Graph>& data,
                                  const std::vector<int>& indices, int batch_size) {
  long hit = 0;
  for (const auto& chunk : ordered_chunks(indices, batch_size)) {
    const BatchView batch = make_batch(data, chunk);
    ad::Tape tape(false);
    const BaselineForward fwd = baseline_forward(tape, batch, model);
    const Matrix& logits = tape.value(fwd.logits);
    for (std::size_t g = 0; g < chunk.size(); ++g)
      if (argmax_row(logits, static_cast<int>(g)) == batch.labels[g]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(indices.size());
}

}  // namespace hierpool
