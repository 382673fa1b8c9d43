// Copyright 2026 The xling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xling/batch.hpp"
#include "xling/checkpoint.hpp"
#include "xling/corpus.hpp"
#include "xling/losses.hpp"

namespace xling {

struct TaskSpec {
  TaskKind kind = TaskKind::kTranslation;
  std::string name;         // unique roster label, e.g. "response_b"
  std::string corpus_path;
};

struct TrainConfig {
  std::vector<TaskSpec> roster;  // cycled in this order
  int batch_size = 100;
  double learning_rate = 0.008;
  double embedding_grad_multiplier = 100.0;
  long total_steps = 1;
  long checkpoint_every = 0;  // 0: only the final checkpoint
  std::uint64_t seed = 1;
  EncoderConfig profile = EncoderConfig::desk();
  std::string vocab_path;
  std::string out_dir;
  NegativeScope negative_scope = NegativeScope::kPooled;
  int max_dev_examples = 1000;  // per task, per dev-loss evaluation
  double ema_decay = 0.99;      // loss smoothing window of ~100 steps

  void validate() const {
    if (roster.empty()) throw ConfigError("train config: roster is empty");
    for (const TaskSpec& t : roster) {
      if (t.corpus_path.empty())
        throw ConfigError("train config: task " + t.name + " has no corpus");
      if (t.name.empty()) throw ConfigError("train config: unnamed roster task");
    }
    if (learning_rate <= 0) throw ConfigError("train config: learning_rate must be > 0");
    if (embedding_grad_multiplier < 1)
      throw ConfigError("train config: embedding_grad_multiplier must be >= 1");
    if (total_steps < 1) throw ConfigError("train config: total_steps must be >= 1");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (vocab_path.empty()) throw ConfigError("train config: vocab_path is required");
    profile.validate();
  }

  nlohmann::json to_json() const {
    nlohmann::json tasks = nlohmann::json::array();
    for (const TaskSpec& t : roster)
      tasks.push_back({{"kind", task_kind_name(t.kind)},
                       {"name", t.name},
                       {"corpus", t.corpus_path}});
    return nlohmann::json{
        {"config_version", 1},
        {"roster", tasks},
        {"batch_size", batch_size},
        {"learning_rate", learning_rate},
        {"embedding_grad_multiplier", embedding_grad_multiplier},
        {"total_steps", total_steps},
        {"checkpoint_every", checkpoint_every},
        {"seed", seed},
        {"profile", encoder_config_to_json(profile)},
        {"vocab", vocab_path},
        {"out_dir", out_dir},
        {"negative_scope",
         negative_scope == NegativeScope::kPooled ? "pooled" : "per_row"},
        {"max_dev_examples", max_dev_examples},
        {"ema_decay", ema_decay}};
  }
};

// Round-robin over the roster: step t runs roster[t mod len].
inline std::size_t schedule_next(long step, std::size_t roster_size) {
  if (roster_size == 0) throw ConfigError("schedule_next: empty roster");
  return static_cast<std::size_t>(step) % roster_size;
}

// The SGD update subtrahend. The multiplier is a separate final factor so
// that for a fixed gradient the multiplied update is bitwise `multiplier`
// times the unmultiplied one (IEEE multiplication commutes).
inline double sgd_update_value(double learning_rate, double grad, double multiplier) {
  double update = learning_rate * grad;
  update *= multiplier;
  return update;
}

// One task's shuffled batch stream. Every epoch reshuffles with a seed
// derived from (run seed, task index, epoch), so a stream's position is
// fully described by (epoch, cursor) and resuming is exact.
class TaskStream {
 public:
  TaskStream(const TaskSpec& spec, std::size_t task_index, const Vocabulary& vocab,
             int batch_size, std::uint64_t seed, int max_len)
      : spec_(spec),
        task_index_(task_index),
        vocab_(vocab),
        batch_size_(batch_size),
        seed_(seed),
        max_len_(max_len) {
    switch (spec.kind) {
      case TaskKind::kResponse: {
        auto c = load_response_corpus(spec.corpus_path);
        response_ = std::move(c.train);
        dev_response_ = std::move(c.dev);
        break;
      }
      case TaskKind::kQuickThought: {
        auto c = load_triplet_corpus(spec.corpus_path);
        triplet_ = std::move(c.train);
        dev_triplet_ = std::move(c.dev);
        break;
      }
      case TaskKind::kNli: {
        auto c = load_nli_corpus(spec.corpus_path);
        nli_ = std::move(c.train);
        dev_nli_ = std::move(c.dev);
        break;
      }
      case TaskKind::kTranslation: {
        auto c = load_translation_corpus(spec.corpus_path);
        translation_ = std::move(c.train);
        dev_translation_ = std::move(c.dev);
        break;
      }
    }
    rebuild_epoch();
    if (epoch_batches_.empty())
      throw ConfigError("task " + spec.name + ": corpus at " + spec.corpus_path +
                        " yields no full batch of size " + std::to_string(batch_size));
  }

  const TaskSpec& spec() const { return spec_; }

  TaskBatch next() {
    if (cursor_ >= epoch_batches_.size()) {
      ++epoch_;
      cursor_ = 0;
      rebuild_epoch();
    }
    return epoch_batches_[cursor_++];
  }

  // dev loss over at most max_examples held-out examples, deterministic
  // batch order; NaN when the dev slice cannot fill a single batch
  double dev_loss(Model& model, NegativeScope scope, int max_examples) {
    std::vector<TaskBatch> batches = dev_batches(max_examples);
    if (batches.empty()) return std::nan("");
    double total = 0.0;
    for (const TaskBatch& b : batches) {
      Graph g;
      total += g.scalar_value(task_loss(g, model, b, scope));
    }
    return total / static_cast<double>(batches.size());
  }

  nlohmann::json state() const {
    return nlohmann::json{{"epoch", epoch_}, {"cursor", cursor_}};
  }

  void restore(const nlohmann::json& s) {
    epoch_ = s.at("epoch").get<long>();
    cursor_ = s.at("cursor").get<std::size_t>();
    rebuild_epoch();
    if (cursor_ > epoch_batches_.size())
      throw StateError("task stream restore: cursor out of range");
  }

 private:
  void rebuild_epoch() {
    std::uint64_t epoch_seed = mix_seed(seed_, task_index_, static_cast<std::uint64_t>(epoch_));
    switch (spec_.kind) {
      case TaskKind::kResponse:
        epoch_batches_ = make_batches(response_, vocab_, batch_size_, epoch_seed, max_len_);
        break;
      case TaskKind::kQuickThought:
        epoch_batches_ = make_batches(triplet_, vocab_, batch_size_, epoch_seed, max_len_);
        break;
      case TaskKind::kNli:
        epoch_batches_ = make_batches(nli_, vocab_, batch_size_, epoch_seed, max_len_);
        break;
      case TaskKind::kTranslation:
        epoch_batches_ = make_batches(translation_, vocab_, batch_size_, epoch_seed, max_len_);
        break;
    }
  }

  std::vector<TaskBatch> dev_batches(int max_examples) const {
    std::uint64_t dev_seed = mix_seed(seed_, task_index_, 0xDEFull);
    switch (spec_.kind) {
      case TaskKind::kResponse: {
        auto slice = dev_response_;
        if (static_cast<int>(slice.size()) > max_examples) slice.resize(static_cast<std::size_t>(max_examples));
        return make_batches(slice, vocab_, batch_size_, dev_seed, max_len_);
      }
      case TaskKind::kQuickThought: {
        auto slice = dev_triplet_;
        if (static_cast<int>(slice.size()) > max_examples) slice.resize(static_cast<std::size_t>(max_examples));
        return make_batches(slice, vocab_, batch_size_, dev_seed, max_len_);
      }
      case TaskKind::kNli: {
        auto slice = dev_nli_;
        if (static_cast<int>(slice.size()) > max_examples) slice.resize(static_cast<std::size_t>(max_examples));
        return make_batches(slice, vocab_, batch_size_, dev_seed, max_len_);
      }
      case TaskKind::kTranslation: {
        auto slice = dev_translation_;
        if (static_cast<int>(slice.size()) > max_examples) slice.resize(static_cast<std::size_t>(max_examples));
        return make_batches(slice, vocab_, batch_size_, dev_seed, max_len_);
      }
    }
    return {};
  }

  TaskSpec spec_;
  std::size_t task_index_;
  const Vocabulary& vocab_;
  int batch_size_;
  std::uint64_t seed_;
  int max_len_;
  std::vector<ResponseExample> response_, dev_response_;
  std::vector<TripletExample> triplet_, dev_triplet_;
  std::vector<NliExample> nli_, dev_nli_;
  std::vector<TranslationExample> translation_, dev_translation_;
  std::vector<TaskBatch> epoch_batches_;
  long epoch_ = 0;
  std::size_t cursor_ = 0;
};

struct StepResult {
  long step = 0;
  std::string task_name;
  TaskKind kind = TaskKind::kTranslation;
  double loss = 0.0;
};

// Round-robin multi-task SGD. One task per step; the embedding gradient
// multiplier scales only the word and char n-gram table updates. Aborts
// with diagnostics on any non-finite loss or gradient.
class Trainer {
 public:
  explicit Trainer(TrainConfig config) : config_(std::move(config)) {
    config_.validate();
    Vocabulary vocab = Vocabulary::load(config_.vocab_path);
    model_ = init_model(config_.profile, std::move(vocab), config_.seed);
    open_streams();
  }

  Trainer(TrainConfig config, const std::string& resume_checkpoint)
      : config_(std::move(config)) {
    config_.validate();
    Checkpoint ckpt = load_checkpoint(resume_checkpoint);
    if (ckpt.trainer_state.is_null())
      throw StateError("resume: checkpoint has no trainer state");
    model_ = restore_model(ckpt, config_.vocab_path);
    open_streams();
    step_ = ckpt.trainer_state.at("step").get<long>();
    const nlohmann::json& streams = ckpt.trainer_state.at("streams");
    for (std::size_t i = 0; i < streams_.size(); ++i)
      streams_[i].restore(streams.at(config_.roster[i].name));
  }

  Model& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  long step_count() const { return step_; }

  StepResult step() {
    std::size_t task_index = schedule_next(step_, streams_.size());
    TaskStream& stream = streams_[task_index];
    TaskBatch batch = stream.next();
    double loss = train_step(batch, stream.spec().name);
    StepResult result{step_, stream.spec().name, batch.kind, loss};
    ++step_;
    return result;
  }

  // forward + backward + SGD update on one batch (which must match the
  // scheduled task when called through step())
  double train_step(const TaskBatch& batch, const std::string& task_name) {
    Graph g;
    Value loss = task_loss(g, model_, batch, config_.negative_scope);
    double loss_value = g.scalar_value(loss);
    if (!std::isfinite(loss_value))
      throw NumericError(diagnostics("non-finite loss", task_name, loss_value));
    g.backward(loss);
    apply_sgd(task_name, loss_value);
    return loss_value;
  }

  void run() {
    namespace fs = std::filesystem;
    if (config_.out_dir.empty())
      throw ConfigError("train config: out_dir is required for run()");
    fs::create_directories(config_.out_dir);
    while (step_ < config_.total_steps) {
      StepResult r = step();
      record(r);
      bool checkpoint_now =
          (config_.checkpoint_every > 0 && r.step > 0 &&
           (r.step + 1) % config_.checkpoint_every == 0) ||
          r.step + 1 == config_.total_steps;
      if (checkpoint_now) {
        evaluate_dev(r.step + 1);
        std::string name = r.step + 1 == config_.total_steps
                               ? "checkpoint_final.ckpt"
                               : "checkpoint_" + std::to_string(r.step + 1) + ".ckpt";
        save_checkpoint(model_, (fs::path(config_.out_dir) / name).string(),
                        config_.vocab_path, trainer_state());
      }
    }
    write_report((fs::path(config_.out_dir) / "train_report.json").string());
  }

  nlohmann::json trainer_state() const {
    nlohmann::json streams;
    for (std::size_t i = 0; i < streams_.size(); ++i)
      streams[config_.roster[i].name] = streams_[i].state();
    return nlohmann::json{{"step", step_}, {"streams", streams}};
  }

  void write_report(const std::string& path) const {
    nlohmann::json tasks;
    for (std::size_t i = 0; i < config_.roster.size(); ++i) {
      const TaskSpec& spec = config_.roster[i];
      tasks[spec.name] = nlohmann::json{{"kind", task_kind_name(spec.kind)},
                                        {"losses", loss_series_[i]},
                                        {"ema", ema_[i]},
                                        {"dev_losses", dev_series_[i]}};
    }
    nlohmann::json report{{"version", 1},
                          {"config", config_.to_json()},
                          {"steps_completed", step_},
                          {"tasks", tasks}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write training report " + path);
    out << report.dump(2) << "\n";
  }

 private:
  void open_streams() {
    streams_.reserve(config_.roster.size());
    for (std::size_t i = 0; i < config_.roster.size(); ++i)
      streams_.emplace_back(config_.roster[i], i, model_.vocab, config_.batch_size,
                            config_.seed, config_.profile.max_len);
    loss_series_.assign(config_.roster.size(), nlohmann::json::array());
    dev_series_.assign(config_.roster.size(), nlohmann::json::array());
    ema_.assign(config_.roster.size(), std::nan(""));
  }

  // p -= lr * grad, then times the multiplier for the flagged embedding
  // tables; the multiplier is applied as a separate final factor so the
  // update ratio against an unmultiplied run is exact
  void apply_sgd(const std::string& task_name, double loss_value) {
    for (NamedParam& np : model_.named()) {
      Tensor& t = *np.tensor;
      if (t.grad.empty()) continue;
      double mult = np.is_embedding ? config_.embedding_grad_multiplier : 1.0;
      double gsq = 0.0;
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        gsq += t.grad[i] * t.grad[i];
        t.values[i] -= sgd_update_value(config_.learning_rate, t.grad[i], mult);
      }
      if (!std::isfinite(gsq))
        throw NumericError(diagnostics("non-finite gradient in " + np.name,
                                       task_name, loss_value));
      t.zero_grad();
    }
  }

  std::string diagnostics(const std::string& what, const std::string& task,
                          double loss_value) {
    std::string msg = "training aborted: " + what + " at step " +
                      std::to_string(step_) + ", task " + task;
    if (std::isfinite(loss_value)) msg += ", loss " + std::to_string(loss_value);
    std::string norms;
    for (const NamedParam& np : model_.named()) {
      if (np.tensor->grad.empty()) continue;
      norms += norms.empty() ? "" : ", ";
      norms += np.name + "=" + std::to_string(np.tensor->grad_norm());
    }
    if (!norms.empty()) msg += "; grad norms: " + norms;
    return msg;
  }

  void record(const StepResult& r) {
    std::size_t i = schedule_next(r.step, streams_.size());
    loss_series_[i].push_back({r.step, r.loss});
    double& ema = ema_[i];
    ema = std::isnan(ema) ? r.loss
                          : config_.ema_decay * ema + (1.0 - config_.ema_decay) * r.loss;
  }

  void evaluate_dev(long at_step) {
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      double loss = streams_[i].dev_loss(model_, config_.negative_scope,
                                         config_.max_dev_examples);
      if (!std::isnan(loss)) dev_series_[i].push_back({at_step, loss});
    }
  }

  TrainConfig config_;
  Model model_;
  std::vector<TaskStream> streams_;
  long step_ = 0;
  std::vector<nlohmann::json> loss_series_;
  std::vector<nlohmann::json> dev_series_;
  std::vector<double> ema_;
};

}  // namespace xling
