#include "arg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include <json.hpp>

#include "arg/error.hpp"
#include "arg/log.hpp"

namespace arg {

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state has wrong size");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(grads[i].same_shape(*params[i]), "adam_step", *params[i], grads[i]);
    require_shape(state.m[i].same_shape(*params[i]), "adam_step moment", *params[i], state.m[i]);
  }
  state.t += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

std::vector<LrStep> default_lr_schedule(std::size_t epochs) {
  const std::size_t cut = (2 * epochs + 2) / 3;
  std::vector<LrStep> s{{0, 2e-4}};
  if (cut > 0 && cut < epochs) s.push_back({cut, 1e-5});
  return s;
}

std::string_view to_string(InferenceMode m) noexcept {
  switch (m) {
    case InferenceMode::Single: return "single";
    case InferenceMode::Tsn: return "tsn";
    case InferenceMode::Sliding: return "sliding";
  }
  return "single";
}

InferenceMode parse_inference_mode(std::string_view s) {
  if (s == "single") return InferenceMode::Single;
  if (s == "tsn") return InferenceMode::Tsn;
  if (s == "sliding") return InferenceMode::Sliding;
  throw ConfigError("unknown inference mode '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (eval.stride < 1) throw ConfigError("stride must be at least 1");
  if (eval.tsn_frames < 1) throw ConfigError("tsn_frames must be at least 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  const auto s = schedule();
  if (s.front().epoch != 0) throw ConfigError("lr schedule must start at epoch 0");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i].lr >= 0.0) || !std::isfinite(s[i].lr)) throw ConfigError("learning rates must be finite and >= 0");
    if (i > 0 && s[i].epoch <= s[i - 1].epoch) throw ConfigError("lr schedule epochs must increase");
  }
}

std::vector<LrStep> TrainConfig::schedule() const {
  return lr_schedule.empty() ? default_lr_schedule(epochs) : lr_schedule;
}

double TrainConfig::lr_at(std::size_t epoch) const {
  double lr = 0.0;
  for (const LrStep& s : schedule())
    if (s.epoch <= epoch) lr = s.lr;
  return lr;
}

std::string metrics_to_json(const EpochMetrics& m) {
  nlohmann::json j = {{"epoch", m.epoch},         {"loss", m.loss}, {"group_acc", m.group_acc},
                      {"indiv_acc", m.indiv_acc}, {"lr", m.lr},     {"wallclock", m.wallclock}};
  if (m.evaluated) {
    j["eval_group_acc"] = m.eval_group_acc;
    j["eval_indiv_acc"] = m.eval_indiv_acc;
  }
  return j.dump();
}

ModelConfig resolve_model_config(const ModelConfig& config, const DatasetInfo& info) {
  ModelConfig out = config;
  auto fill = [](std::size_t& field, std::size_t from_data, const char* what) {
    if (field == 0) {
      field = from_data;
    } else if (field != from_data) {
      throw ConfigError(std::string(what) + " is " + std::to_string(field) + " but the dataset has " +
                        std::to_string(from_data));
    }
  };
  fill(out.feature_dim, info.feature_dim, "feature_dim");
  fill(out.action_classes, info.action_classes, "action_classes");
  fill(out.activity_classes, info.activity_classes, "activity_classes");
  out.validate();
  return out;
}

namespace {

std::vector<std::size_t> repeat_labels(const std::vector<std::size_t>& labels, std::size_t k) {
  std::vector<std::size_t> out;
  out.reserve(labels.size() * k);
  for (std::size_t r = 0; r < k; ++r) out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

struct Job {
  ActorSet actors;
  std::vector<std::size_t> labels;
  std::size_t group_label = 0;
};

void run_jobs(const Model& model, const std::vector<Job>& jobs, double lambda, std::size_t threads,
              std::vector<SampleGradient>& out) {
  out.assign(jobs.size(), {});
  auto work = [&](std::size_t i) {
    out[i] = loss_and_gradient(model, jobs[i].actors, jobs[i].group_label, jobs[i].labels, lambda);
  };
  const std::size_t workers = std::min(threads, jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < jobs.size(); i += workers) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Group scores plus per-identity action probabilities (n×C_I) for one video.
struct VideoPrediction {
  PooledScores group;
  Tensor actions;
};

void accumulate_actions(Tensor& acc, const Tensor& individual_logits, std::size_t n) {
  const Tensor probs = softmax_rows(individual_logits);
  for (std::size_t r = 0; r < probs.rows(); ++r)
    for (std::size_t c = 0; c < probs.cols(); ++c) acc(r % n, c) += probs(r, c);
}

VideoPrediction predict_video_full(const Model& model, const SceneSample& sample, const EvalOptions& o) {
  const std::size_t k = model.config.frames;
  const std::size_t n = sample.actor_count();
  const std::size_t total = sample.frames.size();
  VideoPrediction out;
  out.actions = Tensor(n, model.config.action_classes);
  std::vector<ActorSet> windows;
  if (o.mode == InferenceMode::Sliding) {
    if (total < k) {
      throw InferenceError("video of " + std::to_string(total) + " frames is shorter than the window K = " +
                           std::to_string(k));
    }
    for (std::size_t start = 0; start + k <= total; start += o.stride) {
      windows.push_back(assemble_temporal_actorset(std::span(sample.frames).subspan(start, k)));
    }
  } else if (o.mode == InferenceMode::Single) {
    const auto ids = sample_frames(total, k, SampleMode::Center, std::uint64_t{0});
    windows.push_back(assemble_temporal_actorset(sample.frames, ids));
  } else {
    for (std::size_t id : sample_frames(total, o.tsn_frames, SampleMode::Center, std::uint64_t{0}))
      windows.push_back(sample.frames[id]);
  }
  std::vector<Tensor> scores;
  for (const ActorSet& w : windows) {
    Prediction p = forward(model, w);
    scores.push_back(o.pooling == ScorePooling::Probabilities ? softmax_rows(p.group_logits) : p.group_logits);
    accumulate_actions(out.actions, p.individual_logits, n);
  }
  out.group = pool_scores(std::move(scores));
  return out;
}

}  // namespace

PooledScores predict_video(const Model& model, const SceneSample& sample, const EvalOptions& options) {
  return predict_video_full(model, sample, options).group;
}

EvalResult evaluate(const Dataset& data, const Model& model, const EvalOptions& options) {
  const auto& info = data.info;
  const auto& mc = model.config;
  if (info.feature_dim != mc.feature_dim || info.action_classes != mc.action_classes ||
      info.activity_classes != mc.activity_classes) {
    throw ConfigError("model dimensions (d=" + std::to_string(mc.feature_dim) + ", C_I=" +
                      std::to_string(mc.action_classes) + ", C_G=" + std::to_string(mc.activity_classes) +
                      ") do not match the dataset (d=" + std::to_string(info.feature_dim) + ", C_I=" +
                      std::to_string(info.action_classes) + ", C_G=" + std::to_string(info.activity_classes) +
                      ")");
  }
  EvalResult r;
  r.samples = data.size();
  r.confusion.assign(mc.activity_classes, std::vector<std::size_t>(mc.activity_classes, 0));
  std::size_t group_hits = 0, actor_hits = 0, actors = 0;
  for (const SceneSample& s : data.samples) {
    VideoPrediction p = predict_video_full(model, s, options);
    r.confusion[s.group_label][p.group.prediction] += 1;
    if (p.group.prediction == s.group_label) ++group_hits;
    for (std::size_t i = 0; i < s.actor_count(); ++i) {
      if (argmax_row(p.actions, i) == s.action_labels[i]) ++actor_hits;
      ++actors;
    }
  }
  if (r.samples > 0) r.group_accuracy = static_cast<double>(group_hits) / static_cast<double>(r.samples);
  if (actors > 0) r.individual_accuracy = static_cast<double>(actor_hits) / static_cast<double>(actors);
  return r;
}

TrainResult train(const Dataset& data, const TrainConfig& config, const Dataset* eval_data,
                  const EpochCallback& on_epoch) {
  if (data.empty()) throw ConfigError("training dataset is empty");
  config.validate();
  validate_dataset(data);
  const ModelConfig mc = resolve_model_config(config.model, data.info);
  if (data.info.frames < mc.frames) {
    throw ConfigError("videos have " + std::to_string(data.info.frames) + " frames but K = " +
                      std::to_string(mc.frames));
  }

  TrainResult result{init_model(mc, config.seed), {}};
  Model& model = result.model;
  auto named = parameter_list(model.params);
  std::vector<Tensor*> params;
  for (auto& p : named) params.push_back(p.tensor);

  AdamState adam;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.epsilon = config.epsilon;

  std::mt19937_64 rng(config.seed ^ 0x5452414eULL);
  std::vector<std::size_t> order(data.size());
  const auto start = std::chrono::steady_clock::now();
  std::vector<Job> jobs;
  std::vector<SampleGradient> grads;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.lr_at(epoch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t group_hits = 0, actor_hits = 0, actor_total = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      jobs.clear();
      for (std::size_t i = b; i < end; ++i) {
        const SceneSample& s = data.samples[order[i]];
        const auto ids = sample_frames(s.frames.size(), mc.frames, SampleMode::Random, rng);
        jobs.push_back({assemble_temporal_actorset(s.frames, ids), repeat_labels(s.action_labels, mc.frames),
                        s.group_label});
      }
      run_jobs(model, jobs, config.lambda, config.threads, grads);

      std::vector<Tensor> total = grads[0].grads;
      for (std::size_t i = 1; i < grads.size(); ++i)
        for (std::size_t p = 0; p < total.size(); ++p) add_inplace(total[p], grads[i].grads[p]);
      for (std::size_t i = 0; i < grads.size(); ++i) {
        loss_sum += grads[i].loss;
        if (argmax_row(grads[i].prediction.group_logits) == jobs[i].group_label) ++group_hits;
        const Tensor& il = grads[i].prediction.individual_logits;
        for (std::size_t r = 0; r < il.rows(); ++r)
          if (argmax_row(il, r) == jobs[i].labels[r]) ++actor_hits;
        actor_total += il.rows();
      }
      adam_step(params, total, adam, lr);
    }

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.loss = loss_sum / static_cast<double>(data.size());
    m.group_acc = static_cast<double>(group_hits) / static_cast<double>(data.size());
    m.indiv_acc = actor_total ? static_cast<double>(actor_hits) / static_cast<double>(actor_total) : 0.0;
    m.lr = lr;
    const bool last = epoch + 1 == config.epochs;
    if (eval_data && config.eval_every > 0 && ((epoch + 1) % config.eval_every == 0 || last)) {
      EvalResult e = evaluate(*eval_data, model, config.eval);
      m.evaluated = true;
      m.eval_group_acc = e.group_accuracy;
      m.eval_indiv_acc = e.individual_accuracy;
    }
    m.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_info("epoch " + std::to_string(m.epoch) + "/" + std::to_string(config.epochs) + " loss " +
             std::to_string(m.loss) + " group_acc " + std::to_string(m.group_acc) +
             (m.evaluated ? " eval_group_acc " + std::to_string(m.eval_group_acc) : std::string{}));
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

}  // namespace arg
