// Copyright 2026 The cfnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfnet/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cfnet/errors.h"

namespace cfnet {

namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kPass1Stream = 2;
constexpr std::uint64_t kPass2Stream = 3;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_widths(const nlohmann::json& j, const std::string& key) {
  std::vector<std::size_t> out;
  if (!j.is_array()) throw ConfigError("'" + key + "' must be a list of widths");
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ConfigError("'" + key + "' must hold positive integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

double number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
  return j.get<double>();
}

std::size_t count(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError("'" + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

}  // namespace

Var class1_probability(Var distribution) { return ops::column(distribution, 1); }

Var loss_l1(Var y_hat, Var y) { return ops::mse(y_hat, y); }

Var loss_l2(Var y_hat, Var y_hat_cf) {
  return ops::mse(y_hat, ops::scale_shift(y_hat_cf, -1.0, 1.0));
}

Var loss_l3(Var x, Var x_cf) { return ops::mse(x, x_cf); }

Var loss_l2_multiclass(Var y_hat_cf, Var desired) {
  const Tensor& t = desired.value();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::size_t ones = 0;
    for (double v : t.row(r)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = 2;
      }
    }
    if (ones != 1) throw DimensionError("desired outcome row " + std::to_string(r) + " is not one-hot");
  }
  return ops::mse(y_hat_cf, desired);
}

std::string mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::kStandard: return "standard";
    case TrainMode::kBceAblation: return "bce_ablation";
    case TrainMode::kSingleBp: return "single_bp";
    case TrainMode::kSeparate: return "separate";
    case TrainMode::kNoPassP: return "nopass_p";
    case TrainMode::kPosthoc: return "posthoc";
    case TrainMode::kBlackbox: return "blackbox";
    case TrainMode::kMulticlass: return "multiclass";
    case TrainMode::kNoFreeze: return "nofreeze";
  }
  return "?";
}

TrainMode parse_mode(const std::string& s) {
  for (TrainMode m : {TrainMode::kStandard, TrainMode::kBceAblation, TrainMode::kSingleBp,
                      TrainMode::kSeparate, TrainMode::kNoPassP, TrainMode::kPosthoc,
                      TrainMode::kBlackbox, TrainMode::kMulticlass, TrainMode::kNoFreeze}) {
    if (mode_name(m) == s) return m;
  }
  throw ConfigError("unknown training mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw ConfigError("lambdas must be >= 0");
  if (!(lr > 0)) throw ConfigError("lr must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(clip > 0)) throw ConfigError("clip must be > 0");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must lie in [0,1)");
  if (latent == 0) throw ConfigError("latent must be > 0");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["lambda1"] = lambda1;
  j["lambda2"] = lambda2;
  j["lambda3"] = lambda3;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["clip"] = clip;
  j["dropout"] = dropout;
  j["seed"] = seed;
  j["mode"] = mode_name(mode);
  j["desired_class"] = desired_class;
  j["enforce_immutable"] = enforce_immutable;
  j["encoder_hidden"] = encoder_hidden;
  j["latent"] = latent;
  j["predictor_hidden"] = predictor_hidden;
  j["generator_hidden"] = generator_hidden;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training config must be an object");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "lambda1") {
      c.lambda1 = number(v, key);
    } else if (key == "lambda2") {
      c.lambda2 = number(v, key);
    } else if (key == "lambda3") {
      c.lambda3 = number(v, key);
    } else if (key == "lr") {
      c.lr = number(v, key);
    } else if (key == "batch_size") {
      c.batch_size = count(v, key);
    } else if (key == "epochs") {
      c.epochs = count(v, key);
    } else if (key == "clip") {
      c.clip = number(v, key);
    } else if (key == "dropout") {
      c.dropout = number(v, key);
    } else if (key == "seed") {
      c.seed = count(v, key);
    } else if (key == "mode") {
      if (!v.is_string()) throw ConfigError("'mode' must be a string");
      c.mode = parse_mode(v.get<std::string>());
    } else if (key == "desired_class") {
      if (!v.is_number_integer()) throw ConfigError("'desired_class' must be an integer");
      c.desired_class = v.get<int>();
    } else if (key == "enforce_immutable") {
      if (!v.is_boolean()) throw ConfigError("'enforce_immutable' must be true or false");
      c.enforce_immutable = v.get<bool>();
    } else if (key == "encoder_hidden") {
      c.encoder_hidden = parse_widths(v, key);
    } else if (key == "latent") {
      c.latent = count(v, key);
    } else if (key == "predictor_hidden") {
      c.predictor_hidden = parse_widths(v, key);
    } else if (key == "generator_hidden") {
      c.generator_hidden = parse_widths(v, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::parse(const std::string& text) {
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.ends_with("_hidden")) {
      nlohmann::json arr = nlohmann::json::array();
      std::istringstream parts(value);
      std::string part;
      while (std::getline(parts, part, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        try {
          arr.push_back(std::stoll(part));
        } catch (const std::exception&) {
          throw ConfigError("config line " + std::to_string(line_no) + ": bad width '" + part + "'");
        }
      }
      j[key] = arr;
    } else if (value == "true" || value == "false") {
      j[key] = value == "true";
    } else {
      try {
        j[key] = nlohmann::json::parse(value);
      } catch (const nlohmann::json::exception&) {
        j[key] = value;
      }
    }
  }
  return from_json(j);
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ModelDims model_dims(const TrainConfig& config, const FeatureSchema& schema,
                     bool with_generator) {
  GeneratorWiring wiring = GeneratorWiring::kJoint;
  if (config.mode == TrainMode::kSeparate) wiring = GeneratorWiring::kSeparate;
  if (config.mode == TrainMode::kNoPassP) wiring = GeneratorWiring::kNoPassP;
  const std::size_t d = schema.encoded_width();
  const std::size_t hidden = std::max<std::size_t>(50, 2 * d);
  const std::vector<std::size_t> enc =
      config.encoder_hidden.empty() ? std::vector<std::size_t>{hidden} : config.encoder_hidden;
  const std::vector<std::size_t> gen =
      config.generator_hidden.empty() ? std::vector<std::size_t>{hidden} : config.generator_hidden;
  return ModelDims::from_hidden(d, schema.num_classes(), enc, config.latent,
                                config.predictor_hidden, gen, wiring, with_generator);
}

CounterNet make_model(const TrainConfig& config, const FeatureSchema& schema,
                      bool with_generator) {
  return CounterNet(schema, model_dims(config, schema, with_generator), config.seed);
}

std::string LossReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,l1,l2,l3,acc,validity\n";
  for (const EpochStats& e : epochs) {
    os << e.epoch << ',' << e.l1 << ',' << e.l2 << ',' << e.l3 << ',' << e.accuracy << ','
       << e.validity << '\n';
  }
  return os.str();
}

void check_loss(double value, const char* name) {
  if (!std::isfinite(value) || value > kDivergenceBound) {
    throw NumericError(std::string("training diverged: ") + name + " = " +
                       std::to_string(value));
  }
}

Trainer::Trainer(CounterNet& model, TrainConfig config, Surrogate surrogate)
    : model_(model),
      config_(std::move(config)),
      surrogate_(std::move(surrogate)),
      shuffle_rng_(derive_seed(config_.seed, kShuffleStream)),
      drop1_rng_(derive_seed(config_.seed, kPass1Stream)),
      drop2_rng_(derive_seed(config_.seed, kPass2Stream)) {
  config_.validate();
  if (config_.mode == TrainMode::kBlackbox && !surrogate_) {
    throw ConfigError("blackbox mode needs a surrogate model");
  }
  const std::size_t k = model_.schema().num_classes();
  if (!multiclass() && k != 2) {
    throw ConfigError("mode '" + mode_name(config_.mode) + "' needs a binary label; use multiclass");
  }
  if (multiclass() && config_.desired_class >= static_cast<int>(k)) {
    throw ConfigError("desired_class out of range");
  }
  immutable_ = model_.schema().immutable_columns();
  project_ = config_.enforce_immutable && model_.schema().has_immutable();
  all_ = model_.params();
  predictor_params_ = model_.params(Partition::kEncoder);
  for (Param* p : model_.params(Partition::kPredictor)) predictor_params_.push_back(p);
  generator_params_ = model_.params(Partition::kGenerator);
  adam_predictor_ = AdamState(predictor_params_);
  if (model_.has_generator()) {
    adam_generator_ = AdamState(generator_params_);
    adam_all_ = AdamState(all_);
  }
}

Tensor Trainer::l1_targets(const Tensor& x, const Tensor& y) const {
  if (config_.mode != TrainMode::kBlackbox) return y;
  Tensor t = surrogate_(x);
  if (!t.same_shape(y)) {
    throw DimensionError("surrogate returned " + t.shape_string() + ", expected " +
                         y.shape_string());
  }
  return t;
}

Var Trainer::prediction_loss(Var y_hat, Var target) {
  if (multiclass()) return loss_l1(y_hat, target);
  Var p = class1_probability(y_hat);
  Var t = class1_probability(target);
  if (config_.mode == TrainMode::kBceAblation) return ops::bce(p, t);
  return loss_l1(p, t);
}

Var Trainer::validity_loss(Var y_hat, Var y_hat_cf) {
  if (multiclass()) {
    const Tensor& pred = y_hat.value();
    Tensor desired(pred.rows(), pred.cols());
    for (std::size_t r = 0; r < pred.rows(); ++r) {
      const std::size_t c = config_.desired_class >= 0
                                ? static_cast<std::size_t>(config_.desired_class)
                                : (argmax(pred.row(r)) + 1) % pred.cols();
      desired(r, c) = 1.0;
    }
    return loss_l2_multiclass(y_hat_cf, y_hat.tape->constant(std::move(desired)));
  }
  Var p = class1_probability(y_hat);
  Var p_cf = class1_probability(y_hat_cf);
  if (config_.mode == TrainMode::kBceAblation) {
    return ops::bce(p_cf, ops::scale_shift(p, -1.0, 1.0));
  }
  return loss_l2(p, p_cf);
}

double Trainer::predictor_pass(const Tensor& x, const Tensor& y) {
  Tape tape;
  Var xv = tape.constant(x);
  Var target = tape.constant(l1_targets(x, y));
  Var z = model_.latent(tape, xv, config_.dropout, true, drop1_rng_);
  Var y_hat = model_.predict(tape, z, config_.dropout, true, drop1_rng_).second;
  Var l1 = prediction_loss(y_hat, target);
  const double l1v = l1.value()[0];
  check_loss(l1v, "L1");
  tape.backward(ops::scale_shift(l1, config_.lambda1));
  clip_global_norm(predictor_params_, config_.clip);
  adam_predictor_.update(predictor_params_, config_.lr);
  zero_grads(all_);
  return l1v;
}

std::pair<double, double> Trainer::generator_pass(const Tensor& x, const Tensor& y) {
  (void)y;
  if (!model_.has_generator()) throw ConfigError("model has no generator");
  Tape tape;
  Var xv = tape.constant(x);
  ForwardVars f = model_.forward(tape, xv, config_.dropout, true, drop2_rng_,
                                 project_ ? &immutable_ : nullptr);
  Var l2 = validity_loss(f.y_hat, f.y_hat_cf);
  Var l3 = loss_l3(xv, f.x_cf);
  const double l2v = l2.value()[0], l3v = l3.value()[0];
  check_loss(l2v, "L2");
  check_loss(l3v, "L3");
  if (config_.lambda2 == 0.0 && config_.lambda3 == 0.0) return {l2v, l3v};
  tape.backward(ops::add(ops::scale_shift(l2, config_.lambda2),
                         ops::scale_shift(l3, config_.lambda3)));
  if (config_.mode == TrainMode::kNoFreeze) {
    clip_global_norm(all_, config_.clip);
    adam_all_.update(all_, config_.lr);
  } else {
    clip_global_norm(generator_params_, config_.clip);
    adam_generator_.update(generator_params_, config_.lr);
  }
  zero_grads(all_);
  return {l2v, l3v};
}

StepLosses Trainer::joint_pass(const Tensor& x, const Tensor& y) {
  Tape tape;
  Var xv = tape.constant(x);
  Var target = tape.constant(l1_targets(x, y));
  ForwardVars f = model_.forward(tape, xv, config_.dropout, true, drop1_rng_,
                                 project_ ? &immutable_ : nullptr);
  Var l1 = prediction_loss(f.y_hat, target);
  Var l2 = validity_loss(f.y_hat, f.y_hat_cf);
  Var l3 = loss_l3(xv, f.x_cf);
  StepLosses out{l1.value()[0], l2.value()[0], l3.value()[0]};
  check_loss(out.l1, "L1");
  check_loss(out.l2, "L2");
  check_loss(out.l3, "L3");
  Var total = ops::add(ops::scale_shift(l1, config_.lambda1),
                       ops::add(ops::scale_shift(l2, config_.lambda2),
                                ops::scale_shift(l3, config_.lambda3)));
  tape.backward(total);
  clip_global_norm(all_, config_.clip);
  adam_all_.update(all_, config_.lr);
  zero_grads(all_);
  return out;
}

StepLosses Trainer::step(const Tensor& x, const Tensor& y) {
  if (config_.mode == TrainMode::kSingleBp) return joint_pass(x, y);
  StepLosses out;
  out.l1 = predictor_pass(x, y);
  if (model_.has_generator()) std::tie(out.l2, out.l3) = generator_pass(x, y);
  return out;
}

EpochStats Trainer::evaluate(const Dataset& data) const {
  EpochStats s;
  const Inference inf = model_.infer(data.x, project_);
  const std::vector<std::size_t> pred = argmax_rows(inf.y_hat);
  std::size_t correct = 0, flipped = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  if (model_.has_generator()) {
    const std::vector<std::size_t> cf = model_.predict_labels(inf.x_cf);
    for (std::size_t i = 0; i < pred.size(); ++i) flipped += cf[i] != pred[i];
  }
  const double n = static_cast<double>(std::max<std::size_t>(pred.size(), 1));
  s.accuracy = static_cast<double>(correct) / n;
  s.validity = static_cast<double>(flipped) / n;
  return s;
}

// phase 0: every pass of the mode; 1: predictor only; 2: generator only.
void Trainer::run_epoch(const Dataset& train, int phase, EpochStats& stats) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng_);
  double l1 = 0.0, l2 = 0.0, l3 = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    const std::span<const std::size_t> rows(order.data() + start, end - start);
    const Tensor x = gather_rows(train.x, rows);
    const Tensor y = gather_rows(train.y, rows);
    StepLosses s;
    if (phase == 0) {
      s = step(x, y);
    } else if (phase == 1) {
      s.l1 = predictor_pass(x, y);
    } else {
      std::tie(s.l2, s.l3) = generator_pass(x, y);
    }
    l1 += s.l1;
    l2 += s.l2;
    l3 += s.l3;
    ++batches;
  }
  const double nb = static_cast<double>(std::max<std::size_t>(batches, 1));
  stats.l1 = l1 / nb;
  stats.l2 = l2 / nb;
  stats.l3 = l3 / nb;
}

LossReport Trainer::fit(const Dataset& train, const Dataset* validation) {
  if (train.size() == 0) throw ConfigError("training set is empty");
  if (train.x.cols() != model_.schema().encoded_width()) {
    throw DimensionError("training data width does not match the model");
  }
  LossReport report;
  std::vector<int> phases;
  if (!model_.has_generator()) {
    phases.assign(config_.epochs, 1);
  } else if (config_.mode == TrainMode::kPosthoc) {
    phases.assign(config_.epochs, 1);
    phases.insert(phases.end(), config_.epochs, 2);
  } else {
    phases.assign(config_.epochs, 0);
  }
  const Dataset& eval_set = validation != nullptr ? *validation : train;
  for (std::size_t e = 0; e < phases.size(); ++e) {
    EpochStats stats;
    run_epoch(train, phases[e], stats);
    const EpochStats ev = evaluate(eval_set);
    stats.epoch = e + 1;
    stats.accuracy = ev.accuracy;
    stats.validity = ev.validity;
    report.epochs.push_back(stats);
  }
  return report;
}

TrainResult train(const Dataset& data, const TrainConfig& config, const Dataset* validation,
                  Surrogate surrogate) {
  TrainResult out{make_model(config, data.schema), {}};
  Trainer trainer(out.model, config, std::move(surrogate));
  out.report = trainer.fit(data, validation);
  return out;
}

}  // namespace cfnet
