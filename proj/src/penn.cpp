// Copyright (c) 2026 The crowdnav Authors
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

#include "crowdnav/penn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "crowdnav/errors.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav::penn
{

namespace
{

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }
double sigmoid(double s)
{
  if (s >= 0.0) {
    return 1.0 / (1.0 + std::exp(-s));
  }
  const double e = std::exp(s);
  return e / (1.0 + e);
}

struct Activations
{
  std::vector<Eigen::MatrixXd> pre;   // per layer, out x batch
  std::vector<Eigen::MatrixXd> post;  // ReLU outputs of hidden layers
};

// Runs the network on x (in x batch); fills `acts` when backprop is needed.
Eigen::MatrixXd run(const MlpMember& m, const Eigen::MatrixXd& x, Activations* acts)
{
  Eigen::MatrixXd a = x;
  const std::size_t n = m.layers.size();
  for (std::size_t l = 0; l < n; ++l) {
    Eigen::MatrixXd z = m.layers[l].weight * a;
    z.colwise() += m.layers[l].bias;
    if (acts != nullptr) {
      acts->post.push_back(a);
      acts->pre.push_back(z);
    }
    if (l + 1 < n) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

void checkWidth(const MlpMember& m, std::size_t n)
{
  if (n != static_cast<std::size_t>(m.inputDim())) {
    throw InvalidInput(
      "feature vector has length " + std::to_string(n) + ", model expects " +
      std::to_string(m.inputDim()));
  }
}

}  // namespace

std::size_t MlpMember::parameterCount() const
{
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

MlpMember makeMember(const std::vector<int>& widths, std::uint64_t seed)
{
  if (widths.size() < 2 || widths.back() != 2) {
    throw InvalidInput("network widths must end in the two-unit Gaussian head");
  }
  MlpMember m;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) {
        layer.weight(i, j) = u(rng);
      }
    }
    for (int i = 0; i < out; ++i) {
      layer.bias(i) = u(rng);
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

GaussianPrediction forward(const MlpMember& member, std::span<const double> x)
{
  checkWidth(member, x.size());
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd out = run(member, xv, nullptr);
  return {out(0, 0), softplus(out(1, 0)) + kVarFloor};
}

double nllLoss(const GaussianPrediction& pred, double label)
{
  const double r = label - pred.mean;
  return 0.5 * (std::log(pred.variance) + r * r / pred.variance) + kHalfLog2Pi;
}

double batchLoss(
  const MlpMember& member, const Eigen::MatrixXd& x, const Eigen::VectorXd& labels, Gradient* grad)
{
  checkWidth(member, static_cast<std::size_t>(x.rows()));
  const Eigen::Index batch = x.cols();
  Activations acts;
  const Eigen::MatrixXd out = run(member, x, grad != nullptr ? &acts : nullptr);

  Eigen::MatrixXd dout(2, batch);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double mean = out(0, b);
    const double s = out(1, b);
    const double var = softplus(s) + kVarFloor;
    const double r = labels(b) - mean;
    loss += 0.5 * (std::log(var) + r * r / var) + kHalfLog2Pi;
    dout(0, b) = -r / var;
    dout(1, b) = 0.5 * (1.0 / var - r * r / (var * var)) * sigmoid(s);
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  loss *= inv_batch;
  if (grad == nullptr) {
    return loss;
  }

  const std::size_t n = member.layers.size();
  grad->layers.resize(n);
  Eigen::MatrixXd delta = dout * inv_batch;
  for (std::size_t l = n; l-- > 0;) {
    grad->layers[l].weight.noalias() = delta * acts.post[l].transpose();
    grad->layers[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = member.layers[l].weight.transpose() * delta;
      delta = back.cwiseProduct((acts.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

Gradient backward(const MlpMember& member, std::span<const double> x, double label)
{
  checkWidth(member, x.size());
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd y(1);
  y(0) = label;
  Gradient g;
  batchLoss(member, xv, y, &g);
  return g;
}

std::vector<double*> parameterPointers(MlpMember& member)
{
  std::vector<double*> out;
  for (auto& l : member.layers) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) out.push_back(l.weight.data() + i);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias.data() + i);
  }
  return out;
}

std::vector<const double*> parameterPointers(const Gradient& grad)
{
  std::vector<const double*> out;
  for (const auto& l : grad.layers) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) out.push_back(l.weight.data() + i);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias.data() + i);
  }
  return out;
}

EnsemblePrediction predict(const Ensemble& ens, std::span<const double> x)
{
  const std::size_t d = ens.featureDim();
  if (x.size() != d) {
    throw InvalidInput(
      "feature vector has length " + std::to_string(x.size()) + ", model expects " +
      std::to_string(d));
  }
  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i) {
    z[i] = (x[i] - ens.norm.feature_mean[i]) / ens.norm.feature_std[i];
  }
  const double scale = ens.norm.label_scale;
  EnsemblePrediction p;
  p.members.reserve(ens.members.size());
  for (std::size_t j = 0; j < ens.members.size(); ++j) {
    const GaussianPrediction g = forward(ens.members[j], z);
    p.members.push_back({g.mean * scale, g.variance * scale * scale});
    p.mixture_mean += ens.weights[j] * g.mean * scale;
  }
  return p;
}

// ---------------------------------------------------------------------------
// training

void validate(const TrainConfig& cfg)
{
  if (!(cfg.lr > 0.0) || cfg.batch <= 0 || cfg.max_epochs <= 0 || !(cfg.lr_factor > 0.0) ||
      cfg.scheduler_patience <= 0 || cfg.early_stop_patience <= 0 || cfg.noise_std_frac < 0.0 ||
      cfg.members <= 0 || cfg.workers <= 0) {
    throw ConfigError("training parameters must be positive");
  }
  if (!(cfg.val_split > 0.0 && cfg.val_split < 1.0)) {
    throw ConfigError("train.val_split must lie in (0, 1)");
  }
}

PlateauTracker::PlateauTracker(double lr, const TrainConfig& cfg)
  : lr_(lr)
  , factor_(cfg.lr_factor)
  , sched_patience_(cfg.scheduler_patience)
  , stop_patience_(cfg.early_stop_patience)
  , min_improvement_(cfg.min_improvement)
  , best_(std::numeric_limits<double>::infinity())
{
}

PlateauTracker::Verdict PlateauTracker::update(double val_loss)
{
  if (val_loss < best_ - min_improvement_) {
    best_ = val_loss;
    stagnant_ = 0;
    since_reduce_ = 0;
    return Verdict::improved;
  }
  ++stagnant_;
  ++since_reduce_;
  if (since_reduce_ >= sched_patience_) {
    lr_ *= factor_;
    since_reduce_ = 0;
  }
  return stagnant_ >= stop_patience_ ? Verdict::stop : Verdict::stagnant;
}

namespace
{

struct Adam
{
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  long t{0};
  std::vector<double> m;
  std::vector<double> v;

  void step(std::vector<double*>& params, const std::vector<const double*>& grads, double lr)
  {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = *grads[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      *params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

struct Split
{
  Eigen::MatrixXd train_x;  // features x samples, normalised
  Eigen::VectorXd train_y;
  Eigen::MatrixXd val_x;
  Eigen::VectorXd val_y;
  std::vector<double> noise_std;  // per normalised feature
};

double evalLoss(const MlpMember& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
{
  constexpr Eigen::Index kChunk = 4096;
  double total = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); c += kChunk) {
    const Eigen::Index n = std::min(kChunk, x.cols() - c);
    total += batchLoss(m, x.middleCols(c, n), y.segment(c, n)) * static_cast<double>(n);
  }
  return total / static_cast<double>(x.cols());
}

struct MemberOutcome
{
  MlpMember member;
  double initial_val{0.0};
  double best_val{0.0};
  double final_val{0.0};
  int epochs{0};
  int best_epoch{0};
  std::vector<EpochRecord> curve;
};

MemberOutcome trainMember(const Split& split, const TrainConfig& cfg, int index)
{
  MemberOutcome out;
  const std::uint64_t seed = deriveSeed(cfg.seed, {stream::kTraining, static_cast<std::uint64_t>(index)});
  MlpMember m = makeMember(cfg.widths, seed);
  Rng rng = makeRng(seed, {1});
  std::normal_distribution<double> gauss(0.0, 1.0);

  out.initial_val = evalLoss(m, split.val_x, split.val_y);
  MlpMember best = m;
  out.best_val = out.initial_val;

  PlateauTracker tracker(cfg.lr, cfg);
  tracker.update(out.initial_val);
  Adam adam;
  auto params = parameterPointers(m);
  Gradient grad;
  const Eigen::Index n = split.train_x.cols();
  const Eigen::Index d = split.train_x.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::MatrixXd bx;
  Eigen::VectorXd by;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_total = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch, n - start);
      bx.resize(d, b);
      by.resize(b);
      for (Eigen::Index k = 0; k < b; ++k) {
        const Eigen::Index idx = order[static_cast<std::size_t>(start + k)];
        bx.col(k) = split.train_x.col(idx);
        by(k) = split.train_y(idx);
        for (Eigen::Index f = 0; f < d; ++f) {
          const double s = split.noise_std[static_cast<std::size_t>(f)];
          if (s > 0.0) {
            bx(f, k) += s * gauss(rng);
          }
        }
      }
      train_total += batchLoss(m, bx, by, &grad) * static_cast<double>(b);
      auto grads = parameterPointers(grad);
      adam.step(params, grads, tracker.lr());
    }
    const double lr_used = tracker.lr();
    const double val = evalLoss(m, split.val_x, split.val_y);
    out.curve.push_back({index, epoch, train_total / static_cast<double>(n), val, lr_used});
    out.epochs = epoch;
    out.final_val = val;
    const auto verdict = tracker.update(val);
    if (verdict == PlateauTracker::Verdict::improved) {
      best = m;
      out.best_val = val;
      out.best_epoch = epoch;
    } else if (verdict == PlateauTracker::Verdict::stop) {
      break;
    }
  }
  out.member = std::move(best);
  return out;
}

}  // namespace

Ensemble train(const data::Dataset& ds, const TrainConfig& cfg, TrainReport* report)
{
  validate(cfg);
  if (ds.samples.empty()) {
    throw InvalidInput("cannot train on an empty dataset");
  }
  const std::size_t d = ds.feature_dim;
  if (cfg.widths.empty() || static_cast<std::size_t>(cfg.widths.front()) != d) {
    throw InvalidInput(
      "dataset feature dim " + std::to_string(d) + " does not match model input dim " +
      std::to_string(cfg.widths.empty() ? 0 : cfg.widths.front()));
  }
  const std::size_t total = ds.samples.size();
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng split_rng = makeRng(cfg.seed, {stream::kTraining, 1000});
  std::shuffle(idx.begin(), idx.end(), split_rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.val_split * static_cast<double>(total)));
  n_val = std::clamp<std::size_t>(n_val, 1, total > 1 ? total - 1 : 1);
  const std::size_t n_train = total > 1 ? total - n_val : 1;

  Ensemble ens;
  ens.norm.label_scale = ds.meta.label_scale > 0.0 ? ds.meta.label_scale : 100.0;
  ens.norm.feature_mean.assign(d, 0.0);
  ens.norm.feature_std.assign(d, 0.0);
  for (std::size_t k = 0; k < n_train; ++k) {
    const auto& f = ds.samples[idx[k]].features;
    for (std::size_t i = 0; i < d; ++i) ens.norm.feature_mean[i] += f[i];
  }
  for (auto& v : ens.norm.feature_mean) v /= static_cast<double>(n_train);
  for (std::size_t k = 0; k < n_train; ++k) {
    const auto& f = ds.samples[idx[k]].features;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = f[i] - ens.norm.feature_mean[i];
      ens.norm.feature_std[i] += c * c;
    }
  }
  Split split;
  split.noise_std.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double s = std::sqrt(ens.norm.feature_std[i] / static_cast<double>(n_train));
    // constant features pass through unscaled and receive no noise
    ens.norm.feature_std[i] = s > 1e-12 ? s : 1.0;
    split.noise_std[i] = s > 1e-12 ? cfg.noise_std_frac : 0.0;
  }

  auto fill = [&](std::size_t from, std::size_t count, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    x.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(count));
    y.resize(static_cast<Eigen::Index>(count));
    for (std::size_t k = 0; k < count; ++k) {
      const auto& s = ds.samples[idx[from + k]];
      if (s.features.size() != d) {
        throw InvalidInput("sample has " + std::to_string(s.features.size()) + " features, expected " + std::to_string(d));
      }
      for (std::size_t i = 0; i < d; ++i) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          (s.features[i] - ens.norm.feature_mean[i]) / ens.norm.feature_std[i];
      }
      y(static_cast<Eigen::Index>(k)) = s.label / ens.norm.label_scale;
    }
  };
  if (total == 1) {
    fill(0, 1, split.train_x, split.train_y);
    fill(0, 1, split.val_x, split.val_y);
  } else {
    fill(0, n_train, split.train_x, split.train_y);
    fill(n_train, n_val, split.val_x, split.val_y);
  }

  std::vector<MemberOutcome> outcomes(static_cast<std::size_t>(cfg.members));
  if (cfg.workers > 1 && cfg.members > 1) {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(outcomes.size());
    for (int w = 0; w < std::min(cfg.workers, cfg.members); ++w) {
      threads.emplace_back([&, w] {
        for (int j = w; j < cfg.members; j += cfg.workers) {
          try {
            outcomes[static_cast<std::size_t>(j)] = trainMember(split, cfg, j);
          } catch (...) {
            errors[static_cast<std::size_t>(j)] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (int j = 0; j < cfg.members; ++j) {
      outcomes[static_cast<std::size_t>(j)] = trainMember(split, cfg, j);
    }
  }

  for (auto& o : outcomes) {
    ens.members.push_back(std::move(o.member));
    if (report != nullptr) {
      report->initial_val_nll.push_back(o.initial_val);
      report->best_val_nll.push_back(o.best_val);
      report->final_val_nll.push_back(o.final_val);
      report->epochs_run.push_back(o.epochs);
      report->best_epoch.push_back(o.best_epoch);
      report->curve.insert(report->curve.end(), o.curve.begin(), o.curve.end());
    }
  }
  if (report != nullptr && total > 1) {
    report->validation_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(report->validation_rows.begin(), report->validation_rows.end());
  }
  ens.weights.assign(ens.members.size(), 1.0 / static_cast<double>(ens.members.size()));
  return ens;
}

// ---------------------------------------------------------------------------
// persistence

void saveModel(const Ensemble& ens, const std::filesystem::path& path)
{
  using nlohmann::ordered_json;
  ordered_json j;
  j["format"] = "crowdnav-penn";
  j["version"] = kModelVersion;
  j["feature_dim"] = ens.featureDim();
  j["var_floor"] = kVarFloor;
  j["normalization"] = {
    {"feature_mean", ens.norm.feature_mean},
    {"feature_std", ens.norm.feature_std},
    {"label_scale", ens.norm.label_scale}};
  j["weights"] = ens.weights;
  ordered_json members = ordered_json::array();
  for (const auto& m : ens.members) {
    ordered_json layers = ordered_json::array();
    for (const auto& l : m.layers) {
      std::vector<double> w;
      w.reserve(static_cast<std::size_t>(l.weight.size()));
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
      }
      layers.push_back({
        {"rows", l.weight.rows()},
        {"cols", l.weight.cols()},
        {"weight", w},
        {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    }
    members.push_back({{"seed", m.seed}, {"layers", layers}});
  }
  j["members"] = members;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << j.dump() << '\n';
  if (!os) {
    throw std::runtime_error("cannot write model file " + path.string());
  }
}

Ensemble loadModel(const std::filesystem::path& path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("cannot open model file " + path.string());
  }
  std::stringstream buf;
  buf << is.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": not a valid model file: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "crowdnav-penn") {
      throw FormatError(path.string() + ": not a crowdnav model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw UnsupportedVersion(
        path.string() + ": unsupported model version " + std::to_string(version) +
        " (expected " + std::to_string(kModelVersion) + ")");
    }
    Ensemble ens;
    const auto d = j.at("feature_dim").get<std::size_t>();
    const auto& nj = j.at("normalization");
    ens.norm.feature_mean = nj.at("feature_mean").get<std::vector<double>>();
    ens.norm.feature_std = nj.at("feature_std").get<std::vector<double>>();
    ens.norm.label_scale = nj.at("label_scale").get<double>();
    if (ens.norm.feature_mean.size() != d || ens.norm.feature_std.size() != d) {
      throw FormatError(path.string() + ": normalization size does not match feature_dim");
    }
    ens.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& mj : j.at("members")) {
      MlpMember m;
      m.seed = mj.at("seed").get<std::uint64_t>();
      Eigen::Index expected_in = static_cast<Eigen::Index>(d);
      for (const auto& lj : mj.at("layers")) {
        const auto rows = lj.at("rows").get<Eigen::Index>();
        const auto cols = lj.at("cols").get<Eigen::Index>();
        const auto w = lj.at("weight").get<std::vector<double>>();
        const auto b = lj.at("bias").get<std::vector<double>>();
        if (cols != expected_in || rows <= 0 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
            static_cast<Eigen::Index>(b.size()) != rows) {
          throw FormatError(path.string() + ": inconsistent layer shape");
        }
        DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
        for (Eigen::Index r = 0; r < rows; ++r) {
          for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
          l.bias(r) = b[static_cast<std::size_t>(r)];
        }
        expected_in = rows;
        m.layers.push_back(std::move(l));
      }
      if (m.layers.empty() || expected_in != 2) {
        throw FormatError(path.string() + ": member does not end in a two-unit head");
      }
      ens.members.push_back(std::move(m));
    }
    if (ens.members.empty() || ens.weights.size() != ens.members.size()) {
      throw FormatError(path.string() + ": member/weight count mismatch");
    }
    return ens;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed model file: " + e.what());
  }
}

}  // namespace crowdnav::penn
