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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crowdnav/dataset.hpp"

/// Probabilistic ensemble of Gaussian-output MLPs trained with the Gaussian
/// negative log-likelihood.
namespace crowdnav::penn
{

inline constexpr double kVarFloor = 1e-6;
inline constexpr int kModelVersion = 1;

/// Input width, hidden widths, and the two-unit (mean, raw variance) head.
inline const std::vector<int> kDefaultWidths{39, 128, 128, 64, 32, 2};

struct DenseLayer
{
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct MlpMember
{
  std::vector<DenseLayer> layers;
  std::uint64_t seed{0};

  int inputDim() const { return static_cast<int>(layers.front().weight.cols()); }
  std::size_t parameterCount() const;
};

/// Uniform(+-1/sqrt(fan_in)) initialisation of every layer.
MlpMember makeMember(const std::vector<int>& widths, std::uint64_t seed);

struct GaussianPrediction
{
  double mean{0.0};
  double variance{1.0};
};

/// Gaussian head on already-normalised features. Throws InvalidInput on a length mismatch.
GaussianPrediction forward(const MlpMember& member, std::span<const double> x);

/// 0.5 * (log var + (label - mean)^2 / var) + 0.5 * log(2 pi).
double nllLoss(const GaussianPrediction& pred, double label);

/// Parameter gradients, laid out like the member's layers.
struct Gradient
{
  std::vector<DenseLayer> layers;
};

/// Exact gradient of nllLoss for one sample.
Gradient backward(const MlpMember& member, std::span<const double> x, double label);

/// Mean NLL over the columns of `x` (features x batch) and, optionally, its gradient.
double batchLoss(
  const MlpMember& member, const Eigen::MatrixXd& x, const Eigen::VectorXd& labels,
  Gradient* grad = nullptr);

/// Flat views used by optimisers and finite-difference checks.
std::vector<double*> parameterPointers(MlpMember& member);
std::vector<const double*> parameterPointers(const Gradient& grad);

struct Normalization
{
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  double label_scale{100.0};
};

struct Ensemble
{
  std::vector<MlpMember> members;
  std::vector<double> weights;
  Normalization norm;

  std::size_t featureDim() const { return norm.feature_mean.size(); }
};

struct EnsemblePrediction
{
  std::vector<GaussianPrediction> members;
  double mixture_mean{0.0};
};

/// Normalises raw features, evaluates every member and reports means and
/// variances in label units.
EnsemblePrediction predict(const Ensemble& ens, std::span<const double> x);

struct TrainConfig
{
  double lr{1e-4};
  int batch{256};
  int max_epochs{1000};
  double lr_factor{0.5};
  int scheduler_patience{5};
  int early_stop_patience{10};
  // Augmentation noise, as a fraction of each feature's standard deviation.
  double noise_std_frac{0.05};
  double val_split{0.15};
  double min_improvement{1e-5};
  int members{3};
  std::vector<int> widths{kDefaultWidths};
  std::uint64_t seed{0};
  // Members train on this many threads.
  int workers{1};
};

void validate(const TrainConfig& cfg);

/// Reduce-on-plateau learning-rate schedule coupled with early stopping.
/// Both counters track validation loss and reset on improvement.
class PlateauTracker
{
public:
  PlateauTracker(double lr, const TrainConfig& cfg);

  enum class Verdict
  {
    improved,
    stagnant,
    stop
  };

  Verdict update(double val_loss);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int stagnantEpochs() const { return stagnant_; }

private:
  double lr_;
  double factor_;
  int sched_patience_;
  int stop_patience_;
  double min_improvement_;
  double best_;
  int stagnant_{0};
  int since_reduce_{0};
};

struct EpochRecord
{
  int member{0};
  int epoch{0};
  double train_nll{0.0};
  double val_nll{0.0};
  double lr{0.0};
};

struct TrainReport
{
  std::vector<double> initial_val_nll;
  std::vector<double> best_val_nll;
  std::vector<double> final_val_nll;
  std::vector<int> epochs_run;
  std::vector<int> best_epoch;
  std::vector<EpochRecord> curve;
  // Dataset rows held out for validation.
  std::vector<std::size_t> validation_rows;
};

/// Trains `cfg.members` members from distinct seeds and keeps each member's
/// best-validation parameters. Throws InvalidInput on an empty dataset or a
/// feature width that does not match `cfg.widths`.
Ensemble train(const data::Dataset& ds, const TrainConfig& cfg, TrainReport* report = nullptr);

void saveModel(const Ensemble& ens, const std::filesystem::path& path);

/// Throws FormatError on a corrupt file and UnsupportedVersion on a version mismatch.
Ensemble loadModel(const std::filesystem::path& path);

}  // namespace crowdnav::penn
