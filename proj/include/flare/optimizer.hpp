#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace flare::opt {

struct AdamState {
  std::int64_t step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(Eigen::Index n);
};

/// Bias-corrected Adam update of `w` in place; advances `state.step`.
void adam_step(Eigen::Ref<Eigen::VectorXd> w, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double lr);

/// Linear warmup followed by reduce-on-plateau.
struct ScheduleState {
  double base_lr = 1e-3;
  double min_lr = 1e-5;
  double factor = 0.5;
  int patience = 200;
  int warmup = 500;
  double min_delta = 1e-14;

  double lr = 1e-3;  // plateau-controlled rate, used once warmup is over
  double best_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;
};

/// Learning rate for `epoch` given that epoch's loss. During warmup the rate
/// is base_lr * (epoch + 1) / warmup; plateau tracking starts at epoch
/// `warmup`.
double schedule_lr(ScheduleState& state, std::int64_t epoch, double epoch_loss);

struct EarlyStopState {
  int patience = 500;
  double min_delta = 1e-14;
  double best_loss = std::numeric_limits<double>::infinity();
  int counter = 0;
};

/// Returns true once `patience` consecutive losses have failed to improve
/// the best loss by more than min_delta.
bool early_stop(EarlyStopState& state, double epoch_loss);

/// Settings shared by every training loop in the project.
struct OptimizerSettings {
  double base_lr = 1e-3;
  double min_lr = 1e-5;
  double plateau_factor = 0.5;
  int plateau_patience = 200;
  int warmup_epochs = 500;
  int early_stop_patience = 500;
  double min_delta = 1e-14;

  ScheduleState make_schedule() const;
  EarlyStopState make_early_stop() const;
};

}  // namespace flare::opt
