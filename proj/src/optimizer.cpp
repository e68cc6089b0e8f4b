#include "flare/optimizer.hpp"

#include <algorithm>

#include "flare/error.hpp"

namespace flare::opt {

AdamState AdamState::zeros(Eigen::Index n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  return s;
}

void adam_step(Eigen::Ref<Eigen::VectorXd> w, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double lr) {
  if (grad.size() != w.size() || state.m.size() != w.size() || state.v.size() != w.size())
    throw Error(ErrorCode::LengthMismatch, "adam_step: weight, gradient and state lengths differ");
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  w.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

double schedule_lr(ScheduleState& s, std::int64_t epoch, double epoch_loss) {
  if (epoch < s.warmup)
    return s.base_lr * static_cast<double>(epoch + 1) / static_cast<double>(s.warmup);
  if (s.best_loss - epoch_loss > s.min_delta) {
    s.best_loss = epoch_loss;
    s.epochs_since_improve = 0;
  } else if (++s.epochs_since_improve > s.patience) {
    s.lr = std::max(s.lr * s.factor, s.min_lr);
    s.epochs_since_improve = 0;
  }
  return s.lr;
}

bool early_stop(EarlyStopState& s, double epoch_loss) {
  if (s.best_loss - epoch_loss > s.min_delta) {
    s.best_loss = epoch_loss;
    s.counter = 0;
  } else {
    ++s.counter;
  }
  return s.counter >= s.patience;
}

ScheduleState OptimizerSettings::make_schedule() const {
  ScheduleState s;
  s.base_lr = base_lr;
  s.lr = base_lr;
  s.min_lr = min_lr;
  s.factor = plateau_factor;
  s.patience = plateau_patience;
  s.warmup = warmup_epochs;
  s.min_delta = min_delta;
  return s;
}

EarlyStopState OptimizerSettings::make_early_stop() const {
  EarlyStopState s;
  s.patience = early_stop_patience;
  s.min_delta = min_delta;
  return s;
}

}  // namespace flare::opt
