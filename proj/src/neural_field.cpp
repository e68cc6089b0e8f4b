#include "flare/neural_field.hpp"

#include <cmath>
#include <string>

#include "flare/error.hpp"
#include "flare/random.hpp"

namespace flare::nn {

namespace {

using ConstRowMap = Eigen::Map<const RowMajorMatrix>;
using RowMap = Eigen::Map<RowMajorMatrix>;

void check_widths(std::span<const int> widths) {
  if (widths.size() < 2) throw Error(ErrorCode::ShapeMismatch, "dense stack needs >= 2 widths");
  for (int w : widths)
    if (w <= 0) throw Error(ErrorCode::ShapeMismatch, "layer widths must be positive");
}

}  // namespace

std::vector<int> Architecture::widths() const {
  std::vector<int> out;
  out.reserve(hidden.size() + 2);
  out.push_back(input_dim());
  out.insert(out.end(), hidden.begin(), hidden.end());
  out.push_back(kOutputDim);
  return out;
}

std::size_t Architecture::parameter_count() const { return dense_parameter_count(widths()); }

void Architecture::validate() const {
  if (octaves < 0) throw Error(ErrorCode::ShapeMismatch, "octave count must be >= 0");
  if (hidden.empty()) throw Error(ErrorCode::ShapeMismatch, "at least one hidden layer required");
  check_widths(widths());
}

Architecture desk_architecture() { return {3, {64, 64}}; }
Architecture large_architecture() { return {3, {512, 512, 512, 512}}; }

std::size_t dense_parameter_count(std::span<const int> widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l]) * static_cast<std::size_t>(widths[l + 1]) +
         static_cast<std::size_t>(widths[l + 1]);
  return n;
}

void NetworkWeights::validate() const {
  arch.validate();
  if (static_cast<std::size_t>(flat.size()) != arch.parameter_count())
    throw Error(ErrorCode::ShapeMismatch,
                "weight vector has " + std::to_string(flat.size()) + " entries, architecture needs " +
                    std::to_string(arch.parameter_count()));
  if (!flat.allFinite()) throw Error(ErrorCode::ShapeMismatch, "weights contain non-finite values");
}

Eigen::VectorXd flatten(std::span<const DenseLayer> layers) {
  Eigen::Index total = 0;
  for (const auto& layer : layers) total += layer.weight.size() + layer.bias.size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (const auto& layer : layers) {
    const auto rows = layer.weight.rows(), cols = layer.weight.cols();
    if (layer.bias.size() != rows) throw Error(ErrorCode::LengthMismatch, "bias length != fan_out");
    RowMap(flat.data() + at, rows, cols) = layer.weight;
    at += rows * cols;
    flat.segment(at, rows) = layer.bias;
    at += rows;
  }
  return flat;
}

std::vector<DenseLayer> unflatten(std::span<const double> flat, std::span<const int> widths) {
  check_widths(widths);
  if (flat.size() != dense_parameter_count(widths))
    throw Error(ErrorCode::LengthMismatch,
                "flat vector length " + std::to_string(flat.size()) + " does not match layout (" +
                    std::to_string(dense_parameter_count(widths)) + ")");
  std::vector<DenseLayer> layers;
  const double* p = flat.data();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    DenseLayer layer;
    layer.weight = ConstRowMap(p, out, in);
    p += static_cast<std::ptrdiff_t>(in) * out;
    layer.bias = Eigen::Map<const Eigen::VectorXd>(p, out);
    p += out;
    layers.push_back(std::move(layer));
  }
  return layers;
}

Eigen::MatrixXd fourier_encode(const Eigen::MatrixXd& coords, int octaves) {
  if (coords.cols() != 3) throw Error(ErrorCode::ShapeMismatch, "coordinates must be n x 3");
  if (octaves < 0) throw Error(ErrorCode::InvalidArgument, "octave count must be >= 0");
  Eigen::MatrixXd out(coords.rows(), 3 + 6 * octaves);
  out.leftCols(3) = coords;
  for (int l = 0; l < octaves; ++l) {
    const double freq = std::ldexp(1.0, l);
    for (int axis = 0; axis < 3; ++axis) {
      const Eigen::ArrayXd arg = freq * coords.col(axis).array();
      out.col(3 + 6 * l + 2 * axis) = arg.sin().matrix();
      out.col(3 + 6 * l + 2 * axis + 1) = arg.cos().matrix();
    }
  }
  return out;
}

void init_dense(std::span<double> flat, std::span<const int> widths, std::uint64_t seed) {
  check_widths(widths);
  if (flat.size() != dense_parameter_count(widths))
    throw Error(ErrorCode::LengthMismatch, "init_dense: flat length does not match layout");
  Rng rng(seed);
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    const double bound = std::sqrt(6.0 / in);
    for (int k = 0; k < in * out; ++k) flat[at++] = rng.uniform(-bound, bound);
    for (int k = 0; k < out; ++k) flat[at++] = 0.0;
  }
}

NetworkWeights init_weights(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  NetworkWeights w{arch, Eigen::VectorXd(static_cast<Eigen::Index>(arch.parameter_count()))};
  const auto widths = arch.widths();
  init_dense({w.flat.data(), static_cast<std::size_t>(w.flat.size())}, widths, seed);
  return w;
}

Eigen::MatrixXd dense_forward(std::span<const double> flat, std::span<const int> widths,
                              const Eigen::MatrixXd& input, DenseTape* tape) {
  check_widths(widths);
  if (flat.size() != dense_parameter_count(widths))
    throw Error(ErrorCode::ShapeMismatch, "weights inconsistent with layer widths");
  if (input.cols() != widths.front())
    throw Error(ErrorCode::ShapeMismatch, "input width " + std::to_string(input.cols()) +
                                              " != " + std::to_string(widths.front()));
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(input);
  }
  const double* p = flat.data();
  Eigen::MatrixXd h = input;
  const std::size_t n_layers = widths.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = widths[l], out = widths[l + 1];
    ConstRowMap weight(p, out, in);
    p += static_cast<std::ptrdiff_t>(in) * out;
    Eigen::Map<const Eigen::RowVectorXd> bias(p, out);
    p += out;
    Eigen::MatrixXd z = h * weight.transpose();
    z.rowwise() += bias;
    if (l + 1 < n_layers) {
      z = z.cwiseMax(0.0);
      if (tape) tape->activations.push_back(z);
    }
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd dense_backward(std::span<const double> flat, std::span<const int> widths,
                               const DenseTape& tape, const Eigen::MatrixXd& d_output,
                               std::span<double> grad) {
  const std::size_t n_layers = widths.size() - 1;
  if (tape.activations.size() != n_layers || grad.size() != flat.size())
    throw Error(ErrorCode::ShapeMismatch, "dense_backward: tape or gradient does not match");
  // Offsets of each layer's block in the flat layout.
  std::vector<std::size_t> offset(n_layers + 1, 0);
  for (std::size_t l = 0; l < n_layers; ++l)
    offset[l + 1] = offset[l] + static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];

  Eigen::MatrixXd dz = d_output;
  for (std::size_t l = n_layers; l-- > 0;) {
    const int in = widths[l], out = widths[l + 1];
    const Eigen::MatrixXd& h = tape.activations[l];
    ConstRowMap weight(flat.data() + offset[l], out, in);
    RowMap g_weight(grad.data() + offset[l], out, in);
    Eigen::Map<Eigen::RowVectorXd> g_bias(grad.data() + offset[l] + in * out, out);
    g_weight.noalias() += dz.transpose() * h;
    g_bias += dz.colwise().sum();
    Eigen::MatrixXd dh = dz * weight;
    if (l > 0) dh = (h.array() > 0.0).select(dh, 0.0);
    dz = std::move(dh);
  }
  return dz;
}

Eigen::MatrixXd forward(const NetworkWeights& w, const Eigen::MatrixXd& coords) {
  w.validate();
  const auto widths = w.arch.widths();
  return dense_forward({w.flat.data(), static_cast<std::size_t>(w.flat.size())}, widths,
                       fourier_encode(coords, w.arch.octaves));
}

LossGrad loss_and_grad_encoded(std::span<const double> flat, std::span<const int> widths,
                               const Eigen::MatrixXd& encoded, const Eigen::MatrixXd& targets) {
  if (encoded.rows() == 0) throw Error(ErrorCode::InvalidArgument, "empty batch");
  if (targets.rows() != encoded.rows() || targets.cols() != widths.back())
    throw Error(ErrorCode::ShapeMismatch, "targets do not match batch shape");
  DenseTape tape;
  const Eigen::MatrixXd pred = dense_forward(flat, widths, encoded, &tape);
  const Eigen::MatrixXd diff = pred - targets;
  const double m = static_cast<double>(encoded.rows());
  LossGrad out;
  out.loss = diff.squaredNorm() / m;
  if (!std::isfinite(out.loss))
    throw Error(ErrorCode::NonFiniteLoss, "reconstruction loss is not finite");
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flat.size()));
  dense_backward(flat, widths, tape, (2.0 / m) * diff,
                 {out.grad.data(), static_cast<std::size_t>(out.grad.size())});
  return out;
}

LossGrad loss_and_grad(const NetworkWeights& w, const FieldBatch& batch) {
  w.validate();
  if (batch.coords.rows() != batch.values.rows())
    throw Error(ErrorCode::ShapeMismatch, "coords and values row counts differ");
  const auto widths = w.arch.widths();
  return loss_and_grad_encoded({w.flat.data(), static_cast<std::size_t>(w.flat.size())}, widths,
                               fourier_encode(batch.coords, w.arch.octaves), batch.values);
}

}  // namespace flare::nn
