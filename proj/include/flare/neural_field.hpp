#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace flare::nn {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Coordinate network shape: Fourier encoding with `octaves` frequencies,
/// ReLU hidden layers, linear 3-component output.
struct Architecture {
  int octaves = 3;
  std::vector<int> hidden{64, 64};

  static constexpr int kOutputDim = 3;

  int input_dim() const { return 3 + 6 * octaves; }
  /// Layer widths from encoded input to output, e.g. {21, 64, 64, 3}.
  std::vector<int> widths() const;
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

/// 2 x 64 hidden, L = 3.
Architecture desk_architecture();
/// 4 x 512 hidden, L = 3.
Architecture large_architecture();

/// Number of flat parameters of a dense stack with the given widths.
std::size_t dense_parameter_count(std::span<const int> widths);

struct NetworkWeights {
  Architecture arch;
  Eigen::VectorXd flat;

  /// Throws ShapeMismatch when flat does not fit arch, or holds non-finite values.
  void validate() const;
};

/// One dense layer; `weight` is fan_out x fan_in.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  bool operator==(const DenseLayer& o) const { return weight == o.weight && bias == o.bias; }
};

/// Flat layout: for each layer, the row-major fan_out x fan_in weight matrix
/// followed by its bias.
Eigen::VectorXd flatten(std::span<const DenseLayer> layers);
std::vector<DenseLayer> unflatten(std::span<const double> flat, std::span<const int> widths);

/// [x, y, z] followed, for each octave l, by
/// sin(2^l x), cos(2^l x), sin(2^l y), cos(2^l y), sin(2^l z), cos(2^l z).
Eigen::MatrixXd fourier_encode(const Eigen::MatrixXd& coords, int octaves);

/// He-style uniform fan-in initialization, zero biases.
NetworkWeights init_weights(const Architecture& arch, std::uint64_t seed);
void init_dense(std::span<double> flat, std::span<const int> widths, std::uint64_t seed);

Eigen::MatrixXd forward(const NetworkWeights& w, const Eigen::MatrixXd& coords);

struct FieldBatch {
  Eigen::MatrixXd coords;  // n x 3 unit space
  Eigen::MatrixXd values;  // n x 3 displacement
};

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Mean over points of the squared 3-vector error and its exact gradient.
LossGrad loss_and_grad(const NetworkWeights& w, const FieldBatch& batch);

/// Same as loss_and_grad with the coordinates already Fourier encoded.
LossGrad loss_and_grad_encoded(std::span<const double> flat, std::span<const int> widths,
                               const Eigen::MatrixXd& encoded, const Eigen::MatrixXd& targets);

// Dense ReLU stack with linear output over an arbitrary input matrix
// (rows are samples). Shared by the field network and the baselines.

struct DenseTape {
  // activations[0] is the input, activations[l] the post-ReLU output of
  // hidden layer l.
  std::vector<Eigen::MatrixXd> activations;
};

Eigen::MatrixXd dense_forward(std::span<const double> flat, std::span<const int> widths,
                              const Eigen::MatrixXd& input, DenseTape* tape = nullptr);

/// Accumulates d(loss)/d(flat) into `grad` and returns d(loss)/d(input).
Eigen::MatrixXd dense_backward(std::span<const double> flat, std::span<const int> widths,
                               const DenseTape& tape, const Eigen::MatrixXd& d_output,
                               std::span<double> grad);

}  // namespace flare::nn
