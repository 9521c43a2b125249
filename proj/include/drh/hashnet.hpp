#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "drh/hash_code.hpp"
#include "drh/pooling.hpp"

namespace drh {

using MatrixRd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixRf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Region hashing layer: h = sigmoid(W x + b), one row of W per output bit.
///
/// Parameters are held in double precision for training but the model file
/// stores f32, so trained and loaded parameters are kept f32-representable.
struct HashLayerParams {
  MatrixRd w;         // bits x channels
  Eigen::VectorXd b;  // bits

  HashLayerParams() = default;
  HashLayerParams(std::size_t bits, std::size_t channels)
      : w(MatrixRd::Zero(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(channels))),
        b(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bits))) {}

  [[nodiscard]] std::size_t bits() const noexcept { return static_cast<std::size_t>(w.rows()); }
  [[nodiscard]] std::size_t channels() const noexcept { return static_cast<std::size_t>(w.cols()); }

  void validate() const;
  /// Rounds every parameter to the nearest f32 value.
  void round_to_f32();

  friend bool operator==(const HashLayerParams& a, const HashLayerParams& b) {
    return a.w.rows() == b.w.rows() && a.w.cols() == b.w.cols() && a.w == b.w && a.b == b.b;
  }
};

struct TrainConfig {
  double alpha = 100.0;   // weight of the -tr(h h^T) term
  double beta = 0.001;    // weight decay on W
  double eta = 0.001;     // weight decay on b
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint32_t epochs = 30;  // 0 returns the random initialisation untouched
  std::uint32_t batch_size = 64;
  std::uint64_t seed = 42;
  double init_stddev = 0.01;

  void validate() const;
};

struct Gradients {
  MatrixRd dw;
  Eigen::VectorXd db;
};

struct TrainResult {
  HashLayerParams params;
  std::vector<double> epoch_loss;  // summed mini-batch loss per epoch
};

double sigmoid(double z) noexcept;

/// Per-bit activations in (0, 1). Throws DimensionMismatch if x.size() != channels.
std::vector<double> forward(const HashLayerParams& params, std::span<const float> x);

/// Bit i set iff h[i] >= 0.5.
HashCode binarize(std::span<const double> h);

HashCode encode(const HashLayerParams& params, std::span<const float> x);

/// Encodes every row of `rows` (n x channels).
std::vector<HashCode> encode_batch(const HashLayerParams& params, const MatrixRf& rows);

/// Stacks descriptors into a row matrix; all must share one length.
MatrixRf stack_descriptors(std::span<const RoiDescriptor> descriptors);

/// Unsupervised objective summed over the batch:
///   1/2 sum ||y - h||^2 - alpha/2 sum tr(h h^T) + beta/2 ||W||_F^2 + eta/2 ||b||^2
/// with y = binarize(h) taken from the current parameters.
double loss(const HashLayerParams& params, const MatrixRf& batch, const TrainConfig& cfg);
double loss(const HashLayerParams& params, std::span<const RoiDescriptor> batch,
            const TrainConfig& cfg);

/// Analytic gradient of loss() with y treated as constant:
///   G = (h - y - alpha h) . h (1 - h),  dW = G^T X + beta W,  db = sum G + eta b.
Gradients gradients(const HashLayerParams& params, const MatrixRf& batch, const TrainConfig& cfg);
Gradients gradients(const HashLayerParams& params, std::span<const RoiDescriptor> batch,
                    const TrainConfig& cfg);

/// Zero-mean Gaussian weights (f32-rounded), zero bias.
HashLayerParams initialize_params(std::size_t bits, std::size_t channels, double stddev,
                                  std::uint64_t seed);

/// Mini-batch SGD with momentum. Deterministic for a given seed and input order.
/// Throws EmptyTrainingSet or DivergenceDetected.
TrainResult train(const MatrixRf& descriptors, std::size_t bits, const TrainConfig& cfg);
TrainResult train(std::span<const RoiDescriptor> descriptors, std::size_t bits,
                  const TrainConfig& cfg);

void save_model(const HashLayerParams& params, std::ostream& os);
void save_model(const HashLayerParams& params, const std::filesystem::path& path);
HashLayerParams load_model(std::istream& is);
HashLayerParams load_model(const std::filesystem::path& path);

}  // namespace drh
