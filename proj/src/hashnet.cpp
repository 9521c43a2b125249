#include "drh/hashnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "drh/error.hpp"

namespace drh {

namespace {

constexpr char kMagic[5] = "DRHM";
constexpr std::uint32_t kVersion = 1;

void check_width(const HashLayerParams& p, std::size_t cols) {
  if (cols != p.channels())
    throw Error(ErrorCode::DimensionMismatch, "descriptor has " + std::to_string(cols) +
                                                  " channels, hash layer expects " +
                                                  std::to_string(p.channels()));
}

// Pre-activations and activations for a batch, n x bits.
struct Activations {
  MatrixRd x;
  MatrixRd h;
};

Activations activate(const HashLayerParams& p, const MatrixRf& batch) {
  check_width(p, static_cast<std::size_t>(batch.cols()));
  Activations a;
  a.x = batch.cast<double>();
  a.h.noalias() = a.x * p.w.transpose();
  a.h.rowwise() += p.b.transpose();
  a.h = a.h.unaryExpr([](double z) { return sigmoid(z); });
  return a;
}

MatrixRd targets(const MatrixRd& h) {
  return h.unaryExpr([](double v) { return v >= 0.5 ? 1.0 : 0.0; });
}

double loss_from(const HashLayerParams& p, const MatrixRd& h, const TrainConfig& cfg) {
  const MatrixRd y = targets(h);
  return 0.5 * (y - h).squaredNorm() - 0.5 * cfg.alpha * h.squaredNorm() +
         0.5 * cfg.beta * p.w.squaredNorm() + 0.5 * cfg.eta * p.b.squaredNorm();
}

Gradients gradients_from(const HashLayerParams& p, const Activations& a, const TrainConfig& cfg) {
  const MatrixRd y = targets(a.h);
  const MatrixRd g =
      ((a.h - y - cfg.alpha * a.h).array() * a.h.array() * (1.0 - a.h.array())).matrix();
  Gradients out;
  out.dw.noalias() = g.transpose() * a.x;
  out.dw += cfg.beta * p.w;
  out.db = g.colwise().sum().transpose() + cfg.eta * p.b;
  return out;
}

bool all_finite(const HashLayerParams& p) {
  return p.w.allFinite() && p.b.allFinite();
}

}  // namespace

void HashLayerParams::validate() const {
  if (w.rows() == 0 || w.cols() == 0)
    throw Error(ErrorCode::DimensionMismatch, "hash layer must have positive bits and channels");
  if (b.size() != w.rows()) throw Error(ErrorCode::DimensionMismatch, "bias length != bits");
  if (!all_finite(*this)) throw Error(ErrorCode::NonFiniteValue, "non-finite hash layer parameter");
}

void HashLayerParams::round_to_f32() {
  w = w.cast<float>().cast<double>();
  b = b.cast<float>().cast<double>();
}

void TrainConfig::validate() const {
  if (!(alpha >= 0 && beta >= 0 && eta >= 0))
    throw Error(ErrorCode::InvalidArgument, "alpha, beta and eta must be non-negative");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::InvalidArgument, "learning rate must be finite and non-negative");
  if (!(momentum >= 0 && momentum < 1))
    throw Error(ErrorCode::InvalidArgument, "momentum must lie in [0, 1)");
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  if (!(init_stddev >= 0)) throw Error(ErrorCode::InvalidArgument, "init stddev must be >= 0");
}

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> forward(const HashLayerParams& params, std::span<const float> x) {
  check_width(params, x.size());
  const Eigen::Map<const Eigen::VectorXf> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd z = params.w * xv.cast<double>() + params.b;
  std::vector<double> h(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) h[static_cast<std::size_t>(i)] = sigmoid(z[i]);
  return h;
}

HashCode binarize(std::span<const double> h) {
  HashCode code(h.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] >= 0.5) code.set(i);
  return code;
}

HashCode encode(const HashLayerParams& params, std::span<const float> x) {
  return binarize(forward(params, x));
}

std::vector<HashCode> encode_batch(const HashLayerParams& params, const MatrixRf& rows) {
  std::vector<HashCode> out;
  if (rows.rows() == 0) return out;
  const auto a = activate(params, rows);
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index r = 0; r < a.h.rows(); ++r) {
    HashCode code(params.bits());
    for (Eigen::Index i = 0; i < a.h.cols(); ++i)
      if (a.h(r, i) >= 0.5) code.set(static_cast<std::size_t>(i));
    out.push_back(std::move(code));
  }
  return out;
}

MatrixRf stack_descriptors(std::span<const RoiDescriptor> descriptors) {
  if (descriptors.empty()) return {};
  const auto c = descriptors.front().size();
  MatrixRf m(static_cast<Eigen::Index>(descriptors.size()), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    if (descriptors[i].size() != c)
      throw Error(ErrorCode::DimensionMismatch, "descriptors of differing length");
    std::copy(descriptors[i].begin(), descriptors[i].end(), m.row(static_cast<Eigen::Index>(i)).data());
  }
  return m;
}

double loss(const HashLayerParams& params, const MatrixRf& batch, const TrainConfig& cfg) {
  if (batch.rows() == 0) throw Error(ErrorCode::EmptyTrainingSet, "loss of an empty batch");
  return loss_from(params, activate(params, batch).h, cfg);
}

double loss(const HashLayerParams& params, std::span<const RoiDescriptor> batch,
            const TrainConfig& cfg) {
  return loss(params, stack_descriptors(batch), cfg);
}

Gradients gradients(const HashLayerParams& params, const MatrixRf& batch, const TrainConfig& cfg) {
  if (batch.rows() == 0) throw Error(ErrorCode::EmptyTrainingSet, "gradient of an empty batch");
  return gradients_from(params, activate(params, batch), cfg);
}

Gradients gradients(const HashLayerParams& params, std::span<const RoiDescriptor> batch,
                    const TrainConfig& cfg) {
  return gradients(params, stack_descriptors(batch), cfg);
}

HashLayerParams initialize_params(std::size_t bits, std::size_t channels, double stddev,
                                  std::uint64_t seed) {
  HashLayerParams p(bits, channels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  for (Eigen::Index i = 0; i < p.w.size(); ++i)
    p.w.data()[i] = stddev > 0 ? gauss(rng) : 0.0;
  p.round_to_f32();
  return p;
}

TrainResult train(const MatrixRf& descriptors, std::size_t bits, const TrainConfig& cfg) {
  cfg.validate();
  if (descriptors.rows() == 0 || descriptors.cols() == 0)
    throw Error(ErrorCode::EmptyTrainingSet, "no training descriptors");
  if (bits == 0) throw Error(ErrorCode::InvalidArgument, "code length must be positive");
  if (!descriptors.allFinite())
    throw Error(ErrorCode::NonFiniteValue, "non-finite training descriptor");

  TrainResult result;
  result.params = initialize_params(bits, static_cast<std::size_t>(descriptors.cols()),
                                    cfg.init_stddev, cfg.seed);
  auto& p = result.params;
  MatrixRd vw = MatrixRd::Zero(p.w.rows(), p.w.cols());
  Eigen::VectorXd vb = Eigen::VectorXd::Zero(p.b.size());

  const auto n = static_cast<std::size_t>(descriptors.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // Separate stream from the initializer so lr=0 reproduces initialize_params exactly.
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  MatrixRf batch;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const auto len = std::min<std::size_t>(cfg.batch_size, n - start);
      batch.resize(static_cast<Eigen::Index>(len), descriptors.cols());
      for (std::size_t i = 0; i < len; ++i) batch.row(static_cast<Eigen::Index>(i)) = descriptors.row(order[start + i]);

      const auto act = activate(p, batch);
      const double l = loss_from(p, act.h, cfg);
      if (!std::isfinite(l))
        throw Error(ErrorCode::DivergenceDetected, "loss became non-finite in epoch " + std::to_string(epoch));
      epoch_loss += l;

      const auto g = gradients_from(p, act, cfg);
      vw = cfg.momentum * vw - cfg.learning_rate * g.dw;
      vb = cfg.momentum * vb - cfg.learning_rate * g.db;
      p.w += vw;
      p.b += vb;
      if (!all_finite(p))
        throw Error(ErrorCode::DivergenceDetected, "parameters became non-finite in epoch " + std::to_string(epoch));
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  p.round_to_f32();
  if (!all_finite(p)) throw Error(ErrorCode::DivergenceDetected, "parameters overflow f32");
  return result;
}

TrainResult train(std::span<const RoiDescriptor> descriptors, std::size_t bits,
                  const TrainConfig& cfg) {
  if (descriptors.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training descriptors");
  return train(stack_descriptors(descriptors), bits, cfg);
}

void save_model(const HashLayerParams& params, std::ostream& os) {
  params.validate();
  detail::LeWriter w(os);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(params.bits()));
  w.u32(static_cast<std::uint32_t>(params.channels()));
  for (Eigen::Index i = 0; i < params.w.size(); ++i) w.f32(static_cast<float>(params.w.data()[i]));
  for (Eigen::Index i = 0; i < params.b.size(); ++i) w.f32(static_cast<float>(params.b[i]));
}

void save_model(const HashLayerParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  save_model(params, os);
  os.flush();
  if (!os) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

HashLayerParams load_model(std::istream& is) {
  detail::LeReader r(is);
  r.magic(kMagic);
  if (const auto v = r.u32(); v != kVersion)
    throw Error(ErrorCode::VersionMismatch, "unsupported DRHM version " + std::to_string(v));
  const auto bits = r.u32();
  const auto channels = r.u32();
  if (bits == 0 || channels == 0 || static_cast<std::uint64_t>(bits) * channels > (1ull << 30))
    throw Error(ErrorCode::MalformedHeader, "bad DRHM dimensions");
  HashLayerParams p(bits, channels);
  for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w.data()[i] = r.f32(ErrorCode::DimensionMismatch);
  for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b[i] = r.f32(ErrorCode::DimensionMismatch);
  if (!r.at_eof()) throw Error(ErrorCode::DimensionMismatch, "trailing bytes after DRHM payload");
  p.validate();
  return p;
}

HashLayerParams load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return load_model(is);
}

}  // namespace drh
