#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace negoplan {

/// Which optimizer group a tensor belongs to.
enum class ParamGroup { encoder, policy, value };

struct TensorShape {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool operator==(const TensorShape&) const = default;
};

/// One square convolution with no padding.
struct ConvGeometry {
  int in_channels;
  int in_size;
  int kernel;
  int stride;
  int out_channels;

  constexpr int out_size() const { return (in_size - kernel) / stride + 1; }
  constexpr int patch() const { return in_channels * kernel * kernel; }
};

inline constexpr int kInputChannels = 4;
inline constexpr int kInputSize = 84;
inline constexpr ConvGeometry kConv1{kInputChannels, kInputSize, 8, 4, 32};
inline constexpr ConvGeometry kConv2{32, kConv1.out_size(), 4, 2, 64};
inline constexpr ConvGeometry kConv3{64, kConv2.out_size(), 3, 1, 64};
inline constexpr int kFlatSize = kConv3.out_channels * kConv3.out_size() * kConv3.out_size();
inline constexpr int kFeatureSize = 512;
inline constexpr int kHeadHidden = 128;
inline constexpr int kNumActions = 4;
inline constexpr int kInputPixels = kInputSize * kInputSize;

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Weights of the shared convolutional encoder and both heads. Biases are
/// stored as single-column matrices so every tensor has the same type.
template <typename Scalar>
struct NetworkParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b, fc_w, fc_b;
  Matrix pi1_w, pi1_b, pi2_w, pi2_b, pi3_w, pi3_b;
  Matrix v1_w, v1_b, v2_w, v2_b, v3_w, v3_b;

  /// Visits every tensor in declaration order as f(name, group, tensor).
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  static std::vector<TensorShape> shapes() {
    return {{"conv1_w", kConv1.out_channels, kConv1.patch()}, {"conv1_b", kConv1.out_channels, 1},
            {"conv2_w", kConv2.out_channels, kConv2.patch()}, {"conv2_b", kConv2.out_channels, 1},
            {"conv3_w", kConv3.out_channels, kConv3.patch()}, {"conv3_b", kConv3.out_channels, 1},
            {"fc_w", kFeatureSize, kFlatSize},                {"fc_b", kFeatureSize, 1},
            {"pi1_w", kHeadHidden, kFeatureSize},             {"pi1_b", kHeadHidden, 1},
            {"pi2_w", kHeadHidden, kHeadHidden},              {"pi2_b", kHeadHidden, 1},
            {"pi3_w", kNumActions, kHeadHidden},              {"pi3_b", kNumActions, 1},
            {"v1_w", kHeadHidden, kFeatureSize},              {"v1_b", kHeadHidden, 1},
            {"v2_w", kHeadHidden, kHeadHidden},               {"v2_b", kHeadHidden, 1},
            {"v3_w", 1, kHeadHidden},                         {"v3_b", 1, 1}};
  }

  static NetworkParams zeros() {
    NetworkParams p;
    const std::vector<TensorShape> s = shapes();
    std::size_t i = 0;
    p.visit([&](const std::string&, ParamGroup, Matrix& m) {
      m.setZero(s[i].rows, s[i].cols);
      ++i;
    });
    return p;
  }

  /// Zero biases, weights N(0, 1) / sqrt(fan_in).
  static NetworkParams initialized(std::uint64_t seed) {
    NetworkParams p = zeros();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    p.visit([&](const std::string& name, ParamGroup, Matrix& m) {
      if (name.back() == 'b') return;
      const double scale = 1.0 / std::sqrt(static_cast<double>(m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(normal(rng) * scale);
    });
    return p;
  }

  template <typename Other>
  NetworkParams<Other> cast() const {
    NetworkParams<Other> out = NetworkParams<Other>::zeros();
    std::vector<const Matrix*> src;
    visit([&](const std::string&, ParamGroup, const Matrix& m) { src.push_back(&m); });
    std::size_t i = 0;
    out.visit([&](const std::string&, ParamGroup, typename NetworkParams<Other>::Matrix& m) {
      m = src[i++]->template cast<Other>();
    });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, ParamGroup, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    visit([&](const std::string&, ParamGroup, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  void set_zero() {
    visit([](const std::string&, ParamGroup, Matrix& m) { m.setZero(); });
  }

  /// this += alpha * other
  void add_scaled(const NetworkParams& other, Scalar alpha) {
    std::vector<const Matrix*> src;
    other.visit([&](const std::string&, ParamGroup, const Matrix& m) { src.push_back(&m); });
    std::size_t i = 0;
    visit([&](const std::string&, ParamGroup, Matrix& m) { m += alpha * *src[i++]; });
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    using G = ParamGroup;
    f("conv1_w", G::encoder, s.conv1_w);
    f("conv1_b", G::encoder, s.conv1_b);
    f("conv2_w", G::encoder, s.conv2_w);
    f("conv2_b", G::encoder, s.conv2_b);
    f("conv3_w", G::encoder, s.conv3_w);
    f("conv3_b", G::encoder, s.conv3_b);
    f("fc_w", G::encoder, s.fc_w);
    f("fc_b", G::encoder, s.fc_b);
    f("pi1_w", G::policy, s.pi1_w);
    f("pi1_b", G::policy, s.pi1_b);
    f("pi2_w", G::policy, s.pi2_w);
    f("pi2_b", G::policy, s.pi2_b);
    f("pi3_w", G::policy, s.pi3_w);
    f("pi3_b", G::policy, s.pi3_b);
    f("v1_w", G::value, s.v1_w);
    f("v1_b", G::value, s.v1_b);
    f("v2_w", G::value, s.v2_w);
    f("v2_b", G::value, s.v2_b);
    f("v3_w", G::value, s.v3_w);
    f("v3_b", G::value, s.v3_b);
  }
};

namespace detail {

/// `in` is channels x (batch * size * size), column index b*size*size + y*size + x.
/// The result has one row per (channel, ky, kx) and one column per output pixel.
template <typename Scalar>
void im2col(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& in, const ConvGeometry& g, int batch,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& col) {
  const int os = g.out_size();
  const int in_px = g.in_size * g.in_size;
  const int out_px = os * os;
  col.resize(g.patch(), static_cast<Eigen::Index>(batch) * out_px);
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < g.in_channels; ++c) {
      for (int ky = 0; ky < g.kernel; ++ky) {
        for (int kx = 0; kx < g.kernel; ++kx) {
          const int row = (c * g.kernel + ky) * g.kernel + kx;
          for (int oy = 0; oy < os; ++oy) {
            const int src = b * in_px + (oy * g.stride + ky) * g.in_size + kx;
            const int dst = b * out_px + oy * os;
            for (int ox = 0; ox < os; ++ox) col(row, dst + ox) = in(c, src + ox * g.stride);
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters patch gradients back onto the input layout.
template <typename Scalar>
void col2im(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& col, const ConvGeometry& g, int batch,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& in) {
  const int os = g.out_size();
  const int in_px = g.in_size * g.in_size;
  const int out_px = os * os;
  in.setZero(g.in_channels, static_cast<Eigen::Index>(batch) * in_px);
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < g.in_channels; ++c) {
      for (int ky = 0; ky < g.kernel; ++ky) {
        for (int kx = 0; kx < g.kernel; ++kx) {
          const int row = (c * g.kernel + ky) * g.kernel + kx;
          for (int oy = 0; oy < os; ++oy) {
            const int dst = b * in_px + (oy * g.stride + ky) * g.in_size + kx;
            const int src = b * out_px + oy * os;
            for (int ox = 0; ox < os; ++ox) in(c, dst + ox * g.stride) += col(row, src + ox);
          }
        }
      }
    }
  }
}

template <typename Derived>
void relu_inplace(Eigen::MatrixBase<Derived>& m) {
  m = m.cwiseMax(typename Derived::Scalar(0));
}

}  // namespace detail

/// Activations kept from a batched forward pass for the backward pass.
template <typename Scalar>
struct ForwardCache {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  int batch = 0;
  Matrix col1, a1, col2, a2, col3, a3;  // post-ReLU conv outputs, channels x pixels
  Matrix flat;                          // kFlatSize x batch
  Matrix features;                      // kFeatureSize x batch, post-ReLU
  Matrix p1, p2, logits;                // policy head
  Matrix h1, h2, value;                 // value head; value is 1 x batch
};

/// `input` is kInputChannels x (batch * 84 * 84) in {0, 1}.
template <typename Scalar>
void forward(const NetworkParams<Scalar>& p, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& input,
             int batch, ForwardCache<Scalar>& c) {
  using detail::relu_inplace;
  c.batch = batch;
  detail::im2col(input, kConv1, batch, c.col1);
  c.a1.noalias() = p.conv1_w * c.col1;
  c.a1.colwise() += p.conv1_b.col(0);
  relu_inplace(c.a1);
  detail::im2col(c.a1, kConv2, batch, c.col2);
  c.a2.noalias() = p.conv2_w * c.col2;
  c.a2.colwise() += p.conv2_b.col(0);
  relu_inplace(c.a2);
  detail::im2col(c.a2, kConv3, batch, c.col3);
  c.a3.noalias() = p.conv3_w * c.col3;
  c.a3.colwise() += p.conv3_b.col(0);
  relu_inplace(c.a3);

  constexpr int px = kConv3.out_size() * kConv3.out_size();
  c.flat.resize(kFlatSize, batch);
  for (int b = 0; b < batch; ++b)
    for (int ch = 0; ch < kConv3.out_channels; ++ch)
      c.flat.col(b).segment(ch * px, px) = c.a3.row(ch).segment(b * px, px).transpose();

  c.features.noalias() = p.fc_w * c.flat;
  c.features.colwise() += p.fc_b.col(0);
  relu_inplace(c.features);

  c.p1.noalias() = p.pi1_w * c.features;
  c.p1.colwise() += p.pi1_b.col(0);
  relu_inplace(c.p1);
  c.p2.noalias() = p.pi2_w * c.p1;
  c.p2.colwise() += p.pi2_b.col(0);
  relu_inplace(c.p2);
  c.logits.noalias() = p.pi3_w * c.p2;
  c.logits.colwise() += p.pi3_b.col(0);

  c.h1.noalias() = p.v1_w * c.features;
  c.h1.colwise() += p.v1_b.col(0);
  relu_inplace(c.h1);
  c.h2.noalias() = p.v2_w * c.h1;
  c.h2.colwise() += p.v2_b.col(0);
  relu_inplace(c.h2);
  c.value.noalias() = p.v3_w * c.h2;
  c.value.colwise() += p.v3_b.col(0);

  if (!c.logits.allFinite() || !c.value.allFinite()) throw NonFiniteError("forward: non-finite network output");
}

/// Accumulates parameter gradients into `grad` given the loss gradients with
/// respect to the logits (kNumActions x batch) and the value (1 x batch).
template <typename Scalar>
void backward(const NetworkParams<Scalar>& p, const ForwardCache<Scalar>& c,
              const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& d_logits,
              const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& d_value, NetworkParams<Scalar>& grad) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Scalar zero(0);
  auto relu_mask = [zero](Matrix& d, const Matrix& post) { d = (post.array() > zero).select(d, zero); };

  // Policy head.
  grad.pi3_w.noalias() += d_logits * c.p2.transpose();
  grad.pi3_b += d_logits.rowwise().sum();
  Matrix d = p.pi3_w.transpose() * d_logits;
  relu_mask(d, c.p2);
  grad.pi2_w.noalias() += d * c.p1.transpose();
  grad.pi2_b += d.rowwise().sum();
  Matrix d1 = p.pi2_w.transpose() * d;
  relu_mask(d1, c.p1);
  grad.pi1_w.noalias() += d1 * c.features.transpose();
  grad.pi1_b += d1.rowwise().sum();
  Matrix d_feat = p.pi1_w.transpose() * d1;

  // Value head.
  grad.v3_w.noalias() += d_value * c.h2.transpose();
  grad.v3_b += d_value.rowwise().sum();
  d = p.v3_w.transpose() * d_value;
  relu_mask(d, c.h2);
  grad.v2_w.noalias() += d * c.h1.transpose();
  grad.v2_b += d.rowwise().sum();
  d1 = p.v2_w.transpose() * d;
  relu_mask(d1, c.h1);
  grad.v1_w.noalias() += d1 * c.features.transpose();
  grad.v1_b += d1.rowwise().sum();
  d_feat.noalias() += p.v1_w.transpose() * d1;

  // Shared trunk.
  relu_mask(d_feat, c.features);
  grad.fc_w.noalias() += d_feat * c.flat.transpose();
  grad.fc_b += d_feat.rowwise().sum();
  const Matrix d_flat = p.fc_w.transpose() * d_feat;

  constexpr int px = kConv3.out_size() * kConv3.out_size();
  Matrix d3(kConv3.out_channels, static_cast<Eigen::Index>(c.batch) * px);
  for (int b = 0; b < c.batch; ++b)
    for (int ch = 0; ch < kConv3.out_channels; ++ch)
      d3.row(ch).segment(b * px, px) = d_flat.col(b).segment(ch * px, px).transpose();
  relu_mask(d3, c.a3);
  grad.conv3_w.noalias() += d3 * c.col3.transpose();
  grad.conv3_b += d3.rowwise().sum();
  Matrix d_col = p.conv3_w.transpose() * d3;
  Matrix d2;
  detail::col2im(d_col, kConv3, c.batch, d2);
  relu_mask(d2, c.a2);
  grad.conv2_w.noalias() += d2 * c.col2.transpose();
  grad.conv2_b += d2.rowwise().sum();
  d_col = p.conv2_w.transpose() * d2;
  Matrix d1c;
  detail::col2im(d_col, kConv2, c.batch, d1c);
  relu_mask(d1c, c.a1);
  grad.conv1_w.noalias() += d1c * c.col1.transpose();
  grad.conv1_b += d1c.rowwise().sum();
}

}  // namespace negoplan
