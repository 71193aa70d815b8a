#include <numeric>
#include "tforge/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "tforge/error.hpp"

namespace tforge {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kShapeMismatch, what);
}

}  // namespace

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) fail(ErrorCode::kShapeMismatch, "negative tensor extent");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_, double fill) : shape(std::move(shape_)), data(element_count(shape), fill) {}

int ParamStore::add(std::string name, Tensor value) {
  if (index(name) >= 0) fail(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  Parameter p;
  p.name = std::move(name);
  p.grad = Tensor(value.shape);
  p.value = std::move(value);
  params_.push_back(std::move(p));
  return count() - 1;
}

int ParamStore::index(const std::string& name) const {
  for (int i = 0; i < count(); ++i)
    if (params_[static_cast<std::size_t>(i)].name == name) return i;
  return -1;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

void ParamStore::set_frozen(const std::string& prefix, bool frozen) {
  for (auto& p : params_)
    if (p.name.rfind(prefix, 0) == 0) p.frozen = frozen;
}

bool ParamStore::all_finite() const {
  for (const auto& p : params_)
    for (double v : p.value.data)
      if (!std::isfinite(v)) return false;
  return true;
}

Tape::Id Tape::push(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, {}});
  return size() - 1;
}

Tensor& Tape::g(Id id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape);
  return n.grad;
}

Tape::Id Tape::constant(Tensor t) { return push(std::move(t)); }

Tape::Id Tape::param(ParamStore& store, int index) {
  const Id id = push(store[index].value);
  nodes_[id].back = [this, id, &store, index] {
    const Tensor& gr = nodes_[id].grad;
    if (gr.size() == 0) return;
    auto& dst = store[index].grad.data;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gr.data[i];
  };
  return id;
}

Tape::Id Tape::conv2d(Id x, Id w, Id b, int stride, int pad) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  require(X.shape.size() == 3 && W.shape.size() == 4, "conv2d expects [C,H,W] input and [Co,C,k,k] weights");
  const int C = X.dim(0), H = X.dim(1), Wd = X.dim(2);
  const int Co = W.dim(0), k = W.dim(2);
  require(W.dim(1) == C && W.dim(3) == k, "conv2d weight does not match input channels");
  require(value(b).size() == static_cast<std::size_t>(Co), "conv2d bias size");
  require(stride >= 1 && pad >= 0, "conv2d stride/pad");
  const int Ho = (H + 2 * pad - k) / stride + 1, Wo = (Wd + 2 * pad - k) / stride + 1;
  require(Ho >= 1 && Wo >= 1, "conv2d output would be empty");

  // im2col: rows index (c, ky, kx), columns index output pixels.
  const int K = C * k * k, P = Ho * Wo;
  auto cols = std::make_shared<RowMat>(RowMat::Zero(K, P));
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols->data() + static_cast<std::ptrdiff_t>((c * k + ky) * k + kx) * P;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < Wd) row[oy * Wo + ox] = X.data[(static_cast<std::size_t>(c) * H + iy) * Wd + ix];
          }
        }
      }
  Tensor Y({Co, Ho, Wo});
  MapMat ym(Y.data.data(), Co, P);
  CMapMat wm(W.data.data(), Co, K);
  ym.noalias() = wm * (*cols);
  const Tensor& B = value(b);
  for (int o = 0; o < Co; ++o) ym.row(o).array() += B.data[static_cast<std::size_t>(o)];

  const Id y = push(std::move(Y));
  nodes_[y].back = [=, this] {
    const Tensor& GY = nodes_[y].grad;
    CMapMat gy(GY.data.data(), Co, P);
    MapMat gw(g(w).data.data(), Co, K);
    gw.noalias() += gy * cols->transpose();
    Tensor& GB = g(b);
    for (int o = 0; o < Co; ++o) {
      const double* r = GY.data.data() + static_cast<std::ptrdiff_t>(o) * P;
      GB.data[static_cast<std::size_t>(o)] += std::accumulate(r, r + P, 0.0);
    }
    const RowMat gcols = CMapMat(value(w).data.data(), Co, K).transpose() * gy;
    Tensor& GX = g(x);
    for (int c = 0; c < C; ++c)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const double* row = gcols.data() + static_cast<std::ptrdiff_t>((c * k + ky) * k + kx) * P;
          for (int oy = 0; oy < Ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= H) continue;
            for (int ox = 0; ox < Wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < Wd) GX.data[(static_cast<std::size_t>(c) * H + iy) * Wd + ix] += row[oy * Wo + ox];
            }
          }
        }
  };
  return y;
}

Tape::Id Tape::swish(Id x) {
  Tensor Y = value(x);
  for (auto& v : Y.data) v = v * sigmoid(v);
  const Id y = push(std::move(Y));
  nodes_[y].back = [=, this] {
    const auto& X = value(x).data;
    const auto& GY = nodes_[y].grad.data;
    auto& GX = g(x).data;
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double s = sigmoid(X[i]);
      GX[i] += GY[i] * (s + X[i] * s * (1.0 - s));
    }
  };
  return y;
}

Tape::Id Tape::global_avg_pool(Id x) {
  const Tensor& X = value(x);
  require(X.shape.size() == 3, "global_avg_pool expects [C,H,W]");
  const int C = X.dim(0);
  const std::size_t hw = static_cast<std::size_t>(X.dim(1)) * X.dim(2);
  Tensor Y({C});
  for (int c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += X.data[c * hw + i];
    Y.data[static_cast<std::size_t>(c)] = s / static_cast<double>(hw);
  }
  const Id y = push(std::move(Y));
  nodes_[y].back = [=, this] {
    const auto& GY = nodes_[y].grad.data;
    auto& GX = g(x).data;
    for (int c = 0; c < C; ++c)
      for (std::size_t i = 0; i < hw; ++i) GX[c * hw + i] += GY[static_cast<std::size_t>(c)] / static_cast<double>(hw);
  };
  return y;
}

Tape::Id Tape::affine(Id x, Id w, Id b) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  require(W.shape.size() == 2, "affine weight must be [out, in]");
  const int m = W.dim(0), n = W.dim(1);
  require(X.size() == static_cast<std::size_t>(n) && value(b).size() == static_cast<std::size_t>(m),
          "affine input/bias size");
  // Plain loops: Eigen's vectorized reductions sum in an order that depends on
  // buffer alignment, which breaks bit-exact reruns.
  Tensor Y({m});
  const auto& B = value(b).data;
  for (int o = 0; o < m; ++o) {
    const double* wr = W.data.data() + static_cast<std::ptrdiff_t>(o) * n;
    Y.data[static_cast<std::size_t>(o)] = std::inner_product(wr, wr + n, X.data.begin(), 0.0) + B[static_cast<std::size_t>(o)];
  }
  const Id y = push(std::move(Y));
  nodes_[y].back = [=, this] {
    const auto& gy = nodes_[y].grad.data;
    const auto& xv = value(x).data;
    const auto& wv = value(w).data;
    auto& gw = g(w).data;
    auto& gb = g(b).data;
    auto& gx = g(x).data;
    for (int o = 0; o < m; ++o) {
      const double go = gy[static_cast<std::size_t>(o)];
      const std::size_t row = static_cast<std::size_t>(o) * n;
      gb[static_cast<std::size_t>(o)] += go;
      for (int i = 0; i < n; ++i) {
        gw[row + i] += go * xv[static_cast<std::size_t>(i)];
        gx[static_cast<std::size_t>(i)] += wv[row + i] * go;
      }
    }
  };
  return y;
}

Tape::Id Tape::max_over(const std::vector<Id>& xs) {
  require(!xs.empty(), "max_over needs inputs");
  const Tensor& first = value(xs[0]);
  for (Id x : xs) require(value(x).shape == first.shape, "max_over inputs differ in shape");
  Tensor Y = first;
  auto arg = std::make_shared<std::vector<int>>(Y.size(), 0);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const auto& X = value(xs[k]).data;
    for (std::size_t i = 0; i < X.size(); ++i)
      if (X[i] > Y.data[i]) {  // strict: ties stay with the lower index
        Y.data[i] = X[i];
        (*arg)[i] = static_cast<int>(k);
      }
  }
  const Id y = push(std::move(Y));
  nodes_[y].back = [=, this] {
    const auto& GY = nodes_[y].grad.data;
    for (std::size_t k = 0; k < xs.size(); ++k) g(xs[k]);
    for (std::size_t i = 0; i < GY.size(); ++i) nodes_[xs[(*arg)[i]]].grad.data[i] += GY[i];
  };
  return y;
}

Tape::Id Tape::concat(const std::vector<Id>& xs) {
  require(!xs.empty(), "concat needs inputs");
  std::vector<int> shape = value(xs[0]).shape;
  require(!shape.empty(), "concat of scalars");
  int lead = 0;
  for (Id x : xs) {
    const auto& s = value(x).shape;
    require(s.size() == shape.size() && std::equal(s.begin() + 1, s.end(), shape.begin() + 1),
            "concat inputs differ beyond the leading axis");
    lead += s[0];
  }
  shape[0] = lead;
  Tensor Y(shape);
  std::size_t off = 0;
  for (Id x : xs) {
    const auto& X = value(x).data;
    std::copy(X.begin(), X.end(), Y.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += X.size();
  }
  const Id y = push(std::move(Y));
  nodes_[y].back = [=, this] {
    const auto& GY = nodes_[y].grad.data;
    std::size_t o = 0;
    for (Id x : xs) {
      auto& GX = g(x).data;
      for (std::size_t i = 0; i < GX.size(); ++i) GX[i] += GY[o + i];
      o += GX.size();
    }
  };
  return y;
}

Tape::Id Tape::mse(Id pred, std::span<const double> target) {
  const auto& P = value(pred).data;
  require(P.size() == target.size(), "mse size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) s += (P[i] - target[i]) * (P[i] - target[i]);
  Tensor Y({1});
  Y.data[0] = s / static_cast<double>(P.size());
  const Id y = push(std::move(Y));
  std::vector<double> t(target.begin(), target.end());
  nodes_[y].back = [=, this, t = std::move(t)] {
    const double gy = nodes_[y].grad.data[0];
    const auto& Pv = value(pred).data;
    auto& GP = g(pred).data;
    const double scale = 2.0 * gy / static_cast<double>(Pv.size());
    for (std::size_t i = 0; i < Pv.size(); ++i) GP[i] += scale * (Pv[i] - t[i]);
  };
  return y;
}

Tape::Id Tape::l1(Id pred, std::span<const double> target) {
  const auto& P = value(pred).data;
  require(P.size() == target.size(), "l1 size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) s += std::abs(P[i] - target[i]);
  Tensor Y({1});
  Y.data[0] = s / static_cast<double>(P.size());
  const Id y = push(std::move(Y));
  std::vector<double> t(target.begin(), target.end());
  nodes_[y].back = [=, this, t = std::move(t)] {
    const double gy = nodes_[y].grad.data[0];
    const auto& Pv = value(pred).data;
    auto& GP = g(pred).data;
    for (std::size_t i = 0; i < Pv.size(); ++i) {
      const double d = Pv[i] - t[i];
      GP[i] += gy * static_cast<double>((d > 0) - (d < 0)) / static_cast<double>(Pv.size());
    }
  };
  return y;
}

void Tape::backward(Id out) {
  require(value(out).size() == 1, "backward needs a scalar output");
  g(out).data[0] = 1.0;
  for (Id i = out; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back && n.grad.size() == n.value.size()) n.back();
  }
}

}  // namespace tforge
