// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "respnet/error.hpp"

namespace respnet::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.dims() == b.dims(), std::string(op) + ": shape mismatch " + shape_string(a.dims()) + " vs " +
                                    shape_string(b.dims()));
}

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& dims, std::size_t axis, const char* op) {
  require(axis < dims.size(), std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                                  shape_string(dims));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= dims[i];
  s.length = dims[axis];
  for (std::size_t i = axis + 1; i < dims.size(); ++i) s.inner *= dims[i];
  return s;
}

Shape without_axis(const Shape& dims, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i != axis) out.push_back(dims[i]);
  }
  return out;
}

}  // namespace

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.dims());
  auto o = out.data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  if (g.tracks({&a, &b})) {
    g.record("add", {a, b}, out, [a, b, out]() mutable {
      auto go = out.grad();
      for (const Tensor* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto gt = t->grad();
        for (std::size_t i = 0; i < go.size(); ++i) gt[i] += go[i];
      }
    });
  }
  return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.dims());
  auto o = out.data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  if (g.tracks({&a, &b})) {
    g.record("mul", {a, b}, out, [a, b, out]() mutable {
      auto go = out.grad();
      auto av = a.data();
      auto bv = b.data();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(Graph& g, const Tensor& x, double factor) {
  Tensor out(x.dims());
  auto o = out.data();
  auto xv = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * factor;
  if (g.tracks({&x})) {
    g.record("scale", {x}, out, [x, out, factor]() mutable {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * factor;
    });
  }
  return out;
}

Tensor sum(Graph& g, const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor out(Shape{1}, total);
  if (g.tracks({&x})) {
    g.record("sum", {x}, out, [x, out]() mutable {
      const double go = out.grad()[0];
      for (double& v : x.grad()) v += go;
    });
  }
  return out;
}

Tensor reshape(Graph& g, const Tensor& x, Shape dims) {
  require(shape_size(dims) == x.size(),
          "reshape: cannot view " + shape_string(x.dims()) + " as " + shape_string(dims));
  Tensor out(std::move(dims), std::vector<double>(x.data().begin(), x.data().end()));
  if (g.tracks({&x})) {
    g.record("reshape", {x}, out, [x, out]() mutable {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    });
  }
  return out;
}

Tensor permute(Graph& g, const Tensor& x, const std::vector<std::size_t>& order) {
  const Shape& in = x.dims();
  const std::size_t rank = in.size();
  require(order.size() == rank, "permute: order length does not match rank");
  std::vector<bool> seen(rank, false);
  for (std::size_t a : order) {
    require(a < rank && !seen[a], "permute: order is not a permutation");
    seen[a] = true;
  }
  Shape out_dims(rank);
  for (std::size_t i = 0; i < rank; ++i) out_dims[i] = in[order[i]];
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in[i];

  // Source offset of every destination element.
  const std::size_t total = x.size();
  std::vector<std::size_t> source(total);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < rank; ++i) off += idx[i] * in_strides[order[i]];
    source[flat] = off;
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_dims[i]) break;
      idx[i] = 0;
    }
  }
  Tensor out(out_dims);
  auto o = out.data();
  auto xv = x.data();
  for (std::size_t i = 0; i < total; ++i) o[i] = xv[source[i]];
  if (g.tracks({&x})) {
    g.record("permute", {x}, out, [x, out, source = std::move(source)]() mutable {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[source[i]] += go[i];
    });
  }
  return out;
}

Tensor concat(Graph& g, std::span<const Tensor> parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& first = parts[0].dims();
  require(axis < first.size(), "concat: axis out of range");
  Shape out_dims = first;
  out_dims[axis] = 0;
  for (const Tensor& p : parts) {
    require(p.rank() == first.size(), "concat: rank mismatch");
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (i != axis) require(p.dim(i) == first[i], "concat: extent mismatch on axis " + std::to_string(i));
    }
    out_dims[axis] += p.dim(axis);
  }
  const AxisSplit s = split_axis(out_dims, axis, "concat");
  Tensor out(out_dims);
  auto o = out.data();
  std::size_t offset = 0;  // along the axis
  for (const Tensor& p : parts) {
    const std::size_t len = p.dim(axis);
    auto pv = p.data();
    for (std::size_t a = 0; a < s.outer; ++a) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(a * len * s.inner), len * s.inner,
                  o.begin() + static_cast<std::ptrdiff_t>((a * s.length + offset) * s.inner));
    }
    offset += len;
  }
  if (g.tracks(parts)) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    g.record("concat", inputs, out, [inputs, out, s, axis]() mutable {
      auto go = out.grad();
      std::size_t offset = 0;
      for (Tensor& p : inputs) {
        const std::size_t len = p.dim(axis);
        if (p.requires_grad()) {
          auto gp = p.grad();
          for (std::size_t a = 0; a < s.outer; ++a) {
            const std::size_t src = (a * s.length + offset) * s.inner;
            const std::size_t dst = a * len * s.inner;
            for (std::size_t k = 0; k < len * s.inner; ++k) gp[dst + k] += go[src + k];
          }
        }
        offset += len;
      }
    });
  }
  return out;
}

Tensor relu(Graph& g, const Tensor& x) {
  Tensor out(x.dims());
  auto o = out.data();
  auto xv = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  if (g.tracks({&x})) {
    g.record("relu", {x}, out, [x, out]() mutable {
      auto go = out.grad();
      auto gx = x.grad();
      auto xv = x.data();
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (xv[i] > 0.0) gx[i] += go[i];
      }
    });
  }
  return out;
}

Tensor softmax(Graph& g, const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.dims(), axis, "softmax");
  Tensor out(x.dims());
  auto o = out.data();
  auto xv = x.data();
  for (std::size_t a = 0; a < s.outer; ++a) {
    for (std::size_t c = 0; c < s.inner; ++c) {
      const std::size_t base = a * s.length * s.inner + c;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.length; ++k) mx = std::max(mx, xv[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.length; ++k) {
        const double e = std::exp(xv[base + k * s.inner] - mx);
        o[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.length; ++k) o[base + k * s.inner] /= total;
    }
  }
  if (g.tracks({&x})) {
    g.record("softmax", {x}, out, [x, out, s]() mutable {
      auto go = out.grad();
      auto y = out.data();
      auto gx = x.grad();
      for (std::size_t a = 0; a < s.outer; ++a) {
        for (std::size_t c = 0; c < s.inner; ++c) {
          const std::size_t base = a * s.length * s.inner + c;
          double dot = 0.0;
          for (std::size_t k = 0; k < s.length; ++k) dot += go[base + k * s.inner] * y[base + k * s.inner];
          for (std::size_t k = 0; k < s.length; ++k) {
            const std::size_t i = base + k * s.inner;
            gx[i] += y[i] * (go[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor dropout(Graph& g, const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidConfig("dropout ratio must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = uniform(rng) < p ? 0.0 : keep_scale;
  Tensor out(x.dims());
  auto o = out.data();
  auto xv = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * mask[i];
  if (g.tracks({&x})) {
    g.record("dropout", {x}, out, [x, out, mask = std::move(mask)]() mutable {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * mask[i];
    });
  }
  return out;
}

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + shape_string(a.dims()) + " and " + shape_string(b.dims()));
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  Tensor out(Shape{a.dim(0), b.dim(1)});
  MatMap(out.data().data(), m, n).noalias() =
      ConstMatMap(a.data().data(), m, k) * ConstMatMap(b.data().data(), k, n);
  if (g.tracks({&a, &b})) {
    g.record("matmul", {a, b}, out, [a, b, out, m, k, n]() mutable {
      ConstMatMap go(out.grad().data(), m, n);
      if (a.requires_grad()) {
        MatMap(a.grad().data(), m, k).noalias() += go * ConstMatMap(b.data().data(), k, n).transpose();
      }
      if (b.requires_grad()) {
        MatMap(b.grad().data(), k, n).noalias() += ConstMatMap(a.data().data(), m, k).transpose() * go;
      }
    });
  }
  return out;
}

Tensor batched_matmul(Graph& g, const Tensor& a, const Tensor& b, bool transpose_b) {
  require(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0),
          "batched_matmul: incompatible shapes " + shape_string(a.dims()) + " and " + shape_string(b.dims()));
  const std::size_t batch = a.dim(0);
  const auto m = static_cast<Eigen::Index>(a.dim(1));
  const auto k = static_cast<Eigen::Index>(a.dim(2));
  const auto n = static_cast<Eigen::Index>(transpose_b ? b.dim(1) : b.dim(2));
  require(static_cast<Eigen::Index>(transpose_b ? b.dim(2) : b.dim(1)) == k,
          "batched_matmul: inner dimensions differ");
  const std::size_t a_step = static_cast<std::size_t>(m * k);
  const std::size_t b_step = static_cast<std::size_t>(k * n);
  const std::size_t o_step = static_cast<std::size_t>(m * n);
  const Eigen::Index b_rows = transpose_b ? n : k;
  const Eigen::Index b_cols = transpose_b ? k : n;

  Tensor out(Shape{batch, static_cast<std::size_t>(m), static_cast<std::size_t>(n)});
  for (std::size_t i = 0; i < batch; ++i) {
    ConstMatMap am(a.data().data() + i * a_step, m, k);
    ConstMatMap bm(b.data().data() + i * b_step, b_rows, b_cols);
    MatMap om(out.data().data() + i * o_step, m, n);
    if (transpose_b) {
      om.noalias() = am * bm.transpose();
    } else {
      om.noalias() = am * bm;
    }
  }
  if (g.tracks({&a, &b})) {
    g.record("batched_matmul", {a, b}, out,
             [a, b, out, batch, m, k, n, a_step, b_step, o_step, b_rows, b_cols, transpose_b]() mutable {
               for (std::size_t i = 0; i < batch; ++i) {
                 ConstMatMap go(out.grad().data() + i * o_step, m, n);
                 ConstMatMap am(a.data().data() + i * a_step, m, k);
                 ConstMatMap bm(b.data().data() + i * b_step, b_rows, b_cols);
                 if (a.requires_grad()) {
                   MatMap ga(a.grad().data() + i * a_step, m, k);
                   if (transpose_b) {
                     ga.noalias() += go * bm;
                   } else {
                     ga.noalias() += go * bm.transpose();
                   }
                 }
                 if (b.requires_grad()) {
                   MatMap gb(b.grad().data() + i * b_step, b_rows, b_cols);
                   if (transpose_b) {
                     gb.noalias() += go.transpose() * am;
                   } else {
                     gb.noalias() += am.transpose() * go;
                   }
                 }
               }
             });
  }
  return out;
}

Tensor dense(Graph& g, const Tensor& x, const Tensor& w, const Tensor& bias) {
  require(x.rank() == 2 && w.rank() == 2 && x.dim(1) == w.dim(0),
          "dense: input " + shape_string(x.dims()) + " does not match weight " + shape_string(w.dims()));
  require(bias.rank() == 1 && bias.dim(0) == w.dim(1), "dense: bias length does not match units");
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  const auto d = static_cast<Eigen::Index>(x.dim(1));
  const auto u = static_cast<Eigen::Index>(w.dim(1));
  Tensor out(Shape{x.dim(0), w.dim(1)});
  MatMap om(out.data().data(), n, u);
  om.noalias() = ConstMatMap(x.data().data(), n, d) * ConstMatMap(w.data().data(), d, u);
  Eigen::Map<const Eigen::RowVectorXd> bv(bias.data().data(), u);
  om.rowwise() += bv;
  if (g.tracks({&x, &w, &bias})) {
    g.record("dense", {x, w, bias}, out, [x, w, bias, out, n, d, u]() mutable {
      ConstMatMap go(out.grad().data(), n, u);
      if (x.requires_grad()) {
        MatMap(x.grad().data(), n, d).noalias() += go * ConstMatMap(w.data().data(), d, u).transpose();
      }
      if (w.requires_grad()) {
        MatMap(w.grad().data(), d, u).noalias() += ConstMatMap(x.data().data(), n, d).transpose() * go;
      }
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::RowVectorXd>(bias.grad().data(), u) += go.colwise().sum();
      }
    });
  }
  return out;
}

namespace {

struct ConvGeometry {
  std::size_t batch, in_ch, out_ch, h, w, kh, kw, pad_top, pad_left, out_h, out_w;

  std::size_t taps() const { return kh * kw; }
  std::size_t out_plane() const { return out_h * out_w; }
  bool pointwise() const { return kh == 1 && kw == 1 && pad_top == 0 && pad_left == 0; }
};

// Gathers the input samples seen by kernel tap (i, j) for every output
// position into a C x (out_h * out_w) matrix, zero outside the input.
void gather_tap(const ConvGeometry& geo, const double* x, std::size_t i, std::size_t j, double* col) {
  const auto h = static_cast<std::ptrdiff_t>(geo.h);
  const auto w = static_cast<std::ptrdiff_t>(geo.w);
  const auto ow = static_cast<std::ptrdiff_t>(geo.out_w);
  const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(geo.pad_top);
  const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(geo.pad_left);
  const std::ptrdiff_t x_begin = std::clamp<std::ptrdiff_t>(-dx, 0, ow);
  const std::ptrdiff_t x_end = std::clamp<std::ptrdiff_t>(w - dx, 0, ow);
  for (std::size_t c = 0; c < geo.in_ch; ++c) {
    const double* plane = x + c * geo.h * geo.w;
    double* dst_plane = col + c * geo.out_plane();
    for (std::size_t y = 0; y < geo.out_h; ++y) {
      double* dst = dst_plane + y * geo.out_w;
      const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
      if (sy < 0 || sy >= h || x_begin >= x_end) {
        std::fill(dst, dst + geo.out_w, 0.0);
        continue;
      }
      std::fill(dst, dst + x_begin, 0.0);
      std::memcpy(dst + x_begin, plane + sy * w + (x_begin + dx),
                  static_cast<std::size_t>(x_end - x_begin) * sizeof(double));
      std::fill(dst + x_end, dst + ow, 0.0);
    }
  }
}

// Inverse of gather_tap: adds a C x plane matrix back onto the input grid.
void scatter_tap(const ConvGeometry& geo, const double* col, std::size_t i, std::size_t j, double* x) {
  const auto h = static_cast<std::ptrdiff_t>(geo.h);
  const auto w = static_cast<std::ptrdiff_t>(geo.w);
  const auto ow = static_cast<std::ptrdiff_t>(geo.out_w);
  const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(geo.pad_top);
  const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(geo.pad_left);
  const std::ptrdiff_t x_begin = std::clamp<std::ptrdiff_t>(-dx, 0, ow);
  const std::ptrdiff_t x_end = std::clamp<std::ptrdiff_t>(w - dx, 0, ow);
  for (std::size_t c = 0; c < geo.in_ch; ++c) {
    double* plane = x + c * geo.h * geo.w;
    const double* src_plane = col + c * geo.out_plane();
    for (std::size_t y = 0; y < geo.out_h; ++y) {
      const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
      if (sy < 0 || sy >= h) continue;
      const double* src = src_plane + y * geo.out_w;
      double* dst = plane + sy * w + dx;
      for (std::ptrdiff_t xx = x_begin; xx < x_end; ++xx) dst[xx] += src[xx];
    }
  }
}

}  // namespace

Tensor conv2d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& bias, Padding padding) {
  require(x.rank() == 4, "conv2d: input must be N x C x F x T, got " + shape_string(x.dims()));
  require(w.rank() == 4, "conv2d: weight must be O x C x Kf x Kt, got " + shape_string(w.dims()));
  require(x.dim(1) == w.dim(1), "conv2d: input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                                    std::to_string(w.dim(1)));
  require(bias.rank() == 1 && bias.dim(0) == w.dim(0), "conv2d: bias length does not match output channels");
  ConvGeometry geo{};
  geo.batch = x.dim(0);
  geo.in_ch = x.dim(1);
  geo.h = x.dim(2);
  geo.w = x.dim(3);
  geo.out_ch = w.dim(0);
  geo.kh = w.dim(2);
  geo.kw = w.dim(3);
  if (padding == Padding::Same) {
    geo.pad_top = (geo.kh - 1) / 2;
    geo.pad_left = (geo.kw - 1) / 2;
    geo.out_h = geo.h;
    geo.out_w = geo.w;
  } else {
    require(geo.kh <= geo.h && geo.kw <= geo.w, "conv2d: kernel " + shape_string(w.dims()) +
                                                    " larger than input " + shape_string(x.dims()));
    geo.out_h = geo.h - geo.kh + 1;
    geo.out_w = geo.w - geo.kw + 1;
  }

  const auto o_rows = static_cast<Eigen::Index>(geo.out_ch);
  const auto c_rows = static_cast<Eigen::Index>(geo.in_ch);
  const auto plane = static_cast<Eigen::Index>(geo.out_plane());

  // Per-tap O x C weight slices.
  Buffer taps(geo.taps() * geo.out_ch * geo.in_ch);
  {
    auto wv = w.data();
    for (std::size_t o = 0; o < geo.out_ch; ++o)
      for (std::size_t c = 0; c < geo.in_ch; ++c)
        for (std::size_t t = 0; t < geo.taps(); ++t)
          taps[(t * geo.out_ch + o) * geo.in_ch + c] = wv[(o * geo.in_ch + c) * geo.taps() + t];
  }

  Tensor out(Shape{geo.batch, geo.out_ch, geo.out_h, geo.out_w});
  Buffer col(geo.pointwise() ? 0 : geo.in_ch * geo.out_plane());
  const std::size_t in_step = geo.in_ch * geo.h * geo.w;
  const std::size_t out_step = geo.out_ch * geo.out_plane();
  for (std::size_t n = 0; n < geo.batch; ++n) {
    MatMap om(out.data().data() + n * out_step, o_rows, plane);
    for (std::size_t o = 0; o < geo.out_ch; ++o) om.row(static_cast<Eigen::Index>(o)).setConstant(bias.data()[o]);
    const double* xn = x.data().data() + n * in_step;
    for (std::size_t i = 0; i < geo.kh; ++i) {
      for (std::size_t j = 0; j < geo.kw; ++j) {
        const std::size_t t = i * geo.kw + j;
        ConstMatMap wt(taps.data() + t * geo.out_ch * geo.in_ch, o_rows, c_rows);
        if (geo.pointwise()) {
          om.noalias() += wt * ConstMatMap(xn, c_rows, plane);
        } else {
          gather_tap(geo, xn, i, j, col.data());
          om.noalias() += wt * ConstMatMap(col.data(), c_rows, plane);
        }
      }
    }
  }

  if (g.tracks({&x, &w, &bias})) {
    g.record("conv2d", {x, w, bias}, out,
             [x, w, bias, out, geo, taps = std::move(taps), o_rows, c_rows, plane, in_step, out_step]() mutable {
               Buffer col(geo.pointwise() ? 0 : geo.in_ch * geo.out_plane());
               Buffer dcol(x.requires_grad() && !geo.pointwise() ? geo.in_ch * geo.out_plane() : 0);
               Buffer dtaps(w.requires_grad() ? taps.size() : 0, 0.0);
               for (std::size_t n = 0; n < geo.batch; ++n) {
                 ConstMatMap go(out.grad().data() + n * out_step, o_rows, plane);
                 if (bias.requires_grad()) {
                   Eigen::Map<Eigen::VectorXd>(bias.grad().data(), o_rows) += go.rowwise().sum();
                 }
                 const double* xn = x.data().data() + n * in_step;
                 for (std::size_t i = 0; i < geo.kh; ++i) {
                   for (std::size_t j = 0; j < geo.kw; ++j) {
                     const std::size_t t = i * geo.kw + j;
                     const double* src = xn;
                     if (!geo.pointwise() && w.requires_grad()) {
                       gather_tap(geo, xn, i, j, col.data());
                       src = col.data();
                     }
                     if (w.requires_grad()) {
                       MatMap(dtaps.data() + t * geo.out_ch * geo.in_ch, o_rows, c_rows).noalias() +=
                           go * ConstMatMap(src, c_rows, plane).transpose();
                     }
                     if (x.requires_grad()) {
                       ConstMatMap wt(taps.data() + t * geo.out_ch * geo.in_ch, o_rows, c_rows);
                       double* gxn = x.grad().data() + n * in_step;
                       if (geo.pointwise()) {
                         MatMap(gxn, c_rows, plane).noalias() += wt.transpose() * go;
                       } else {
                         MatMap(dcol.data(), c_rows, plane).noalias() = wt.transpose() * go;
                         scatter_tap(geo, dcol.data(), i, j, gxn);
                       }
                     }
                   }
                 }
               }
               if (w.requires_grad()) {
                 auto gw = w.grad();
                 for (std::size_t o = 0; o < geo.out_ch; ++o)
                   for (std::size_t c = 0; c < geo.in_ch; ++c)
                     for (std::size_t t = 0; t < geo.taps(); ++t)
                       gw[(o * geo.in_ch + c) * geo.taps() + t] += dtaps[(t * geo.out_ch + o) * geo.in_ch + c];
               }
             });
  }
  return out;
}

Tensor pool2d(Graph& g, const Tensor& x, PoolMode mode, std::size_t kernel_f, std::size_t kernel_t,
              std::size_t stride_f, std::size_t stride_t) {
  require(x.rank() == 4, "pool2d: input must be N x C x F x T, got " + shape_string(x.dims()));
  if (kernel_f == 0 || kernel_t == 0 || stride_f == 0 || stride_t == 0) {
    throw InvalidConfig("pool2d: kernel and stride must be positive");
  }
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t h = x.dim(2);
  const std::size_t w = x.dim(3);
  if (kernel_f > h || kernel_t > w) {
    throw InvalidConfig("pool2d: kernel " + std::to_string(kernel_f) + "x" + std::to_string(kernel_t) +
                        " exceeds input " + shape_string(x.dims()));
  }
  const std::size_t oh = (h - kernel_f) / stride_f + 1;
  const std::size_t ow = (w - kernel_t) / stride_t + 1;
  Tensor out(Shape{x.dim(0), x.dim(1), oh, ow});
  auto o = out.data();
  auto xv = x.data();
  std::vector<std::size_t> argmax(mode == PoolMode::Max ? out.size() : 0);
  const double inv_area = 1.0 / static_cast<double>(kernel_f * kernel_t);
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t in_base = p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t oi = (p * oh + y) * ow + xx;
        if (mode == PoolMode::Average) {
          double acc = 0.0;
          for (std::size_t i = 0; i < kernel_f; ++i)
            for (std::size_t j = 0; j < kernel_t; ++j) acc += xv[in_base + (y * stride_f + i) * w + xx * stride_t + j];
          o[oi] = acc * inv_area;
        } else {
          std::size_t best = in_base + (y * stride_f) * w + xx * stride_t;
          for (std::size_t i = 0; i < kernel_f; ++i)
            for (std::size_t j = 0; j < kernel_t; ++j) {
              const std::size_t k = in_base + (y * stride_f + i) * w + xx * stride_t + j;
              if (xv[k] > xv[best]) best = k;
            }
          argmax[oi] = best;
          o[oi] = xv[best];
        }
      }
    }
  }
  if (g.tracks({&x})) {
    g.record(mode == PoolMode::Average ? "avg_pool2d" : "max_pool2d", {x}, out,
             [x, out, mode, argmax = std::move(argmax), planes, h, w, oh, ow, kernel_f, kernel_t, stride_f,
              stride_t, inv_area]() mutable {
               auto go = out.grad();
               auto gx = x.grad();
               if (mode == PoolMode::Max) {
                 for (std::size_t i = 0; i < go.size(); ++i) gx[argmax[i]] += go[i];
                 return;
               }
               for (std::size_t p = 0; p < planes; ++p) {
                 const std::size_t in_base = p * h * w;
                 for (std::size_t y = 0; y < oh; ++y)
                   for (std::size_t xx = 0; xx < ow; ++xx) {
                     const double d = go[(p * oh + y) * ow + xx] * inv_area;
                     for (std::size_t i = 0; i < kernel_f; ++i)
                       for (std::size_t j = 0; j < kernel_t; ++j)
                         gx[in_base + (y * stride_f + i) * w + xx * stride_t + j] += d;
                   }
               }
             });
  }
  return out;
}

Tensor global_avg_over(Graph& g, const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.dims(), axis, "global_avg_over");
  Tensor out(without_axis(x.dims(), axis));
  auto o = out.data();
  auto xv = x.data();
  const double inv = 1.0 / static_cast<double>(s.length);
  for (std::size_t a = 0; a < s.outer; ++a)
    for (std::size_t c = 0; c < s.inner; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < s.length; ++k) acc += xv[(a * s.length + k) * s.inner + c];
      o[a * s.inner + c] = acc * inv;
    }
  if (g.tracks({&x})) {
    g.record("global_avg", {x}, out, [x, out, s, inv]() mutable {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t a = 0; a < s.outer; ++a)
        for (std::size_t c = 0; c < s.inner; ++c) {
          const double d = go[a * s.inner + c] * inv;
          for (std::size_t k = 0; k < s.length; ++k) gx[(a * s.length + k) * s.inner + c] += d;
        }
    });
  }
  return out;
}

Tensor global_max_over(Graph& g, const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.dims(), axis, "global_max_over");
  require(s.length > 0, "global_max_over: empty axis");
  Tensor out(without_axis(x.dims(), axis));
  auto o = out.data();
  auto xv = x.data();
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t a = 0; a < s.outer; ++a)
    for (std::size_t c = 0; c < s.inner; ++c) {
      std::size_t best = a * s.length * s.inner + c;
      for (std::size_t k = 1; k < s.length; ++k) {
        const std::size_t idx = (a * s.length + k) * s.inner + c;
        if (xv[idx] > xv[best]) best = idx;
      }
      argmax[a * s.inner + c] = best;
      o[a * s.inner + c] = xv[best];
    }
  if (g.tracks({&x})) {
    g.record("global_max", {x}, out, [x, out, argmax = std::move(argmax)]() mutable {
      auto go = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[argmax[i]] += go[i];
    });
  }
  return out;
}

namespace {

// Shared backward for normalizations without running statistics:
// dx = inv_std / M * (M * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)).
void normalized_backward(const double* dxhat, const double* xhat, double inv_std, std::size_t count,
                         std::size_t stride, double* dx) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    s1 += dxhat[k * stride];
    s2 += dxhat[k * stride] * xhat[k * stride];
  }
  const double m = static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k) {
    dx[k * stride] += inv_std / m * (m * dxhat[k * stride] - s1 - xhat[k * stride] * s2);
  }
}

}  // namespace

Tensor batch_norm(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, double momentum, bool training) {
  require(x.rank() >= 2, "batch_norm: input needs a channel axis");
  const std::size_t n = x.dim(0);
  const std::size_t c = x.dim(1);
  for (const Tensor* p : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
    require(p->rank() == 1 && p->dim(0) == c, "batch_norm: per-channel parameters must have length " +
                                                  std::to_string(c));
  }
  std::size_t spatial = 1;
  for (std::size_t i = 2; i < x.rank(); ++i) spatial *= x.dim(i);
  const std::size_t count = n * spatial;
  auto xv = x.data();

  std::vector<double> mean(c);
  std::vector<double> inv_std(c);
  if (training) {
    require(count > 1, "batch_norm: training mode needs more than one value per channel");
    for (std::size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = xv.data() + (b * c + ch) * spatial;
        for (std::size_t k = 0; k < spatial; ++k) acc += p[k];
      }
      const double mu = acc / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = xv.data() + (b * c + ch) * spatial;
        for (std::size_t k = 0; k < spatial; ++k) sq += (p[k] - mu) * (p[k] - mu);
      }
      const double var = sq / static_cast<double>(count);
      mean[ch] = mu;
      inv_std[ch] = 1.0 / std::sqrt(var + kNormEpsilon);
      auto rm = running_mean.data();
      auto rv = running_var.data();
      rm[ch] = (1.0 - momentum) * rm[ch] + momentum * mu;
      rv[ch] = (1.0 - momentum) * rv[ch] + momentum * sq / static_cast<double>(count - 1);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean.data()[ch];
      inv_std[ch] = 1.0 / std::sqrt(running_var.data()[ch] + kNormEpsilon);
    }
  }

  Tensor out(x.dims());
  std::vector<double> xhat(x.size());
  auto o = out.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * spatial;
      for (std::size_t k = 0; k < spatial; ++k) {
        const double xh = (xv[base + k] - mean[ch]) * inv_std[ch];
        xhat[base + k] = xh;
        o[base + k] = gamma.data()[ch] * xh + beta.data()[ch];
      }
    }

  if (g.tracks({&x, &gamma, &beta})) {
    g.record("batch_norm", {x, gamma, beta}, out,
             [x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, spatial,
              training]() mutable {
               auto go = out.grad();
               if (gamma.requires_grad() || beta.requires_grad()) {
                 for (std::size_t ch = 0; ch < c; ++ch) {
                   double dg = 0.0;
                   double db = 0.0;
                   for (std::size_t b = 0; b < n; ++b) {
                     const std::size_t base = (b * c + ch) * spatial;
                     for (std::size_t k = 0; k < spatial; ++k) {
                       dg += go[base + k] * xhat[base + k];
                       db += go[base + k];
                     }
                   }
                   if (gamma.requires_grad()) gamma.grad()[ch] += dg;
                   if (beta.requires_grad()) beta.grad()[ch] += db;
                 }
               }
               if (!x.requires_grad()) return;
               auto gx = x.grad();
               for (std::size_t ch = 0; ch < c; ++ch) {
                 const double gm = gamma.data()[ch];
                 if (!training) {
                   for (std::size_t b = 0; b < n; ++b) {
                     const std::size_t base = (b * c + ch) * spatial;
                     for (std::size_t k = 0; k < spatial; ++k) gx[base + k] += go[base + k] * gm * inv_std[ch];
                   }
                   continue;
                 }
                 // Gather the channel into contiguous buffers for the shared formula.
                 const std::size_t count = n * spatial;
                 std::vector<double> dxhat(count);
                 std::vector<double> xh(count);
                 std::vector<double> dx(count, 0.0);
                 for (std::size_t b = 0; b < n; ++b) {
                   const std::size_t base = (b * c + ch) * spatial;
                   for (std::size_t k = 0; k < spatial; ++k) {
                     dxhat[b * spatial + k] = go[base + k] * gm;
                     xh[b * spatial + k] = xhat[base + k];
                   }
                 }
                 normalized_backward(dxhat.data(), xh.data(), inv_std[ch], count, 1, dx.data());
                 for (std::size_t b = 0; b < n; ++b) {
                   const std::size_t base = (b * c + ch) * spatial;
                   for (std::size_t k = 0; k < spatial; ++k) gx[base + k] += dx[b * spatial + k];
                 }
               }
             });
  }
  return out;
}

Tensor instance_norm_freq(Graph& g, const Tensor& x) {
  require(x.rank() == 4, "instance_norm_freq: input must be N x C x F x T, got " + shape_string(x.dims()));
  const std::size_t t_len = x.dim(3);
  require(t_len >= 2, "instance_norm_freq: needs at least two time frames");
  const std::size_t rows = x.size() / t_len;
  Tensor out(x.dims());
  std::vector<double> inv_std(rows);
  auto o = out.data();
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = xv.data() + r * t_len;
    double acc = 0.0;
    for (std::size_t k = 0; k < t_len; ++k) acc += p[k];
    const double mu = acc / static_cast<double>(t_len);
    double sq = 0.0;
    for (std::size_t k = 0; k < t_len; ++k) sq += (p[k] - mu) * (p[k] - mu);
    inv_std[r] = 1.0 / std::sqrt(sq / static_cast<double>(t_len) + kNormEpsilon);
    for (std::size_t k = 0; k < t_len; ++k) o[r * t_len + k] = (p[k] - mu) * inv_std[r];
  }
  if (g.tracks({&x})) {
    g.record("instance_norm_freq", {x}, out, [x, out, inv_std = std::move(inv_std), rows, t_len]() mutable {
      auto go = out.grad();
      auto y = out.data();
      auto gx = x.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        normalized_backward(go.data() + r * t_len, y.data() + r * t_len, inv_std[r], t_len, 1,
                            gx.data() + r * t_len);
      }
    });
  }
  return out;
}

Tensor multi_head_attention(Graph& g, const Tensor& x, const AttentionWeights& weights) {
  require(x.rank() == 3, "multi_head_attention: input must be N x S x D, got " + shape_string(x.dims()));
  const std::size_t n = x.dim(0);
  const std::size_t s = x.dim(1);
  const std::size_t d = x.dim(2);
  const std::size_t h = weights.heads;
  const std::size_t k = weights.key_dim;
  require(h > 0 && k > 0, "multi_head_attention: heads and key_dim must be positive");
  for (const Tensor* p : {&weights.wq, &weights.wk, &weights.wv}) {
    require(p->rank() == 2 && p->dim(0) == d && p->dim(1) == h * k,
            "multi_head_attention: projection must be " + std::to_string(d) + "x" + std::to_string(h * k) +
                ", got " + shape_string(p->dims()));
  }
  require(weights.wo.rank() == 2 && weights.wo.dim(0) == h * k,
          "multi_head_attention: output projection must have " + std::to_string(h * k) + " rows");
  const std::size_t d_out = weights.wo.dim(1);

  const Tensor flat = reshape(g, x, {n * s, d});
  auto split_heads = [&](const Tensor& projection) {
    const Tensor p = matmul(g, flat, projection);
    const Tensor p4 = reshape(g, p, {n, s, h, k});
    const Tensor swapped = permute(g, p4, {0, 2, 1, 3});
    return reshape(g, swapped, {n * h, s, k});
  };
  const Tensor q = split_heads(weights.wq);
  const Tensor key = split_heads(weights.wk);
  const Tensor v = split_heads(weights.wv);
  const Tensor scores = scale(g, batched_matmul(g, q, key, true), 1.0 / std::sqrt(static_cast<double>(k)));
  const Tensor attn = softmax(g, scores, 2);
  const Tensor ctx = batched_matmul(g, attn, v, false);
  const Tensor merged = reshape(g, permute(g, reshape(g, ctx, {n, h, s, k}), {0, 2, 1, 3}), {n * s, h * k});
  return reshape(g, matmul(g, merged, weights.wo), {n, s, d_out});
}

}  // namespace respnet::ops
