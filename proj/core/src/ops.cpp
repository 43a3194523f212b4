// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/nn/ops.hpp"

#include <cmath>
#include <numbers>

namespace emodiff::nn {

namespace {

template <typename T>
void check_same_shape(const char* op, Var<T> a, Var<T> b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw_shape(op, a.rows(), a.cols(), b.rows(), b.cols());
  }
}

template <typename T>
Tape<T>& tape_of(Var<T> a) {
  return *a.tape();
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  if (a.cols() != b.rows()) throw_shape("matmul", a.cols(), b.cols(), b.rows(), b.cols());
  const int ia = a.id(), ib = b.id();
  Matrix<T> out = a.value() * b.value();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(ia)) t.grad_buffer(ia).noalias() += g * t.value(ib).transpose();
    if (t.requires_grad(ib)) t.grad_buffer(ib).noalias() += t.value(ia).transpose() * g;
  });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  if (a.cols() != b.cols()) throw_shape("matmul_nt", b.rows(), a.cols(), b.rows(), b.cols());
  const int ia = a.id(), ib = b.id();
  Matrix<T> out = a.value() * b.value().transpose();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(ia)) t.grad_buffer(ia).noalias() += g * t.value(ib);
    if (t.requires_grad(ib)) t.grad_buffer(ib).noalias() += g.transpose() * t.value(ia);
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  check_same_shape("add", a, b);
  const int ia = a.id(), ib = b.id();
  Matrix<T> out = a.value() + b.value();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(ia)) t.grad_buffer(ia) += g;
    if (t.requires_grad(ib)) t.grad_buffer(ib) += g;
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  check_same_shape("sub", a, b);
  const int ia = a.id(), ib = b.id();
  Matrix<T> out = a.value() - b.value();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(ia)) t.grad_buffer(ia) += g;
    if (t.requires_grad(ib)) t.grad_buffer(ib) -= g;
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  check_same_shape("mul", a, b);
  const int ia = a.id(), ib = b.id();
  Matrix<T> out = a.value().cwiseProduct(b.value());
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(ia)) t.grad_buffer(ia) += g.cwiseProduct(t.value(ib));
    if (t.requires_grad(ib)) t.grad_buffer(ib) += g.cwiseProduct(t.value(ia));
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  const int ia = a.id();
  Matrix<T> out = a.value() * factor;
  return tape_of(a).record(std::move(out), {a}, [ia, factor](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(ia) += g * factor;
  });
}

template <typename T>
Var<T> add_row(Var<T> a, Var<T> row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw_shape("add_row", 1, a.cols(), row.rows(), row.cols());
  }
  const int ia = a.id(), ir = row.id();
  Matrix<T> out = a.value().rowwise() + row.value().row(0);
  return tape_of(a).record(std::move(out), {a, row}, [ia, ir](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(ia)) t.grad_buffer(ia) += g;
    if (t.requires_grad(ir)) t.grad_buffer(ir) += g.colwise().sum();
  });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw_shape("concat_rows", p.rows(), cols, p.rows(), p.cols());
    rows += p.rows();
  }
  Matrix<T> out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    layout.emplace_back(p.id(), r);
    r += p.rows();
  }
  return tape_of(parts.front())
      .record(std::move(out), parts, [layout](Tape<T>& t, const Matrix<T>& g) {
        for (const auto& [id, start] : layout) {
          if (!t.requires_grad(id)) continue;
          auto& buf = t.grad_buffer(id);
          buf += g.middleRows(start, buf.rows());
        }
      });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) throw_shape("concat_cols", rows, p.cols(), p.rows(), p.cols());
    cols += p.cols();
  }
  Matrix<T> out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    layout.emplace_back(p.id(), c);
    c += p.cols();
  }
  return tape_of(parts.front())
      .record(std::move(out), parts, [layout](Tape<T>& t, const Matrix<T>& g) {
        for (const auto& [id, start] : layout) {
          if (!t.requires_grad(id)) continue;
          auto& buf = t.grad_buffer(id);
          buf += g.middleCols(start, buf.cols());
        }
      });
}

template <typename T>
Var<T> slice_rows(Var<T> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows out of range");
  }
  const int ia = a.id();
  Matrix<T> out = a.value().middleRows(start, count);
  return tape_of(a).record(std::move(out), {a}, [ia, start, count](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(ia).middleRows(start, count) += g;
  });
}

template <typename T>
Var<T> slice_cols(Var<T> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols out of range");
  }
  const int ia = a.id();
  Matrix<T> out = a.value().middleCols(start, count);
  return tape_of(a).record(std::move(out), {a}, [ia, start, count](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(ia).middleCols(start, count) += g;
  });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const Eigen::Index n = x.rows(), c = x.cols();
  if (gain.rows() != 1 || gain.cols() != c) throw_shape("layer_norm gain", 1, c, gain.rows(), gain.cols());
  if (bias.rows() != 1 || bias.cols() != c) throw_shape("layer_norm bias", 1, c, bias.rows(), bias.cols());
  Matrix<T> normed(n, c);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
  const auto& xv = x.value();
  for (Eigen::Index r = 0; r < n; ++r) {
    const T mu = xv.row(r).mean();
    const T var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = T(1) / std::sqrt(var + eps);
    normed.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix<T> out = (normed.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return tape_of(x).record(
      std::move(out), {x, gain, bias},
      [ix, ig, ib, normed = std::move(normed), inv_std = std::move(inv_std)](
          Tape<T>& t, const Matrix<T>& g) {
        if (t.requires_grad(ig)) t.grad_buffer(ig) += g.cwiseProduct(normed).colwise().sum();
        if (t.requires_grad(ib)) t.grad_buffer(ib) += g.colwise().sum();
        if (!t.requires_grad(ix)) return;
        const auto& gv = t.value(ig);
        Matrix<T> dn = (g.array().rowwise() * gv.row(0).array()).matrix();
        auto& dx = t.grad_buffer(ix);
        for (Eigen::Index r = 0; r < dn.rows(); ++r) {
          const T m1 = dn.row(r).mean();
          const T m2 = dn.row(r).cwiseProduct(normed.row(r)).mean();
          dx.row(r).array() +=
              inv_std(r) * (dn.row(r).array() - m1 - normed.row(r).array() * m2);
        }
      });
}

template <typename T>
Var<T> softmax_rows(Var<T> a) {
  Matrix<T> out(a.rows(), a.cols());
  const auto& av = a.value();
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const T m = av.row(r).maxCoeff();
    out.row(r) = (av.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  const int ia = a.id();
  const int io = static_cast<int>(tape_of(a).size());
  return tape_of(a).record(std::move(out), {a}, [ia, io](Tape<T>& t, const Matrix<T>& g) {
    const auto& y = t.value(io);
    Matrix<T> gy = g.cwiseProduct(y);
    Eigen::Matrix<T, Eigen::Dynamic, 1> dots = gy.rowwise().sum();
    t.grad_buffer(ia) += gy - (y.array().colwise() * dots.array()).matrix();
  });
}

template <typename T>
Var<T> gelu(Var<T> a) {
  const T k = T(0.7978845608028654);  // sqrt(2 / pi)
  const T c = T(0.044715);
  const auto& x = a.value();
  Matrix<T> th = (k * (x.array() + c * x.array().cube())).tanh().matrix();
  Matrix<T> out = (T(0.5) * x.array() * (T(1) + th.array())).matrix();
  const int ia = a.id();
  return tape_of(a).record(std::move(out), {a}, [ia, k, c, th = std::move(th)](Tape<T>& t, const Matrix<T>& g) {
    const auto& xv = t.value(ia).array();
    auto d = T(0.5) * (T(1) + th.array()) +
             T(0.5) * xv * (T(1) - th.array().square()) * k * (T(1) + T(3) * c * xv.square());
    t.grad_buffer(ia).array() += g.array() * d;
  });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  Matrix<T> out = a.value().array().tanh().matrix();
  const int ia = a.id();
  const int io = static_cast<int>(tape_of(a).size());
  return tape_of(a).record(std::move(out), {a}, [ia, io](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(ia).array() += g.array() * (T(1) - t.value(io).array().square());
  });
}

template <typename T>
Var<T> exp(Var<T> a) {
  Matrix<T> out = a.value().array().exp().matrix();
  const int ia = a.id();
  const int io = static_cast<int>(tape_of(a).size());
  return tape_of(a).record(std::move(out), {a}, [ia, io](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(ia).array() += g.array() * t.value(io).array();
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(ia).array() += g(0, 0);
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  return scale(sum(a), T(1) / static_cast<T>(a.value().size()));
}

template <typename T>
Var<T> sum_squares(Var<T> a) {
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  const int ia = a.id();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(ia) += (T(2) * g(0, 0)) * t.value(ia);
  });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, int target) {
  if (logits.rows() != 1) throw_shape("cross_entropy", 1, logits.cols(), logits.rows(), logits.cols());
  if (target < 0 || target >= logits.cols()) throw ShapeError("cross_entropy target out of range");
  const auto& z = logits.value();
  const T m = z.maxCoeff();
  Matrix<T> p = (z.array() - m).exp().matrix();
  const T norm = p.sum();
  p /= norm;
  Matrix<T> out(1, 1);
  out(0, 0) = m + std::log(norm) - z(0, target);
  const int il = logits.id();
  return tape_of(logits).record(std::move(out), {logits},
                                [il, target, p = std::move(p)](Tape<T>& t, const Matrix<T>& g) {
                                  auto& buf = t.grad_buffer(il);
                                  buf += g(0, 0) * p;
                                  buf(0, target) -= g(0, 0);
                                });
}

#define EMODIFF_INSTANTIATE_OPS(T)                                                     \
  template Var<T> matmul(Var<T>, Var<T>);                                              \
  template Var<T> matmul_nt(Var<T>, Var<T>);                                           \
  template Var<T> add(Var<T>, Var<T>);                                                 \
  template Var<T> sub(Var<T>, Var<T>);                                                 \
  template Var<T> mul(Var<T>, Var<T>);                                                 \
  template Var<T> scale(Var<T>, T);                                                    \
  template Var<T> add_row(Var<T>, Var<T>);                                             \
  template Var<T> concat_rows(const std::vector<Var<T>>&);                             \
  template Var<T> concat_cols(const std::vector<Var<T>>&);                             \
  template Var<T> slice_rows(Var<T>, Eigen::Index, Eigen::Index);                      \
  template Var<T> slice_cols(Var<T>, Eigen::Index, Eigen::Index);                      \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                               \
  template Var<T> softmax_rows(Var<T>);                                                \
  template Var<T> gelu(Var<T>);                                                        \
  template Var<T> tanh(Var<T>);                                                        \
  template Var<T> exp(Var<T>);                                                         \
  template Var<T> sum(Var<T>);                                                         \
  template Var<T> mean(Var<T>);                                                        \
  template Var<T> sum_squares(Var<T>);                                                 \
  template Var<T> cross_entropy(Var<T>, int);

EMODIFF_INSTANTIATE_OPS(float)
EMODIFF_INSTANTIATE_OPS(double)

#undef EMODIFF_INSTANTIATE_OPS

}  // namespace emodiff::nn
