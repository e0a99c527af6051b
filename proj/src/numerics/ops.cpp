#include "flowcast/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "flowcast/error.hpp"

namespace flowcast::numerics {

namespace {

using Inputs = Graph::Inputs;
using Grads = std::span<Array* const>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Graph& graph_of(Var v) {
  if (v.graph == nullptr) throw InputError("variable is not attached to a graph");
  return *v.graph;
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

template <typename F>
Array map(const Array& x, F f) {
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

// Splits a shape around `axis` into (outer, axis extent, inner).
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 0;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  return graph_of(a).record(
      {a, b},
      [](Inputs in) {
        Array out(in[0]->shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] + (*in[1])[i];
        return out;
      },
      [](const Array& g, const Array&, Inputs, Grads grads) {
        for (Array* dst : grads) {
          if (!dst) continue;
          for (std::size_t i = 0; i < g.size(); ++i) (*dst)[i] += g[i];
        }
      });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  return graph_of(a).record(
      {a, b},
      [](Inputs in) {
        Array out(in[0]->shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] - (*in[1])[i];
        return out;
      },
      [](const Array& g, const Array&, Inputs, Grads grads) {
        if (grads[0]) {
          for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i];
        }
        if (grads[1]) {
          for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] -= g[i];
        }
      });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  return graph_of(a).record(
      {a, b},
      [](Inputs in) {
        Array out(in[0]->shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] * (*in[1])[i];
        return out;
      },
      [](const Array& g, const Array&, Inputs in, Grads grads) {
        if (grads[0]) {
          for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * (*in[1])[i];
        }
        if (grads[1]) {
          for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] += g[i] * (*in[0])[i];
        }
      });
}

Var scale(Var x, double factor) {
  return graph_of(x).record(
      {x}, [factor](Inputs in) { return map(*in[0], [factor](double v) { return v * factor; }); },
      [factor](const Array& g, const Array&, Inputs, Grads grads) {
        for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * factor;
      });
}

Var add_scalar(Var x, double offset) {
  return graph_of(x).record(
      {x}, [offset](Inputs in) { return map(*in[0], [offset](double v) { return v + offset; }); },
      [](const Array& g, const Array&, Inputs, Grads grads) {
        for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i];
      });
}

Var exp(Var x) {
  return graph_of(x).record(
      {x}, [](Inputs in) { return map(*in[0], [](double v) { return std::exp(v); }); },
      [](const Array& g, const Array& out, Inputs, Grads grads) {
        for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * out[i];
      });
}

Var tanh(Var x) {
  return graph_of(x).record(
      {x}, [](Inputs in) { return map(*in[0], [](double v) { return std::tanh(v); }); },
      [](const Array& g, const Array& out, Inputs, Grads grads) {
        for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * (1.0 - out[i] * out[i]);
      });
}

Var relu(Var x) {
  return graph_of(x).record(
      {x}, [](Inputs in) { return map(*in[0], [](double v) { return v > 0.0 ? v : 0.0; }); },
      [](const Array& g, const Array&, Inputs in, Grads grads) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if ((*in[0])[i] > 0.0) (*grads[0])[i] += g[i];
        }
      });
}

Var square(Var x) {
  return graph_of(x).record(
      {x}, [](Inputs in) { return map(*in[0], [](double v) { return v * v; }); },
      [](const Array& g, const Array&, Inputs in, Grads grads) {
        for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += 2.0 * g[i] * (*in[0])[i];
      });
}

Var sum(Var x) {
  return graph_of(x).record(
      {x},
      [](Inputs in) {
        double total = 0.0;
        for (double v : in[0]->values()) total += v;
        return Array::scalar(total);
      },
      [](const Array& g, const Array&, Inputs, Grads grads) {
        const double gv = g[0];
        for (double& v : grads[0]->values()) v += gv;
      });
}

Var sum_last(Var x) {
  if (x.shape().empty()) throw DimensionError("sum_last on a scalar");
  return graph_of(x).record(
      {x},
      [](Inputs in) {
        const Shape& shape = in[0]->shape();
        const std::size_t width = shape.back();
        Shape out_shape(shape.begin(), shape.end() - 1);
        Array out(out_shape);
        for (std::size_t r = 0; r < out.size(); ++r) {
          double total = 0.0;
          for (std::size_t j = 0; j < width; ++j) total += (*in[0])[r * width + j];
          out[r] = total;
        }
        return out;
      },
      [](const Array& g, const Array&, Inputs in, Grads grads) {
        const std::size_t width = in[0]->shape().back();
        for (std::size_t r = 0; r < g.size(); ++r) {
          for (std::size_t j = 0; j < width; ++j) (*grads[0])[r * width + j] += g[r];
        }
      });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw DimensionError("mean of an empty array");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var affine(Var x, Var w, Var b) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  if (xs.size() != 2 || ws.size() != 2 || b.shape().size() != 1 || ws[1] != xs[1] ||
      b.shape()[0] != ws[0]) {
    throw DimensionError("affine: incompatible shapes x" + to_string(xs) + " w" + to_string(ws) +
                         " b" + to_string(b.shape()));
  }
  return graph_of(x).record(
      {x, w, b},
      [](Inputs in) {
        const auto n = static_cast<Eigen::Index>(in[0]->extent(0));
        const auto fan_in = static_cast<Eigen::Index>(in[0]->extent(1));
        const auto fan_out = static_cast<Eigen::Index>(in[1]->extent(0));
        const Eigen::Map<const RowMatrix> xm(in[0]->data(), n, fan_in);
        const Eigen::Map<const RowMatrix> wm(in[1]->data(), fan_out, fan_in);
        const Eigen::Map<const Eigen::RowVectorXd> bm(in[2]->data(), fan_out);
        Array out(Shape{in[0]->extent(0), in[1]->extent(0)});
        Eigen::Map<RowMatrix> om(out.data(), n, fan_out);
        om.noalias() = xm * wm.transpose();
        om.rowwise() += bm;
        return out;
      },
      [](const Array& g, const Array&, Inputs in, Grads grads) {
        const auto n = static_cast<Eigen::Index>(in[0]->extent(0));
        const auto fan_in = static_cast<Eigen::Index>(in[0]->extent(1));
        const auto fan_out = static_cast<Eigen::Index>(in[1]->extent(0));
        const Eigen::Map<const RowMatrix> gm(g.data(), n, fan_out);
        if (grads[0]) {
          const Eigen::Map<const RowMatrix> wm(in[1]->data(), fan_out, fan_in);
          Eigen::Map<RowMatrix>(grads[0]->data(), n, fan_in).noalias() += gm * wm;
        }
        if (grads[1]) {
          const Eigen::Map<const RowMatrix> xm(in[0]->data(), n, fan_in);
          Eigen::Map<RowMatrix>(grads[1]->data(), fan_out, fan_in).noalias() += gm.transpose() * xm;
        }
        if (grads[2]) {
          Eigen::Map<Eigen::RowVectorXd>(grads[2]->data(), fan_out) += gm.colwise().sum();
        }
      });
}

namespace {

struct ConvDims {
  std::size_t n, cin, len, cout, kw;
  std::ptrdiff_t pad;

  ConvDims(const Array& x, const Array& w)
      : n(x.extent(0)),
        cin(x.extent(1)),
        len(x.extent(2)),
        cout(w.extent(0)),
        kw(w.extent(2)),
        pad(static_cast<std::ptrdiff_t>(w.extent(2) / 2)) {}

  std::size_t rows() const { return cin * kw; }
  std::size_t cols() const { return n * len; }
};

// Column (s * len + t), row (c * kw + k) holds x[s, c, t + k - pad], zero outside.
RowMatrix im2col(const Array& x, const ConvDims& d) {
  RowMatrix col = RowMatrix::Zero(static_cast<Eigen::Index>(d.rows()), static_cast<Eigen::Index>(d.cols()));
  for (std::size_t c = 0; c < d.cin; ++c) {
    for (std::size_t k = 0; k < d.kw; ++k) {
      double* row = col.data() + (c * d.kw + k) * d.cols();
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - d.pad;
      for (std::size_t s = 0; s < d.n; ++s) {
        const double* src = x.data() + (s * d.cin + c) * d.len;
        double* dst = row + s * d.len;
        for (std::size_t t = 0; t < d.len; ++t) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t) + shift;
          if (ti >= 0 && ti < static_cast<std::ptrdiff_t>(d.len)) dst[t] = src[ti];
        }
      }
    }
  }
  return col;
}

}  // namespace

Var conv1d(Var x, Var w, Var b) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  if (xs.size() != 3 || ws.size() != 3 || ws[1] != xs[1] || ws[2] % 2 == 0 ||
      b.shape().size() != 1 || b.shape()[0] != ws[0]) {
    throw DimensionError("conv1d: incompatible shapes x" + to_string(xs) + " w" + to_string(ws) +
                         " b" + to_string(b.shape()));
  }
  return graph_of(x).record(
      {x, w, b},
      [](Inputs in) {
        const ConvDims d(*in[0], *in[1]);
        const RowMatrix col = im2col(*in[0], d);
        const Eigen::Map<const RowMatrix> wm(in[1]->data(), static_cast<Eigen::Index>(d.cout),
                                             static_cast<Eigen::Index>(d.rows()));
        const RowMatrix prod = wm * col;  // [cout, n * len]
        Array out(Shape{d.n, d.cout, d.len});
        for (std::size_t s = 0; s < d.n; ++s) {
          for (std::size_t o = 0; o < d.cout; ++o) {
            const double* src = prod.data() + o * d.cols() + s * d.len;
            double* dst = out.data() + (s * d.cout + o) * d.len;
            const double bias = (*in[2])[o];
            for (std::size_t t = 0; t < d.len; ++t) dst[t] = src[t] + bias;
          }
        }
        return out;
      },
      [](const Array& g, const Array&, Inputs in, Grads grads) {
        const ConvDims d(*in[0], *in[1]);
        RowMatrix gm(static_cast<Eigen::Index>(d.cout), static_cast<Eigen::Index>(d.cols()));
        for (std::size_t s = 0; s < d.n; ++s) {
          for (std::size_t o = 0; o < d.cout; ++o) {
            const double* src = g.data() + (s * d.cout + o) * d.len;
            std::copy(src, src + d.len, gm.data() + o * d.cols() + s * d.len);
          }
        }
        if (grads[2]) {
          for (std::size_t o = 0; o < d.cout; ++o) (*grads[2])[o] += gm.row(static_cast<Eigen::Index>(o)).sum();
        }
        if (grads[1]) {
          const RowMatrix col = im2col(*in[0], d);
          Eigen::Map<RowMatrix> dw(grads[1]->data(), static_cast<Eigen::Index>(d.cout),
                                   static_cast<Eigen::Index>(d.rows()));
          dw.noalias() += gm * col.transpose();
        }
        if (grads[0]) {
          const Eigen::Map<const RowMatrix> wm(in[1]->data(), static_cast<Eigen::Index>(d.cout),
                                               static_cast<Eigen::Index>(d.rows()));
          const RowMatrix dcol = wm.transpose() * gm;  // [cin * kw, n * len]
          for (std::size_t c = 0; c < d.cin; ++c) {
            for (std::size_t k = 0; k < d.kw; ++k) {
              const double* row = dcol.data() + (c * d.kw + k) * d.cols();
              const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - d.pad;
              for (std::size_t s = 0; s < d.n; ++s) {
                double* dst = grads[0]->data() + (s * d.cin + c) * d.len;
                const double* src = row + s * d.len;
                for (std::size_t t = 0; t < d.len; ++t) {
                  const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t) + shift;
                  if (ti >= 0 && ti < static_cast<std::ptrdiff_t>(d.len)) dst[ti] += src[t];
                }
              }
            }
          }
        }
      });
}

Var reshape(Var x, Shape shape) {
  if (element_count(shape) != x.value().size()) {
    throw DimensionError("reshape " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  return graph_of(x).record(
      {x}, [shape](Inputs in) { return in[0]->reshaped(shape); },
      [](const Array& g, const Array&, Inputs, Grads grads) {
        for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i];
      });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape xs = x.shape();
  if (axis >= xs.size() || begin > end || end > xs[axis]) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " of " + to_string(xs));
  }
  return graph_of(x).record(
      {x},
      [axis, begin, end](Inputs in) {
        const AxisSplit s = split_at(in[0]->shape(), axis);
        Shape shape = in[0]->shape();
        shape[axis] = end - begin;
        Array out(shape);
        const std::size_t width = (end - begin) * s.inner;
        for (std::size_t o = 0; o < s.outer; ++o) {
          const double* src = in[0]->data() + (o * s.extent + begin) * s.inner;
          double* dst = out.data() + o * width;
          for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
        }
        return out;
      },
      [axis, begin, end](const Array& g, const Array&, Inputs in, Grads grads) {
        const AxisSplit s = split_at(in[0]->shape(), axis);
        const std::size_t width = (end - begin) * s.inner;
        for (std::size_t o = 0; o < s.outer; ++o) {
          double* dst = grads[0]->data() + (o * s.extent + begin) * s.inner;
          const double* src = g.data() + o * width;
          for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
        }
      });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw DimensionError("concat axis out of range");
  for (const Var& p : parts) {
    const Shape ps = p.shape();
    bool ok = ps.size() == first.size();
    for (std::size_t i = 0; ok && i < ps.size(); ++i) ok = i == axis || ps[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: incompatible shapes " + to_string(first) + " and " +
                           to_string(ps));
    }
  }
  return graph_of(parts.front())
      .record(
          parts,
          [axis](Inputs in) {
            Shape shape = in[0]->shape();
            shape[axis] = 0;
            for (const Array* a : in) shape[axis] += a->shape()[axis];
            Array out(shape);
            const AxisSplit total = split_at(shape, axis);
            std::size_t offset = 0;
            for (const Array* a : in) {
              const AxisSplit s = split_at(a->shape(), axis);
              const std::size_t width = s.extent * s.inner;
              for (std::size_t o = 0; o < s.outer; ++o) {
                const double* src = a->data() + o * width;
                double* dst = out.data() + (o * total.extent + offset) * total.inner;
                for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
              }
              offset += s.extent;
            }
            return out;
          },
          [axis](const Array& g, const Array&, Inputs in, Grads grads) {
            const AxisSplit total = split_at(g.shape(), axis);
            std::size_t offset = 0;
            for (std::size_t p = 0; p < in.size(); ++p) {
              const AxisSplit s = split_at(in[p]->shape(), axis);
              const std::size_t width = s.extent * s.inner;
              if (grads[p]) {
                for (std::size_t o = 0; o < s.outer; ++o) {
                  const double* src = g.data() + (o * total.extent + offset) * total.inner;
                  double* dst = grads[p]->data() + o * width;
                  for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
                }
              }
              offset += s.extent;
            }
          });
}

}  // namespace flowcast::numerics
