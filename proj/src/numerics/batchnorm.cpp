#include "flowcast/numerics/batchnorm.hpp"

#include <cmath>

#include "flowcast/error.hpp"

namespace flowcast::numerics {

namespace {

struct Layout {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t length = 1;

  std::size_t index(std::size_t n, std::size_t c, std::size_t t) const {
    return (n * channels + c) * length + t;
  }
  std::size_t per_channel() const { return batch * length; }
};

Layout layout_of(const Shape& shape) {
  Layout l;
  l.batch = shape[0];
  l.channels = shape[1];
  if (shape.size() == 3) l.length = shape[2];
  return l;
}

// Biased batch mean and variance per channel.
void batch_moments(const Array& x, const Layout& l, std::vector<double>& mu, std::vector<double>& var) {
  mu.assign(l.channels, 0.0);
  var.assign(l.channels, 0.0);
  const double count = static_cast<double>(l.per_channel());
  for (std::size_t c = 0; c < l.channels; ++c) {
    double s = 0.0;
    for (std::size_t n = 0; n < l.batch; ++n) {
      for (std::size_t t = 0; t < l.length; ++t) s += x[l.index(n, c, t)];
    }
    mu[c] = s / count;
    double ss = 0.0;
    for (std::size_t n = 0; n < l.batch; ++n) {
      for (std::size_t t = 0; t < l.length; ++t) {
        const double d = x[l.index(n, c, t)] - mu[c];
        ss += d * d;
      }
    }
    var[c] = ss / count;
  }
}

}  // namespace

BatchNorm::BatchNorm(std::size_t channels, double momentum, double epsilon)
    : gamma(std::make_shared<Parameter>(Array(Shape{channels}, 1.0), "gamma")),
      beta(std::make_shared<Parameter>(Array(Shape{channels}, 0.0), "beta")),
      running_mean(Shape{channels}, 0.0),
      running_var(Shape{channels}, 1.0),
      channels_(channels),
      momentum_(momentum),
      epsilon_(epsilon) {}

Var BatchNorm::operator()(Var x) const {
  const Shape shape = x.shape();
  if ((shape.size() != 2 && shape.size() != 3) || shape[1] != channels_) {
    throw DimensionError("batchnorm over " + std::to_string(channels_) + " channels got " +
                         to_string(shape));
  }
  Graph& g = *x.graph;
  Var gv = g.parameter(gamma);
  Var bv = g.parameter(beta);
  const double eps = epsilon_;

  if (!training_) {
    const Array mean_copy = running_mean;
    const Array var_copy = running_var;
    return g.record(
        {x, gv, bv},
        [mean_copy, var_copy, eps](Graph::Inputs in) {
          const Layout l = layout_of(in[0]->shape());
          Array out(in[0]->shape());
          for (std::size_t c = 0; c < l.channels; ++c) {
            const double inv = 1.0 / std::sqrt(var_copy[c] + eps);
            const double a = (*in[1])[c] * inv;
            const double b = (*in[2])[c] - a * mean_copy[c];
            for (std::size_t n = 0; n < l.batch; ++n) {
              for (std::size_t t = 0; t < l.length; ++t) {
                const std::size_t i = l.index(n, c, t);
                out[i] = a * (*in[0])[i] + b;
              }
            }
          }
          return out;
        },
        [mean_copy, var_copy, eps](const Array& go, const Array&, Graph::Inputs in,
                                   std::span<Array* const> grads) {
          const Layout l = layout_of(in[0]->shape());
          for (std::size_t c = 0; c < l.channels; ++c) {
            const double inv = 1.0 / std::sqrt(var_copy[c] + eps);
            double dgamma = 0.0;
            double dbeta = 0.0;
            for (std::size_t n = 0; n < l.batch; ++n) {
              for (std::size_t t = 0; t < l.length; ++t) {
                const std::size_t i = l.index(n, c, t);
                const double xhat = ((*in[0])[i] - mean_copy[c]) * inv;
                dgamma += go[i] * xhat;
                dbeta += go[i];
                if (grads[0]) (*grads[0])[i] += go[i] * (*in[1])[c] * inv;
              }
            }
            if (grads[1]) (*grads[1])[c] += dgamma;
            if (grads[2]) (*grads[2])[c] += dbeta;
          }
        });
  }

  const Layout layout = layout_of(shape);
  if (layout.batch < 2) throw InputError("batchnorm in training mode needs a batch of at least 2");

  std::vector<double> mu;
  std::vector<double> var;
  batch_moments(x.value(), layout, mu, var);
  const double count = static_cast<double>(layout.per_channel());
  const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
  for (std::size_t c = 0; c < channels_; ++c) {
    running_mean[c] = (1.0 - momentum_) * running_mean[c] + momentum_ * mu[c];
    running_var[c] = (1.0 - momentum_) * running_var[c] + momentum_ * var[c] * unbias;
  }

  return g.record(
      {x, gv, bv},
      [eps](Graph::Inputs in) {
        const Layout l = layout_of(in[0]->shape());
        std::vector<double> m;
        std::vector<double> v;
        batch_moments(*in[0], l, m, v);
        Array out(in[0]->shape());
        for (std::size_t c = 0; c < l.channels; ++c) {
          const double inv = 1.0 / std::sqrt(v[c] + eps);
          for (std::size_t n = 0; n < l.batch; ++n) {
            for (std::size_t t = 0; t < l.length; ++t) {
              const std::size_t i = l.index(n, c, t);
              out[i] = (*in[1])[c] * ((*in[0])[i] - m[c]) * inv + (*in[2])[c];
            }
          }
        }
        return out;
      },
      [eps](const Array& go, const Array&, Graph::Inputs in, std::span<Array* const> grads) {
        const Layout l = layout_of(in[0]->shape());
        std::vector<double> m;
        std::vector<double> v;
        batch_moments(*in[0], l, m, v);
        const double cnt = static_cast<double>(l.per_channel());
        for (std::size_t c = 0; c < l.channels; ++c) {
          const double inv = 1.0 / std::sqrt(v[c] + eps);
          double sum_g = 0.0;
          double sum_gx = 0.0;
          for (std::size_t n = 0; n < l.batch; ++n) {
            for (std::size_t t = 0; t < l.length; ++t) {
              const std::size_t i = l.index(n, c, t);
              const double xhat = ((*in[0])[i] - m[c]) * inv;
              sum_g += go[i];
              sum_gx += go[i] * xhat;
            }
          }
          if (grads[1]) (*grads[1])[c] += sum_gx;
          if (grads[2]) (*grads[2])[c] += sum_g;
          if (grads[0]) {
            const double k = (*in[1])[c] * inv;
            for (std::size_t n = 0; n < l.batch; ++n) {
              for (std::size_t t = 0; t < l.length; ++t) {
                const std::size_t i = l.index(n, c, t);
                const double xhat = ((*in[0])[i] - m[c]) * inv;
                (*grads[0])[i] += k * (go[i] - sum_g / cnt - xhat * sum_gx / cnt);
              }
            }
          }
        }
      });
}

}  // namespace flowcast::numerics
