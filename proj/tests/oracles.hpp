#pragma once

// Independent reference computations used by the tests. Deliberately naive: scalar loops,
// no shared code with the library beyond reading parameters.

#include "ganad/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using ganad::Index;
using ganad::MatrixXd;
using ganad::VectorXd;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Element-by-element LSTM forward pass for one sequence, evaluated in scalar type T.
/// `params` replaces the network's own parameter vector when given.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> lstm_forward_as(const ganad::StackedLstm& net, const MatrixXd& x,
                                                                 const std::vector<T>* params = nullptr) {
  using std::exp;
  using std::tanh;
  auto param = [&](Index flat_index) {
    return params ? (*params)[static_cast<std::size_t>(flat_index)] : static_cast<T>(net.parameters()(flat_index));
  };
  // Flat index of entry (r, c) of a column-major view into net.parameters().
  auto at = [&](const auto& view, Index r, Index c) {
    return static_cast<Index>(view.data() - net.parameters().data()) + c * view.rows() + r;
  };
  auto sig = [](T v) { return T(1) / (T(1) + exp(-v)); };
  const T clamp = static_cast<T>(ganad::kPreActivationClamp);

  const Index steps = x.rows();
  std::vector<std::vector<T>> layer_in(static_cast<std::size_t>(steps));
  for (Index t = 0; t < steps; ++t)
    for (Index k = 0; k < x.cols(); ++k) layer_in[static_cast<std::size_t>(t)].push_back(static_cast<T>(x(t, k)));

  for (Index l = 0; l < net.depth(); ++l) {
    const Index h = net.hidden_size(l);
    const auto wx = net.input_weights(l);
    const auto wh = net.recurrent_weights(l);
    const auto b = net.biases(l);
    std::vector<T> hp(static_cast<std::size_t>(h), T(0)), cp(static_cast<std::size_t>(h), T(0));
    std::vector<std::vector<T>> out(static_cast<std::size_t>(steps));
    for (Index t = 0; t < steps; ++t) {
      const auto& in = layer_in[static_cast<std::size_t>(t)];
      std::vector<T> hn(static_cast<std::size_t>(h)), cn(static_cast<std::size_t>(h));
      for (Index u = 0; u < h; ++u) {
        T a[4];
        for (int g = 0; g < 4; ++g) {
          const Index row = g * h + u;
          T s = param(at(b, row, 0));
          for (std::size_t k = 0; k < in.size(); ++k) s += param(at(wx, row, static_cast<Index>(k))) * in[k];
          for (Index k = 0; k < h; ++k) s += param(at(wh, row, k)) * hp[static_cast<std::size_t>(k)];
          a[g] = std::clamp(s, -clamp, clamp);
        }
        const T i = sig(a[0]), f = sig(a[1]), o = sig(a[2]), g = tanh(a[3]);
        cn[static_cast<std::size_t>(u)] = f * cp[static_cast<std::size_t>(u)] + i * g;
        hn[static_cast<std::size_t>(u)] = o * tanh(cn[static_cast<std::size_t>(u)]);
      }
      out[static_cast<std::size_t>(t)] = hn;
      hp = hn;
      cp = cn;
    }
    layer_in = std::move(out);
  }

  const auto wy = net.projection_weights();
  const auto by = net.projection_bias();
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> y(steps, net.output_size());
  for (Index t = 0; t < steps; ++t) {
    for (Index o = 0; o < net.output_size(); ++o) {
      T s = param(at(by, o, 0));
      const auto& hv = layer_in[static_cast<std::size_t>(t)];
      for (std::size_t k = 0; k < hv.size(); ++k) s += param(at(wy, o, static_cast<Index>(k))) * hv[k];
      s = std::clamp(s, -clamp, clamp);
      switch (net.output_activation()) {
        case ganad::Activation::identity: y(t, o) = s; break;
        case ganad::Activation::tanh: y(t, o) = tanh(s); break;
        case ganad::Activation::sigmoid: y(t, o) = sig(s); break;
      }
    }
  }
  return y;
}

inline MatrixXd lstm_forward(const ganad::StackedLstm& net, const MatrixXd& x) {
  return lstm_forward_as<double>(net, x);
}

/// Central differences over every parameter in extended precision; `loss` maps the network
/// outputs (one matrix per sequence) to a scalar.
inline VectorXd extended_parameter_gradient(
    const ganad::StackedLstm& net, const std::vector<MatrixXd>& inputs,
    const std::function<long double(const std::vector<Eigen::Matrix<long double, -1, -1>>&)>& loss, double eps) {
  std::vector<long double> p(static_cast<std::size_t>(net.parameter_count()));
  for (Index i = 0; i < net.parameter_count(); ++i) p[static_cast<std::size_t>(i)] = net.parameters()(i);
  auto evaluate = [&] {
    std::vector<Eigen::Matrix<long double, -1, -1>> out;
    for (const auto& x : inputs) out.push_back(lstm_forward_as<long double>(net, x, &p));
    return loss(out);
  };
  VectorXd g(net.parameter_count());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double keep = p[i];
    p[i] = keep + eps;
    const long double up = evaluate();
    p[i] = keep - eps;
    const long double down = evaluate();
    p[i] = keep;
    g(static_cast<Index>(i)) = static_cast<double>((up - down) / (2.0L * static_cast<long double>(eps)));
  }
  return g;
}

/// Central-difference gradient of f at p.
inline VectorXd finite_difference(const std::function<double(const VectorXd&)>& f, VectorXd p, double eps) {
  VectorXd g(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    const double keep = p(i);
    p(i) = keep + eps;
    const double up = f(p);
    p(i) = keep - eps;
    const double down = f(p);
    p(i) = keep;
    g(i) = (up - down) / (2.0 * eps);
  }
  return g;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

struct Eigenpairs {
  VectorXd values;   // descending
  MatrixXd vectors;  // columns
};

/// Classical Jacobi: rotate away the largest off-diagonal entry until all are negligible.
inline Eigenpairs max_pivot_jacobi(MatrixXd a) {
  const Index n = a.rows();
  MatrixXd v = MatrixXd::Identity(n, n);
  for (int iter = 0; iter < 100000; ++iter) {
    Index p = 0, q = 1;
    double best = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (std::abs(a(i, j)) > best) best = std::abs(a(i, j)), p = i, q = j;
    if (n < 2 || best < 1e-300 || best < 1e-18 * a.norm()) break;
    const double theta = 0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
    const double c = std::cos(theta), s = std::sin(theta);
    for (Index k = 0; k < n; ++k) {
      const double akp = a(k, p), akq = a(k, q);
      a(k, p) = c * akp - s * akq;
      a(k, q) = s * akp + c * akq;
    }
    for (Index k = 0; k < n; ++k) {
      const double apk = a(p, k), aqk = a(q, k);
      a(p, k) = c * apk - s * aqk;
      a(q, k) = s * apk + c * aqk;
    }
    for (Index k = 0; k < n; ++k) {
      const double vkp = v(k, p), vkq = v(k, q);
      v(k, p) = c * vkp - s * vkq;
      v(k, q) = s * vkp + c * vkq;
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) > a(y, y); });
  Eigenpairs out{VectorXd(n), MatrixXd(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Covariance with explicit double loops (N - 1 denominator).
inline MatrixXd covariance(const MatrixXd& x) {
  const Index n = x.rows(), m = x.cols();
  std::vector<double> mean(static_cast<std::size_t>(m), 0.0);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) mean[static_cast<std::size_t>(j)] += x(i, j);
    mean[static_cast<std::size_t>(j)] /= static_cast<double>(n);
  }
  MatrixXd c(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b) {
      double s = 0.0;
      for (Index i = 0; i < n; ++i)
        s += (x(i, a) - mean[static_cast<std::size_t>(a)]) * (x(i, b) - mean[static_cast<std::size_t>(b)]);
      c(a, b) = s / static_cast<double>(n - 1);
    }
  return c;
}

/// Unbiased MMD^2 by direct triple summation.
inline double mmd_direct(const std::vector<VectorXd>& g, const std::vector<VectorXd>& r,
                         const std::function<double(const VectorXd&, const VectorXd&)>& k) {
  const double n = static_cast<double>(g.size()), m = static_cast<double>(r.size());
  double gg = 0.0, gr = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (i != j) gg += k(g[i], g[j]);
  for (const auto& a : g)
    for (const auto& b : r) gr += k(a, b);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j)
      if (i != j) rr += k(r[i], r[j]);
  return gg / (n * (n - 1)) - 2.0 * gr / (n * m) + rr / (m * (m - 1));
}

inline std::function<double(const VectorXd&, const VectorXd&)> rbf(double sigma) {
  return [sigma](const VectorXd& a, const VectorXd& b) {
    double d2 = 0.0;
    for (Index i = 0; i < a.size(); ++i) d2 += (a(i) - b(i)) * (a(i) - b(i));
    return std::exp(-d2 / (2.0 * sigma * sigma));
  };
}

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion confusion(const std::vector<int>& pred, const std::vector<int>& truth) {
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && truth[i] == 1) ++c.tp;
    if (pred[i] == 1 && truth[i] == 0) ++c.fp;
    if (pred[i] == 0 && truth[i] == 0) ++c.tn;
    if (pred[i] == 0 && truth[i] == 1) ++c.fn;
  }
  return c;
}

/// Mean over columns of the Pearson correlation, straight from the definition.
inline double pearson_mean(const MatrixXd& x, const MatrixXd& y) {
  double total = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    double mx = 0.0, my = 0.0;
    for (Index t = 0; t < x.rows(); ++t) mx += x(t, j), my += y(t, j);
    mx /= static_cast<double>(x.rows());
    my /= static_cast<double>(x.rows());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Index t = 0; t < x.rows(); ++t) {
      sxy += (x(t, j) - mx) * (y(t, j) - my);
      sxx += (x(t, j) - mx) * (x(t, j) - mx);
      syy += (y(t, j) - my) * (y(t, j) - my);
    }
    if (sxx > 1e-24 && syy > 1e-24) total += sxy / std::sqrt(sxx * syy);
  }
  return total / static_cast<double>(x.cols());
}

}  // namespace oracle
