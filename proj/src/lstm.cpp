#include "ganad/lstm.hpp"

#include "json_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ganad {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

StackedLstm::StackedLstm(Index input_size, std::vector<Index> hidden_sizes, Index output_size,
                         Activation output_activation)
    : input_size_(input_size),
      output_size_(output_size),
      hidden_(std::move(hidden_sizes)),
      activation_(output_activation) {
  if (input_size_ < 1 || output_size_ < 1) throw std::invalid_argument("LSTM sizes must be positive");
  if (hidden_.empty()) throw std::invalid_argument("LSTM depth must be at least 1");
  Index offset = 0;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    const Index h = hidden_[l];
    if (h < 1) throw std::invalid_argument("hidden size must be positive");
    const Index d = layer_input_size(static_cast<Index>(l));
    LayerOffsets o{};
    o.input_weights = offset;
    offset += 4 * h * d;
    o.recurrent_weights = offset;
    offset += 4 * h * h;
    o.biases = offset;
    offset += 4 * h;
    offsets_.push_back(o);
  }
  projection_offset_ = offset;
  offset += output_size_ * hidden_.back();
  projection_bias_offset_ = offset;
  offset += output_size_;
  params_ = VectorXd::Zero(offset);
}

#define GANAD_LSTM_VIEWS(CONST, MAT, VEC)                                                        \
  MAT StackedLstm::input_weights(Index layer, CONST VectorXd& flat) const {                      \
    const auto h = hidden_size(layer);                                                           \
    return MAT(flat.data() + offsets_[static_cast<std::size_t>(layer)].input_weights, 4 * h,     \
               layer_input_size(layer));                                                         \
  }                                                                                              \
  MAT StackedLstm::recurrent_weights(Index layer, CONST VectorXd& flat) const {                  \
    const auto h = hidden_size(layer);                                                           \
    return MAT(flat.data() + offsets_[static_cast<std::size_t>(layer)].recurrent_weights, 4 * h, \
               h);                                                                               \
  }                                                                                              \
  VEC StackedLstm::biases(Index layer, CONST VectorXd& flat) const {                             \
    return VEC(flat.data() + offsets_[static_cast<std::size_t>(layer)].biases,                   \
               4 * hidden_size(layer));                                                          \
  }                                                                                              \
  MAT StackedLstm::projection_weights(CONST VectorXd& flat) const {                              \
    return MAT(flat.data() + projection_offset_, output_size_, hidden_.back());                  \
  }                                                                                              \
  VEC StackedLstm::projection_bias(CONST VectorXd& flat) const {                                 \
    return VEC(flat.data() + projection_bias_offset_, output_size_);                             \
  }

GANAD_LSTM_VIEWS(const, StackedLstm::ConstMatrixMap, StackedLstm::ConstVectorMap)
GANAD_LSTM_VIEWS(, StackedLstm::MatrixMap, StackedLstm::VectorMap)
#undef GANAD_LSTM_VIEWS

void StackedLstm::initialize(std::uint64_t seed, double scale, double forget_bias) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-scale, scale);
  for (Index l = 0; l < depth(); ++l) {
    for (double& w : input_weights(l).reshaped()) w = uniform(rng);
    for (double& w : recurrent_weights(l).reshaped()) w = uniform(rng);
    auto b = biases(l);
    const Index h = hidden_size(l);
    b.setZero();
    b.segment(h, h).setConstant(forget_bias);
  }
  for (double& w : projection_weights().reshaped()) w = uniform(rng);
  projection_bias().setZero();
}

bool StackedLstm::same_shape(const StackedLstm& other) const {
  return input_size_ == other.input_size_ && output_size_ == other.output_size_ &&
         hidden_ == other.hidden_ && activation_ == other.activation_;
}

namespace {

template <typename Derived>
void clamp_inplace(Eigen::MatrixBase<Derived>& m) {
  m = m.cwiseMax(-kPreActivationClamp).cwiseMin(kPreActivationClamp);
}

// Written through exp so Eigen vectorizes them; its double tanh is scalar.
template <typename Derived>
Eigen::ArrayXXd vsigmoid(const Eigen::ArrayBase<Derived>& x) {
  return (1.0 + (-x).exp()).inverse();
}

template <typename Derived>
Eigen::ArrayXXd vtanh(const Eigen::ArrayBase<Derived>& x) {
  return 2.0 * (1.0 + (-2.0 * x).exp()).inverse() - 1.0;
}

MatrixXd apply_activation(Activation act, const MatrixXd& pre) {
  switch (act) {
    case Activation::identity: return pre;
    case Activation::tanh: return vtanh(pre.array()).matrix();
    case Activation::sigmoid: return vsigmoid(pre.array()).matrix();
  }
  return pre;
}

// Elementwise derivative of the head activation, given its input and output.
MatrixXd activation_derivative(Activation act, const MatrixXd& pre, const MatrixXd& out) {
  MatrixXd d;
  switch (act) {
    case Activation::identity: d = MatrixXd::Ones(out.rows(), out.cols()); break;
    case Activation::tanh: d = (1.0 - out.array().square()).matrix(); break;
    case Activation::sigmoid: d = (out.array() * (1.0 - out.array())).matrix(); break;
  }
  return (pre.array().abs() < kPreActivationClamp).select(d, 0.0);
}

}  // namespace

std::vector<MatrixXd> forward(const StackedLstm& net, std::span<const MatrixXd> batch, LstmCache* cache) {
  if (batch.empty()) return {};
  const Index B = static_cast<Index>(batch.size());
  const Index S = batch.front().rows();
  for (const auto& seq : batch) {
    if (seq.cols() != net.input_size())
      throw std::invalid_argument("sequence has " + std::to_string(seq.cols()) +
                                  " features, network expects " + std::to_string(net.input_size()));
    if (seq.rows() != S) throw std::invalid_argument("sequences in a batch must share their length");
    if (!seq.allFinite()) throw std::invalid_argument("non-finite input to LSTM");
  }
  if (S < 1) throw std::invalid_argument("empty sequence");

  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  c.batch = B;
  c.steps = S;
  const Index depth = net.depth();
  c.layer_inputs.assign(static_cast<std::size_t>(depth), MatrixXd());
  c.pre.assign(static_cast<std::size_t>(depth), MatrixXd());
  c.gates.assign(static_cast<std::size_t>(depth), MatrixXd());
  c.cells.assign(static_cast<std::size_t>(depth), MatrixXd());
  c.hidden.assign(static_cast<std::size_t>(depth), MatrixXd());

  MatrixXd x(net.input_size(), S * B);
  for (Index b = 0; b < B; ++b)
    for (Index t = 0; t < S; ++t) x.col(t * B + b) = batch[static_cast<std::size_t>(b)].row(t).transpose();

  for (Index l = 0; l < depth; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const Index h = net.hidden_size(l);
    const auto wh = net.recurrent_weights(l);
    const auto bias = net.biases(l);
    MatrixXd pre = net.input_weights(l) * x;
    MatrixXd gates(4 * h, S * B);
    MatrixXd cells(h, S * B);
    MatrixXd hidden(h, S * B);
    for (Index t = 0; t < S; ++t) {
      auto a = pre.middleCols(t * B, B);
      a.colwise() += bias;
      if (t > 0) a.noalias() += wh * hidden.middleCols((t - 1) * B, B);
      clamp_inplace(a);
      auto g = gates.middleCols(t * B, B);
      g.topRows(3 * h) = vsigmoid(a.topRows(3 * h).array()).matrix();
      g.bottomRows(h) = vtanh(a.bottomRows(h).array()).matrix();
      auto cell = cells.middleCols(t * B, B);
      cell = (g.middleRows(0, h).array() * g.middleRows(3 * h, h).array()).matrix();
      if (t > 0) cell.array() += g.middleRows(h, h).array() * cells.middleCols((t - 1) * B, B).array();
      hidden.middleCols(t * B, B) = (g.middleRows(2 * h, h).array() * vtanh(cell.array())).matrix();
    }
    c.layer_inputs[li] = std::move(x);
    c.pre[li] = std::move(pre);
    c.gates[li] = std::move(gates);
    c.cells[li] = std::move(cells);
    x = hidden;
    c.hidden[li] = std::move(hidden);
  }

  c.head_pre = net.projection_weights() * x;
  c.head_pre.colwise() += net.projection_bias();
  clamp_inplace(c.head_pre);
  c.outputs = apply_activation(net.output_activation(), c.head_pre);

  std::vector<MatrixXd> out(static_cast<std::size_t>(B), MatrixXd(S, net.output_size()));
  for (Index b = 0; b < B; ++b)
    for (Index t = 0; t < S; ++t) out[static_cast<std::size_t>(b)].row(t) = c.outputs.col(t * B + b).transpose();
  return out;
}

MatrixXd forward(const StackedLstm& net, const MatrixXd& sequence, LstmCache* cache) {
  return forward(net, std::span<const MatrixXd>(&sequence, 1), cache).front();
}

LstmGradients backward(const StackedLstm& net, const LstmCache& cache,
                       std::span<const MatrixXd> output_grads, bool want_params, bool want_inputs) {
  const Index B = cache.batch;
  const Index S = cache.steps;
  if (static_cast<Index>(output_grads.size()) != B || static_cast<Index>(cache.pre.size()) != net.depth() ||
      cache.head_pre.rows() != net.output_size())
    throw std::invalid_argument("cache does not match network or gradient batch");

  MatrixXd d_out(net.output_size(), S * B);
  for (Index b = 0; b < B; ++b) {
    const auto& g = output_grads[static_cast<std::size_t>(b)];
    if (g.rows() != S || g.cols() != net.output_size())
      throw std::invalid_argument("output gradient shape mismatch");
    for (Index t = 0; t < S; ++t) d_out.col(t * B + b) = g.row(t).transpose();
  }

  LstmGradients result;
  if (want_params) result.params = GradientSet::Zero(net.parameter_count());

  const MatrixXd d_head =
      (d_out.array() * activation_derivative(net.output_activation(), cache.head_pre, cache.outputs).array())
          .matrix();
  const std::size_t top = static_cast<std::size_t>(net.depth() - 1);
  if (want_params) {
    net.projection_weights(result.params).noalias() = d_head * cache.hidden[top].transpose();
    net.projection_bias(result.params) = d_head.rowwise().sum();
  }
  MatrixXd d_hidden = net.projection_weights().transpose() * d_head;

  for (Index l = net.depth() - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const Index h = net.hidden_size(l);
    const auto wh = net.recurrent_weights(l);
    const MatrixXd& gates = cache.gates[li];
    const MatrixXd& cells = cache.cells[li];
    const MatrixXd& pre = cache.pre[li];
    MatrixXd d_pre(4 * h, S * B);
    MatrixXd dh_next = MatrixXd::Zero(h, B);
    MatrixXd dc_next = MatrixXd::Zero(h, B);
    for (Index t = S - 1; t >= 0; --t) {
      const auto g = gates.middleCols(t * B, B);
      const auto gi = g.middleRows(0, h).array();
      const auto gf = g.middleRows(h, h).array();
      const auto go = g.middleRows(2 * h, h).array();
      const auto gg = g.middleRows(3 * h, h).array();
      const Eigen::ArrayXXd tc = vtanh(cells.middleCols(t * B, B).array());
      const Eigen::ArrayXXd dh = d_hidden.middleCols(t * B, B).array() + dh_next.array();
      const Eigen::ArrayXXd dc = dc_next.array() + dh * go * (1.0 - tc.square());
      auto da = d_pre.middleCols(t * B, B);
      da.middleRows(0, h) = (dc * gg * gi * (1.0 - gi)).matrix();
      if (t > 0) {
        da.middleRows(h, h) = (dc * cells.middleCols((t - 1) * B, B).array() * gf * (1.0 - gf)).matrix();
      } else {
        da.middleRows(h, h).setZero();
      }
      da.middleRows(2 * h, h) = (dh * tc * go * (1.0 - go)).matrix();
      da.middleRows(3 * h, h) = (dc * gi * (1.0 - gg.square())).matrix();
      da = (pre.middleCols(t * B, B).array().abs() < kPreActivationClamp).select(da, 0.0);
      dc_next = (dc * gf).matrix();
      dh_next.noalias() = wh.transpose() * da;
    }
    if (want_params) {
      net.input_weights(l, result.params).noalias() = d_pre * cache.layer_inputs[li].transpose();
      if (S > 1)
        net.recurrent_weights(l, result.params).noalias() =
            d_pre.rightCols((S - 1) * B) * cache.hidden[li].leftCols((S - 1) * B).transpose();
      net.biases(l, result.params) = d_pre.rowwise().sum();
    }
    if (l > 0 || want_inputs) d_hidden = net.input_weights(l).transpose() * d_pre;
  }

  if (want_inputs) {
    result.inputs.assign(static_cast<std::size_t>(B), MatrixXd(S, net.input_size()));
    for (Index b = 0; b < B; ++b)
      for (Index t = 0; t < S; ++t)
        result.inputs[static_cast<std::size_t>(b)].row(t) = d_hidden.col(t * B + b).transpose();
  }
  return result;
}

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

}  // namespace

GradCheckResult grad_check(const StackedLstm& net, std::span<const MatrixXd> inputs, const OutputLoss& loss,
                           double eps, bool check_inputs) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite-difference step must be positive");

  LstmCache cache;
  const auto outputs = forward(net, inputs, &cache);
  std::vector<MatrixXd> output_grads;
  loss(outputs, &output_grads);
  const auto analytic = backward(net, cache, output_grads, true, check_inputs);

  auto evaluate = [&](const StackedLstm& n, std::span<const MatrixXd> x) { return loss(forward(n, x), nullptr); };

  GradCheckResult result;
  StackedLstm probe = net;
  for (Index i = 0; i < probe.parameter_count(); ++i) {
    const double saved = probe.parameters()(i);
    probe.parameters()(i) = saved + eps;
    const double up = evaluate(probe, inputs);
    probe.parameters()(i) = saved - eps;
    const double down = evaluate(probe, inputs);
    probe.parameters()(i) = saved;
    result.max_param_error =
        std::max(result.max_param_error, relative_error(analytic.params(i), (up - down) / (2.0 * eps)));
  }
  if (check_inputs) {
    std::vector<MatrixXd> x(inputs.begin(), inputs.end());
    for (std::size_t b = 0; b < x.size(); ++b) {
      for (Index k = 0; k < x[b].size(); ++k) {
        double& entry = x[b].data()[k];
        const double saved = entry;
        entry = saved + eps;
        const double up = evaluate(net, x);
        entry = saved - eps;
        const double down = evaluate(net, x);
        entry = saved;
        result.max_input_error = std::max(
            result.max_input_error, relative_error(analytic.inputs[b].data()[k], (up - down) / (2.0 * eps)));
      }
    }
  }
  result.max_relative_error = std::max(result.max_param_error, result.max_input_error);
  return result;
}

void to_json(nlohmann::json& j, const StackedLstm& net) {
  j = nlohmann::json{{"input_size", net.input_size()},
                     {"hidden_sizes", net.hidden_sizes()},
                     {"output_size", net.output_size()},
                     {"output_activation", std::string(to_string(net.output_activation()))},
                     {"parameters", vector_to_json(net.parameters())}};
}

void from_json(const nlohmann::json& j, StackedLstm& net) {
  net = StackedLstm(j.at("input_size").get<Index>(), j.at("hidden_sizes").get<std::vector<Index>>(),
                    j.at("output_size").get<Index>(),
                    activation_from_string(j.at("output_activation").get<std::string>()));
  VectorXd params = vector_from_json(j.at("parameters"));
  if (params.size() != net.parameter_count())
    throw std::runtime_error("checkpoint parameter count " + std::to_string(params.size()) +
                             " does not match network shape " + std::to_string(net.parameter_count()));
  net.parameters() = std::move(params);
}

}  // namespace ganad
