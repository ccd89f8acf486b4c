#include "rlncs/neural.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rlncs {

namespace {

void init_weights(Matrix& w, Index fan_in, Index fan_out, Rng& rng, bool paper_init) {
  if (paper_init) {
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, 0.1);
    return;
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
}

DenseParams make_dense(Index n_in, Index n_out, Rng& rng, bool paper_init) {
  DenseParams d{Matrix(n_out, n_in), Vector::Zero(n_out)};
  init_weights(d.weight, n_in, n_out, rng, paper_init);
  return d;
}

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

Matrix affine(const DenseParams& d, const Matrix& x) { return (d.weight * x).colwise() + d.bias; }

}  // namespace

QNetParams make_qnet(Index n_in, Index hidden1, Index hidden2, double q_max, Rng& rng, bool paper_init) {
  QNetParams q;
  q.layers[0] = make_dense(n_in, hidden1, rng, paper_init);
  q.layers[1] = make_dense(hidden1, hidden2, rng, paper_init);
  q.layers[2] = make_dense(hidden2, 2, rng, paper_init);
  q.q_max = q_max;
  return q;
}

LstmParams make_lstm(Index n_in, Index hidden, int layers, Rng& rng, bool paper_init) {
  if (layers < 1) throw ParameterError("make_lstm: need at least one layer");
  LstmParams p;
  Index in = n_in;
  for (int l = 0; l < layers; ++l) {
    LstmLayerParams layer{Matrix(4 * hidden, in), Matrix(4 * hidden, hidden), Vector::Zero(4 * hidden)};
    init_weights(layer.w_in, in, hidden, rng, paper_init);
    init_weights(layer.w_rec, hidden, hidden, rng, paper_init);
    layer.bias.segment(hidden, hidden).setOnes();
    p.layers.push_back(std::move(layer));
    in = hidden;
  }
  p.output = make_dense(hidden, n_in, rng, paper_init);
  return p;
}

// ---- Q-network ---------------------------------------------------------

QTape q_forward_batch(const QNetParams& params, const Matrix& states) {
  if (states.rows() != params.layers[0].weight.cols())
    throw ParameterError("q_forward: state length " + std::to_string(states.rows()) + " does not match network input " +
                         std::to_string(params.layers[0].weight.cols()));
  QTape t;
  t.input = states;
  t.pre1 = affine(params.layers[0], states);
  t.act1 = relu(t.pre1);
  t.pre2 = affine(params.layers[1], t.act1);
  t.act2 = relu(t.pre2);
  t.sig = sigmoid(affine(params.layers[2], t.act2));
  t.q = params.q_max * t.sig;
  return t;
}

Vector q_forward(const QNetParams& params, const Vector& state) { return q_forward_batch(params, state).q.col(0); }

QNetParams q_backward(const QNetParams& params, const QTape& tape, const Matrix& dq) {
  QNetParams g = zeros_like(params);
  const Matrix dz3 = (dq.array() * params.q_max * tape.sig.array() * (1.0 - tape.sig.array())).matrix();
  g.layers[2].weight = dz3 * tape.act2.transpose();
  g.layers[2].bias = dz3.rowwise().sum();
  const Matrix dz2 = ((params.layers[2].weight.transpose() * dz3).array() * (tape.pre2.array() > 0.0).cast<double>()).matrix();
  g.layers[1].weight = dz2 * tape.act1.transpose();
  g.layers[1].bias = dz2.rowwise().sum();
  const Matrix dz1 = ((params.layers[1].weight.transpose() * dz2).array() * (tape.pre1.array() > 0.0).cast<double>()).matrix();
  g.layers[0].weight = dz1 * tape.input.transpose();
  g.layers[0].bias = dz1.rowwise().sum();
  return g;
}

// ---- LSTM --------------------------------------------------------------

LstmTape lstm_forward_batch(const LstmParams& params, const std::vector<Matrix>& inputs, const LstmCarry& carry) {
  if (inputs.empty()) throw ParameterError("lstm_forward: window must hold at least one state");
  const Index hidden = params.hidden();
  const Index batch = inputs.front().cols();
  const std::size_t n_layers = params.layers.size();
  if (!carry.h.empty() && (carry.h.size() != n_layers || carry.c.size() != n_layers))
    throw ParameterError("lstm_forward: carry does not match layer count");

  LstmTape tape;
  tape.steps.resize(n_layers);
  const std::vector<Matrix>* layer_inputs = &inputs;
  std::vector<Matrix> next_inputs;

  for (std::size_t l = 0; l < n_layers; ++l) {
    const LstmLayerParams& lp = params.layers[l];
    Matrix h = Matrix::Zero(hidden, batch);
    Matrix c = Matrix::Zero(hidden, batch);
    if (!carry.h.empty()) {
      h = carry.h[l].replicate(1, batch);
      c = carry.c[l].replicate(1, batch);
    }
    auto& steps = tape.steps[l];
    steps.reserve(layer_inputs->size());
    std::vector<Matrix> outputs;
    outputs.reserve(layer_inputs->size());
    for (const Matrix& x : *layer_inputs) {
      if (x.rows() != lp.w_in.cols() || x.cols() != batch) throw ParameterError("lstm_forward: input shape mismatch");
      LstmStepCache s;
      s.input = x;
      s.h_prev = h;
      s.c_prev = c;
      const Matrix pre = ((lp.w_in * x + lp.w_rec * h).colwise() + lp.bias);
      s.gate_i = sigmoid(pre.middleRows(0, hidden));
      s.gate_f = sigmoid(pre.middleRows(hidden, hidden));
      s.gate_o = sigmoid(pre.middleRows(2 * hidden, hidden));
      s.gate_g = pre.middleRows(3 * hidden, hidden).array().tanh().matrix();
      s.c = s.gate_f.cwiseProduct(c) + s.gate_i.cwiseProduct(s.gate_g);
      s.tanh_c = s.c.array().tanh().matrix();
      s.h = s.gate_o.cwiseProduct(s.tanh_c);
      h = s.h;
      c = s.c;
      outputs.push_back(s.h);
      steps.push_back(std::move(s));
    }
    next_inputs = std::move(outputs);
    layer_inputs = &next_inputs;
  }

  tape.logits = affine(params.output, tape.steps.back().back().h);
  tape.output = sigmoid(tape.logits);
  return tape;
}

std::pair<Vector, LstmCarry> lstm_forward(const LstmParams& params, const std::vector<Vector>& window,
                                          const LstmCarry& carry) {
  std::vector<Matrix> inputs(window.begin(), window.end());
  LstmTape tape = lstm_forward_batch(params, inputs, carry);
  LstmCarry next;
  for (const auto& layer_steps : tape.steps) {
    next.h.push_back(layer_steps.back().h.col(0));
    next.c.push_back(layer_steps.back().c.col(0));
  }
  return {tape.output.col(0), std::move(next)};
}

LstmParams lstm_backward(const LstmParams& params, const LstmTape& tape, const Matrix& dlogits) {
  LstmParams g = zeros_like(params);
  const Index hidden = params.hidden();
  const Matrix& h_last = tape.steps.back().back().h;
  g.output.weight = dlogits * h_last.transpose();
  g.output.bias = dlogits.rowwise().sum();

  const std::size_t n_layers = params.layers.size();
  const std::size_t n_steps = tape.steps.front().size();
  // Upstream gradient into each step's hidden output of the current layer.
  std::vector<Matrix> dh_above(n_steps, Matrix::Zero(hidden, dlogits.cols()));
  dh_above.back() = params.output.weight.transpose() * dlogits;

  for (std::size_t l = n_layers; l-- > 0;) {
    const LstmLayerParams& lp = params.layers[l];
    LstmLayerParams& gl = g.layers[l];
    const auto& steps = tape.steps[l];
    std::vector<Matrix> dx(n_steps);
    Matrix dh_next = Matrix::Zero(hidden, dlogits.cols());
    Matrix dc_next = Matrix::Zero(hidden, dlogits.cols());
    Matrix dpre(4 * hidden, dlogits.cols());
    for (std::size_t k = n_steps; k-- > 0;) {
      const LstmStepCache& s = steps[k];
      const Matrix dh = dh_above[k] + dh_next;
      const auto one = Eigen::ArrayXXd::Ones(hidden, dh.cols());
      const Eigen::ArrayXXd dc =
          dh.array() * s.gate_o.array() * (one - s.tanh_c.array().square()) + dc_next.array();
      dpre.middleRows(0, hidden) = (dc * s.gate_g.array() * s.gate_i.array() * (one - s.gate_i.array())).matrix();
      dpre.middleRows(hidden, hidden) = (dc * s.c_prev.array() * s.gate_f.array() * (one - s.gate_f.array())).matrix();
      dpre.middleRows(2 * hidden, hidden) =
          (dh.array() * s.tanh_c.array() * s.gate_o.array() * (one - s.gate_o.array())).matrix();
      dpre.middleRows(3 * hidden, hidden) = (dc * s.gate_i.array() * (one - s.gate_g.array().square())).matrix();
      dc_next = (dc * s.gate_f.array()).matrix();

      gl.w_in.noalias() += dpre * s.input.transpose();
      gl.w_rec.noalias() += dpre * s.h_prev.transpose();
      gl.bias += dpre.rowwise().sum();
      dh_next.noalias() = lp.w_rec.transpose() * dpre;
      if (l > 0) dx[k].noalias() = lp.w_in.transpose() * dpre;
    }
    if (l > 0) dh_above = std::move(dx);
  }
  return g;
}

// ---- losses ------------------------------------------------------------

double dqn_loss(double q_pred, double beta) {
  const double e = beta - q_pred;
  return e * e;
}

namespace {
constexpr double kProbFloor = 1e-12;
}

double lstm_loss(const Vector& output, const Vector& target, double omega) {
  return lstm_loss(Matrix(output), Matrix(target), omega);
}

double lstm_loss(const Matrix& output, const Matrix& target, double omega) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw ParameterError("lstm_loss: shape mismatch");
  const Eigen::ArrayXXd p = output.array().max(kProbFloor).min(1.0 - kProbFloor);
  const Eigen::ArrayXXd t = target.array();
  const double total = (-omega * t * p.log() - (1.0 - t) * (1.0 - p).log()).sum();
  return total / static_cast<double>(output.cols());
}

Matrix lstm_loss_grad_logits(const Matrix& output, const Matrix& target, double omega) {
  const Eigen::ArrayXXd p = output.array();
  const Eigen::ArrayXXd t = target.array();
  return ((omega * t * (p - 1.0) + (1.0 - t) * p) / static_cast<double>(output.cols())).matrix();
}

double joint_loss(double j_dqn, double j_ls, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("joint_loss: lambda must lie in [0, 1]");
  return (1.0 - lambda) * j_dqn + lambda * j_ls;
}

double LrSchedule::at(long step) const {
  return base * std::pow(factor, static_cast<double>(step / period));
}

// ---- checkpoints -------------------------------------------------------

namespace {

void write_tensor(std::ostream& out, const std::string& name, const double* data, Index rows, Index cols) {
  out << name << ' ' << rows << ' ' << cols << '\n';
  char buf[40];
  for (Index i = 0; i < rows * cols; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data[i]);
    out << buf << (i + 1 == rows * cols ? '\n' : ' ');
  }
  if (rows * cols == 0) out << '\n';
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << "rlncs-checkpoint 1\n";
  auto emit = [&](const std::string& prefix) {
    return [&out, prefix](const std::string& name, const auto& t) {
      write_tensor(out, prefix + name, t.data(), t.rows(), t.cols());
    };
  };
  out << "lstm.layers 1 1\n" << ckpt.lstm.layers.size() << '\n';
  visit_tensors(emit(""), ckpt.online);
  visit_tensors(emit("target."), ckpt.target);
  visit_tensors(emit(""), ckpt.lstm);
  write_tensor(out, "qnet.q_max", &ckpt.online.q_max, 1, 1);
  write_tensor(out, "target.qnet.q_max", &ckpt.target.q_max, 1, 1);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "rlncs-checkpoint" || version != 1) throw std::runtime_error("not an rlncs checkpoint: " + path.string());

  std::map<std::string, Matrix> tensors;
  std::string name;
  Index rows = 0, cols = 0;
  while (in >> name >> rows >> cols) {
    Matrix m(rows, cols);
    std::string tok;
    for (Index i = 0; i < rows * cols; ++i) {
      if (!(in >> tok)) throw std::runtime_error("truncated tensor " + name);
      m.data()[i] = std::strtod(tok.c_str(), nullptr);
    }
    tensors[name] = std::move(m);
  }

  auto take = [&](const std::string& key) -> const Matrix& {
    auto it = tensors.find(key);
    if (it == tensors.end()) throw std::runtime_error("checkpoint is missing tensor " + key);
    return it->second;
  };

  Checkpoint ckpt;
  const int n_layers = static_cast<int>(take("lstm.layers")(0, 0));
  ckpt.lstm.layers.resize(static_cast<std::size_t>(n_layers));
  auto fill = [&](const std::string& prefix) {
    return [&, prefix](const std::string& tname, auto& t) {
      const Matrix& src = take(prefix + tname);
      if constexpr (std::remove_reference_t<decltype(t)>::ColsAtCompileTime == 1) {
        t = src.col(0);
      } else {
        t = src;
      }
    };
  };
  visit_tensors(fill(""), ckpt.online);
  visit_tensors(fill("target."), ckpt.target);
  visit_tensors(fill(""), ckpt.lstm);
  ckpt.online.q_max = take("qnet.q_max")(0, 0);
  ckpt.target.q_max = take("target.qnet.q_max")(0, 0);
  return ckpt;
}

}  // namespace rlncs
