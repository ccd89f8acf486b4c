#include "oracles.hpp"
#include "rlncs/neural.hpp"

#include <doctest.h>

#include <filesystem>

using namespace rlncs;

namespace {

Matrix random_bits(Index n, Index b, double p, Rng& rng) {
  Matrix m(n, b);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(p) ? 1.0 : 0.0;
  return m;
}

std::vector<Matrix> random_window(Index n, Index b, int len, Rng& rng) {
  std::vector<Matrix> w;
  for (int k = 0; k < len; ++k) w.push_back(random_bits(n, b, 0.3, rng));
  return w;
}

template <class P>
void zero_all(P& p) {
  visit_tensors([](const std::string&, auto& t) { t.setZero(); }, p);
}

}  // namespace

TEST_CASE("Q-network output range") {
  Rng rng(1);
  QNetParams q = make_qnet(10, 16, 8, 2.0 / 0.9, rng);
  const Vector s = random_bits(10, 1, 0.3, rng).col(0);
  const Vector out = q_forward(q, s);
  CHECK(out.size() == 2);
  CHECK((out.array() > 0.0).all());
  CHECK((out.array() < q.q_max).all());
  CHECK(q_forward(q, s) == out);

  zero_all(q);
  CHECK(q_forward(q, s)[0] == doctest::Approx(q.q_max * 0.5));
  CHECK(q_forward(q, s)[1] == doctest::Approx(q.q_max * 0.5));
  CHECK_THROWS_AS(q_forward(q, Vector::Zero(3)), ParameterError);
}

TEST_CASE("LSTM output range and unrolling identity") {
  Rng rng(2);
  LstmParams p = make_lstm(6, 5, 1, rng);
  std::vector<Vector> window;
  for (int k = 0; k < 2; ++k) window.push_back(random_bits(6, 1, 0.5, rng).col(0));
  const auto [o2, carry2] = lstm_forward(p, window);
  CHECK((o2.array() > 0.0).all());
  CHECK((o2.array() < 1.0).all());

  // one step from zero state, then a second step from its carry
  const auto [o1, carry1] = lstm_forward(p, {window[0]});
  const auto [o2b, carry2b] = lstm_forward(p, {window[1]}, carry1);
  CHECK((o2b - o2).norm() < 1e-14);
  CHECK((carry2b.h[0] - carry2.h[0]).norm() < 1e-14);

  // the first intermediate state of the two-step run equals the single-step run
  std::vector<Matrix> batch{window[0], window[1]};
  const LstmTape tape = lstm_forward_batch(p, batch);
  CHECK((tape.steps[0][0].h.col(0) - carry1.h[0]).norm() < 1e-14);

  zero_all(p);
  CHECK((lstm_forward(p, window).first.array() - 0.5).abs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(lstm_forward(p, {}), ParameterError);
  CHECK_THROWS_AS(lstm_forward(p, {Vector::Zero(4)}), ParameterError);
}

TEST_CASE("loss values") {
  CHECK(dqn_loss(0.7, 0.7) == 0.0);
  CHECK(dqn_loss(1.0, 1.7) == doctest::Approx(0.49));
  CHECK(dqn_loss(1.7, 1.0) == dqn_loss(1.0, 1.7));

  CHECK(lstm_loss(Vector(Vector::Constant(1, 1.0 - 1e-15)), Vector(Vector::Ones(1)), 5.0) < 1e-10);
  CHECK(lstm_loss(Vector(Vector::Constant(1, 0.5)), Vector(Vector::Ones(1)), 5.0) == doctest::Approx(3.4657).epsilon(1e-4));
  CHECK(lstm_loss(Vector(Vector::Constant(1, 0.5)), Vector(Vector::Zero(1)), 5.0) == doctest::Approx(0.6931).epsilon(1e-4));
  // exact 0 and 1 are clamped, never infinite
  CHECK(std::isfinite(lstm_loss(Vector(Vector::Zero(3)), Vector(Vector::Ones(3)), 5.0)));
  CHECK(std::isfinite(lstm_loss(Vector(Vector::Ones(3)), Vector(Vector::Zero(3)), 5.0)));

  // summed over coordinates, averaged over the batch
  Matrix o(2, 2), t(2, 2);
  o << 0.5, 0.5, 0.5, 0.5;
  t << 1, 0, 0, 0;
  CHECK(lstm_loss(o, t, 5.0) == doctest::Approx((5 * std::log(2.0) + 3 * std::log(2.0)) / 2.0));

  CHECK(joint_loss(0.49, 3.4657, 1.0) == 3.4657);
  CHECK(joint_loss(0.49, 3.4657, 0.0) == 0.49);
  CHECK(joint_loss(0.49, 3.4657, 0.5) == doctest::Approx(1.9779).epsilon(1e-4));
  CHECK_THROWS_AS(joint_loss(1, 1, 1.5), ParameterError);
  CHECK_THROWS_AS(joint_loss(1, 1, -0.1), ParameterError);

  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const double p = rng.uniform();
    CHECK(lstm_loss(Vector(Vector::Constant(1, p)), Vector(Vector::Constant(1, rng.bernoulli(0.5))), 5.0) >= 0.0);
    CHECK(dqn_loss(rng.normal(), rng.normal()) >= 0.0);
  }
}

TEST_CASE("learning-rate schedule") {
  const LrSchedule s;
  CHECK(s.at(0) == 0.05);
  CHECK(s.at(4999) == 0.05);
  CHECK(s.at(5000) == doctest::Approx(0.0375).epsilon(1e-15));
  CHECK(s.at(10000) == doctest::Approx(0.028125).epsilon(1e-15));
}

TEST_CASE("dense path gradients match central differences") {
  Rng rng(4);
  for (int draw = 0; draw < 5; ++draw) {
    QNetParams q = make_qnet(7, 6, 5, 2.2, rng);
    oracle::jitter_biases(q, rng);
    const Matrix s = random_bits(7, 3, 0.4, rng);
    Matrix c(2, 3);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();
    const auto loss = [&](const QNetParams& p) { return (q_forward_batch(p, s).q.array() * c.array()).sum(); };
    const QNetParams g = q_backward(q, q_forward_batch(q, s), c);
    std::string name;
    CHECK_MESSAGE(oracle::max_relative_error(q, g, loss, 1e-5, &name) < 1e-4, name);
  }
}

TEST_CASE("LSTM gradients through time match central differences") {
  Rng rng(5);
  for (int layers : {1, 2}) {
    LstmParams p = make_lstm(5, 4, layers, rng);
    const auto in = random_window(5, 2, 8, rng);
    const Matrix target = random_bits(5, 2, 0.3, rng);
    const auto loss = [&](const LstmParams& q) { return lstm_loss(lstm_forward_batch(q, in).output, target, 5.0); };
    const LstmTape tape = lstm_forward_batch(p, in);
    const LstmParams g = lstm_backward(p, tape, lstm_loss_grad_logits(tape.output, target, 5.0));
    std::string name;
    CHECK_MESSAGE(oracle::max_relative_error(p, g, loss, 1e-5, &name) < 1e-4, name);
  }
}

TEST_CASE("sgd step, clipping and non-finite detection") {
  Rng rng(6);
  QNetParams q = make_qnet(4, 3, 3, 2.0, rng);
  const QNetParams before = q;
  sgd_step(q, zeros_like(q), 0.1);
  CHECK(fingerprint(q) == fingerprint(before));

  QNetParams g = zeros_like(q);
  g.layers[0].bias.setConstant(1.0);
  sgd_step(q, g, 0.1);
  CHECK((q.layers[0].bias - before.layers[0].bias).cwiseAbs().maxCoeff() == doctest::Approx(0.1));

  QNetParams big = zeros_like(q);
  big.layers[1].weight.setConstant(10.0);
  const double pre = clip_by_global_norm(big, 5.0);
  CHECK(pre == doctest::Approx(10.0 * 3.0));
  CHECK(global_norm(big) == doctest::Approx(5.0));

  g.layers[2].weight(0, 0) = std::nan("");
  try {
    require_finite(g, "grad");
    FAIL("expected error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("qnet.l2.weight") != std::string::npos);
  }
}

TEST_CASE("initialization") {
  Rng rng(7);
  const QNetParams q = make_qnet(100, 128, 64, 2.2, rng);
  const double bound = std::sqrt(6.0 / (100 + 128));
  CHECK(q.layers[0].weight.cwiseAbs().maxCoeff() <= bound);
  CHECK(q.layers[0].bias == Vector::Zero(128));
  const LstmParams l = make_lstm(100, 200, 1, rng);
  CHECK(l.layers[0].bias.segment(200, 200) == Vector::Ones(200));
  CHECK(l.layers[0].bias.head(200) == Vector::Zero(200));

  const QNetParams pn = make_qnet(100, 128, 64, 2.2, rng, true);
  const double sd = std::sqrt(pn.layers[0].weight.squaredNorm() / static_cast<double>(pn.layers[0].weight.size()));
  CHECK(sd == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("checkpoint round-trip is exact") {
  Rng rng(8);
  Checkpoint ck{make_qnet(6, 5, 4, 2.2, rng), make_qnet(6, 5, 4, 2.2, rng), make_lstm(6, 3, 2, rng)};
  const auto path = std::filesystem::temp_directory_path() / "rlncs_ckpt_test.txt";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(fingerprint(back.online) == fingerprint(ck.online));
  CHECK(fingerprint(back.target) == fingerprint(ck.target));
  CHECK(fingerprint(back.lstm) == fingerprint(ck.lstm));
  CHECK(back.online.q_max == ck.online.q_max);
  CHECK(back.lstm.layers.size() == 2);
}
