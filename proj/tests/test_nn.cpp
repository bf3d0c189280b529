#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "ttsfront/nn/checkpoint.hpp"
#include "ttsfront/nn/gradcheck.hpp"
#include "ttsfront/nn/layers.hpp"
#include "ttsfront/nn/losses.hpp"
#include "ttsfront/nn/lstm.hpp"
#include "ttsfront/nn/optim.hpp"

using namespace ttsfront;
using nn::Tensor;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, std::mt19937& rng,
                             double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& v : t.data) v = dist(rng);
  return t;
}

// Scalar probe loss: weighted sum of outputs, so d(loss)/d(out) is a
// fixed random tensor. Keeps layer checks independent of the losses.
struct Probe {
  Tensor<double> weights;
  explicit Probe(const Tensor<double>& like, std::mt19937& rng) {
    weights = random_tensor(like.shape, rng);
  }
  double loss(const Tensor<double>& y) const {
    double acc = 0.0;
    for (size_t i = 0; i < y.size(); ++i) acc += weights.data[i] * y.data[i];
    return acc;
  }
  Tensor<double> grad() const { return weights; }
};

}  // namespace

TEST_CASE("conv1d identity kernel reproduces the input", "[nn]") {
  nn::Conv1d<double> conv(1, 1, 1);
  conv.weight.data[0] = 1.0;
  Tensor<double> x({4, 1});
  x.data = {1.0, -2.0, 3.0, 0.5};
  auto y = conv.forward(x);
  for (size_t i = 0; i < x.size(); ++i) CHECK(y.data[i] == x.data[i]);
}

TEST_CASE("conv1d hand case with zero padding", "[nn]") {
  nn::Conv1d<double> conv(1, 1, 3);
  conv.weight.data = {1.0, 1.0, 1.0};
  Tensor<double> x({3, 1});
  x.data = {1.0, 2.0, 3.0};
  auto y = conv.forward(x);
  CHECK(y.data[0] == Catch::Approx(3.0));
  CHECK(y.data[1] == Catch::Approx(6.0));
  CHECK(y.data[2] == Catch::Approx(5.0));
}

TEST_CASE("lstm with all-zero parameters outputs zeros", "[nn]") {
  nn::Lstm<double> lstm(3, 4);
  Tensor<double> x({5, 3});
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (auto& v : x.data) v = dist(rng);
  nn::Lstm<double>::Cache cache;
  auto h = lstm.forward(x, &cache);
  for (double v : h.data) CHECK(v == 0.0);
}

TEST_CASE("bilstm with T=1 concatenates two single-step lstms", "[nn]") {
  std::mt19937 rng(2);
  nn::BiLstm<double> bi(3, 2);
  bi.init(rng);
  Tensor<double> x({1, 3});
  x.data = {0.3, -0.2, 0.9};
  nn::BiLstm<double>::Cache cache;
  auto y = bi.forward(x, &cache);
  REQUIRE(y.shape == std::vector<int>{1, 4});
  nn::Lstm<double>::Cache cf, cb;
  auto hf = bi.fwd.forward(x, &cf);
  auto hb = bi.bwd.forward(x, &cb);
  CHECK(y.data[0] == hf.data[0]);
  CHECK(y.data[1] == hf.data[1]);
  CHECK(y.data[2] == hb.data[0]);
  CHECK(y.data[3] == hb.data[1]);
}

TEST_CASE("linear layer gradients match finite differences", "[nn]") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> dim(1, 5);
    int in = dim(rng), out = dim(rng), T = dim(rng);
    nn::Linear<double> lin(in, out);
    lin.init(rng);
    auto x = random_tensor({T, in}, rng);
    nn::Lstm<double>::Cache unused;
    (void)unused;
    Probe probe(lin.forward(x), rng);
    auto params = lin.params("linear");
    params.push_back({"input", &x});
    auto report = nn::gradient_check<double>(
        params, [&] { return probe.loss(lin.forward(x)); },
        [&] {
          nn::zero_grads(params);
          auto y = lin.forward(x);
          auto gin = lin.backward(x, probe.grad());
          for (size_t i = 0; i < x.size(); ++i) x.grad[i] += gin.data[i];
        });
    INFO(report.describe());
    CHECK(report.ok);
    CHECK(report.max_rel_err < 1e-6);
  }
}

TEST_CASE("conv1d gradients match finite differences", "[nn]") {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_int_distribution<int> ks(0, 2);
    int cin = dim(rng), cout = dim(rng), T = dim(rng) + 1;
    int K = 2 * ks(rng) + 1;
    nn::Conv1d<double> conv(cin, cout, K);
    conv.init(rng);
    auto x = random_tensor({T, cin}, rng);
    Probe probe(conv.forward(x), rng);
    auto params = conv.params("conv");
    params.push_back({"input", &x});
    auto report = nn::gradient_check<double>(
        params, [&] { return probe.loss(conv.forward(x)); },
        [&] {
          nn::zero_grads(params);
          auto gin = conv.backward(x, probe.grad());
          for (size_t i = 0; i < x.size(); ++i) x.grad[i] += gin.data[i];
        });
    INFO(report.describe());
    CHECK(report.ok);
  }
}

TEST_CASE("embedding gradients match finite differences", "[nn]") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> dim(1, 5);
    int vocab = dim(rng) + 2, d = dim(rng), T = dim(rng);
    nn::Embedding<double> emb(vocab, d);
    emb.init(rng);
    std::vector<int> ids;
    std::uniform_int_distribution<int> pick(0, vocab - 1);
    for (int t = 0; t < T; ++t) ids.push_back(pick(rng));
    Probe probe(emb.forward(ids), rng);
    auto params = emb.params("emb");
    auto report = nn::gradient_check<double>(
        params, [&] { return probe.loss(emb.forward(ids)); },
        [&] {
          nn::zero_grads(params);
          emb.backward(ids, probe.grad());
        });
    INFO(report.describe());
    CHECK(report.ok);
  }
}

TEST_CASE("bilstm gradients match finite differences", "[nn]") {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> dim(1, 3);
    int D = dim(rng) + 1, H = dim(rng), T = dim(rng) + 1;
    nn::BiLstm<double> bi(D, H);
    bi.init(rng);
    auto x = random_tensor({T, D}, rng);
    nn::BiLstm<double>::Cache cache;
    Probe probe(bi.forward(x, &cache), rng);
    auto params = bi.params("bilstm");
    params.push_back({"input", &x});
    auto report = nn::gradient_check<double>(
        params,
        [&] {
          nn::BiLstm<double>::Cache c;
          return probe.loss(bi.forward(x, &c));
        },
        [&] {
          nn::zero_grads(params);
          nn::BiLstm<double>::Cache c;
          bi.forward(x, &c);
          auto gin = bi.backward(x, c, probe.grad());
          for (size_t i = 0; i < x.size(); ++i) x.grad[i] += gin.data[i];
        });
    INFO(report.describe());
    CHECK(report.ok);
    CHECK(report.max_rel_err < 1e-4);
  }
}

TEST_CASE("loss closed forms", "[nn]") {
  SECTION("uniform logits give CE = ln K") {
    Tensor<double> logits({2, 7});
    CHECK(nn::softmax_cross_entropy<double>(logits, {3, 0}, nullptr) ==
          Catch::Approx(std::log(7.0)).epsilon(1e-12));
  }
  SECTION("BCE at logit 0 target 1 is ln 2") {
    Tensor<double> logits({1});
    CHECK(nn::sigmoid_bce<double>(logits, {1.0}, nullptr) ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SECTION("softmax rows sum to 1") {
    std::mt19937 rng(8);
    auto logits = random_tensor({6, 11}, rng, 4.0);
    auto p = nn::softmax_rows(logits);
    for (int r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (int k = 0; k < p.cols(); ++k) s += p.row(r)[k];
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
  SECTION("perfect predictions have zero MSE and L1") {
    Tensor<double> a({3, 2}), b({3, 2});
    a.data = b.data = {1, 2, 3, 4, 5, 6};
    CHECK(nn::mse<double>(a, b, nullptr) == 0.0);
    CHECK(nn::l1<double>(a, b, nullptr) == 0.0);
  }
  SECTION("non-finite input is an error") {
    Tensor<double> logits({1, 2});
    logits.data[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nn::softmax_cross_entropy<double>(logits, {0}, nullptr),
                    NumericError);
  }
}

TEST_CASE("all four losses pass finite-difference checks", "[nn]") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> dim(1, 5);
    int N = dim(rng), K = dim(rng) + 1;

    SECTION("trial " + std::to_string(trial)) {}

    {  // cross entropy
      auto logits = random_tensor({N, K}, rng);
      std::vector<int> gold;
      std::uniform_int_distribution<int> pick(0, K - 1);
      for (int i = 0; i < N; ++i) gold.push_back(pick(rng));
      std::vector<nn::ParamRef<double>> params{{"logits", &logits}};
      auto report = nn::gradient_check<double>(
          params, [&] { return nn::softmax_cross_entropy<double>(logits, gold, nullptr); },
          [&] {
            nn::zero_grads(params);
            Tensor<double> g(logits.shape);
            nn::softmax_cross_entropy<double>(logits, gold, &g);
            for (size_t i = 0; i < g.size(); ++i) logits.grad[i] += g.data[i];
          });
      INFO("ce: " << report.describe());
      CHECK(report.ok);
    }
    {  // bce
      auto logits = random_tensor({N}, rng, 2.0);
      std::vector<double> targets;
      std::uniform_int_distribution<int> bit(0, 1);
      for (int i = 0; i < N; ++i) targets.push_back(bit(rng));
      std::vector<nn::ParamRef<double>> params{{"logits", &logits}};
      auto report = nn::gradient_check<double>(
          params, [&] { return nn::sigmoid_bce<double>(logits, targets, nullptr); },
          [&] {
            nn::zero_grads(params);
            Tensor<double> g(logits.shape);
            nn::sigmoid_bce<double>(logits, targets, &g);
            for (size_t i = 0; i < g.size(); ++i) logits.grad[i] += g.data[i];
          });
      INFO("bce: " << report.describe());
      CHECK(report.ok);
    }
    {  // mse + l1
      auto pred = random_tensor({N, K}, rng);
      auto target = random_tensor({N, K}, rng);
      std::vector<nn::ParamRef<double>> params{{"pred", &pred}};
      auto mse_report = nn::gradient_check<double>(
          params, [&] { return nn::mse<double>(pred, target, nullptr); },
          [&] {
            nn::zero_grads(params);
            Tensor<double> g(pred.shape);
            nn::mse<double>(pred, target, &g);
            for (size_t i = 0; i < g.size(); ++i) pred.grad[i] += g.data[i];
          });
      INFO("mse: " << mse_report.describe());
      CHECK(mse_report.ok);
      auto l1_report = nn::gradient_check<double>(
          params, [&] { return nn::l1<double>(pred, target, nullptr); },
          [&] {
            nn::zero_grads(params);
            Tensor<double> g(pred.shape);
            nn::l1<double>(pred, target, &g);
            for (size_t i = 0; i < g.size(); ++i) pred.grad[i] += g.data[i];
          });
      INFO("l1: " << l1_report.describe());
      CHECK(l1_report.ok);
    }
  }
}

TEST_CASE("corrupted backward fails the gradient check", "[nn]") {
  std::mt19937 rng(10);
  nn::Linear<double> lin(3, 2);
  lin.init(rng);
  auto x = random_tensor({2, 3}, rng);
  Probe probe(lin.forward(x), rng);
  auto params = lin.params("linear");
  auto report = nn::gradient_check<double>(
      params, [&] { return probe.loss(lin.forward(x)); },
      [&] {
        nn::zero_grads(params);
        lin.backward(x, probe.grad());
        for (auto& g : lin.weight.grad) g = -g;  // sign flip
      });
  CHECK_FALSE(report.ok);
}

TEST_CASE("adam behaviors", "[nn]") {
  SECTION("zero gradient leaves parameters unchanged") {
    Tensor<float> p({3});
    p.data = {1.0f, -2.0f, 0.5f};
    std::vector<nn::ParamRef<float>> params{{"p", &p}};
    nn::Adam<float> adam(params);
    adam.step(params, 1e-3);
    CHECK(p.data == std::vector<float>{1.0f, -2.0f, 0.5f});
  }
  SECTION("first step moves by about -lr * sign(g)") {
    Tensor<double> p({1});
    p.data = {0.0};
    p.grad = {0.37};
    std::vector<nn::ParamRef<double>> params{{"p", &p}};
    nn::Adam<double> adam(params);
    adam.step(params, 1e-2);
    CHECK(p.data[0] == Catch::Approx(-1e-2).epsilon(1e-6));
  }
  SECTION("identical runs produce identical trajectories") {
    auto run = [] {
      std::mt19937 rng(77);
      Tensor<float> p({4});
      nn::init_uniform(p, rng, 0.5);
      std::vector<nn::ParamRef<float>> params{{"p", &p}};
      nn::Adam<float> adam(params);
      std::uniform_real_distribution<float> gd(-1, 1);
      for (int s = 0; s < 50; ++s) {
        for (auto& g : p.grad) g = gd(rng);
        adam.step(params, 1e-3);
      }
      return p.data;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("learning-rate schedule values and monotonicity", "[nn]") {
  nn::LrSchedule s;
  CHECK(nn::lr_at(s, 0) == 2.0e-4);
  CHECK(nn::lr_at(s, 100000) == Catch::Approx(1.0e-4).margin(1e-15));
  CHECK(nn::lr_at(s, 1000000) == Catch::Approx(2.0e-4 / 11.0).margin(1e-15));
  double prev = nn::lr_at(s, 0);
  for (long step = 1; step < 2000000; step += 9871) {
    double lr = nn::lr_at(s, step);
    CHECK(lr > 0.0);
    CHECK(lr < prev);
    prev = lr;
  }
}

TEST_CASE("checkpoint save/load round-trips bitwise", "[nn][formats]") {
  namespace fs = std::filesystem;
  fs::path dir = fs::current_path() / "scratch_nnc1";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string path = (dir / "model.nnc1").string();

  std::mt19937 rng(12);
  nn::Linear<float> lin(7, 3);
  lin.init(rng);
  auto params = lin.params("lin");
  nn::save_checkpoint(path, params);

  nn::Linear<float> lin2(7, 3);
  nn::load_checkpoint(path, lin2.params("lin"));
  CHECK(lin2.weight.data == lin.weight.data);
  CHECK(lin2.bias.data == lin.bias.data);

  SECTION("missing tensor is an error") {
    nn::Conv1d<float> conv(1, 1, 3);
    CHECK_THROWS_AS(nn::load_checkpoint(path, conv.params("conv")), DataError);
  }
  SECTION("shape mismatch is an error") {
    nn::Linear<float> lin3(7, 4);
    CHECK_THROWS_AS(nn::load_checkpoint(path, lin3.params("lin")), DataError);
  }
}
