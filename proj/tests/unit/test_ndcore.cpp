#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/adam.hpp"
#include "bitrans/ndcore/checkpoint.hpp"
#include "bitrans/ndcore/dense_net.hpp"
#include "bitrans/ndcore/linalg.hpp"
#include "bitrans/ndcore/loss.hpp"
#include "bitrans/ndcore/rng.hpp"

using namespace bitrans;
using nd::Matrix;
using nd::Vector;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, nd::Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

// Loss 0.5 * sum(out .* probe) so d loss / d out = probe.
double probe_loss(const nd::DenseNet& net, const Matrix& x, const Matrix& probe) {
  return 0.5 * (net.forward(x).array() * probe.array()).sum();
}

}  // namespace

TEST_CASE("mt19937_64 engine matches the reference sequence") {
  nd::Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("derive_seed matches an independent splitmix64/fnv1a computation") {
  CHECK(nd::derive_seed(0, "") == 14087677454934409008ULL);
  CHECK(nd::derive_seed(42, "data") == 6844565264408262737ULL);
  CHECK(nd::derive_seed(1, "replicate/0") == 14914053189260222461ULL);
  CHECK(nd::derive_seed(12345, "train/mlp") == 15869163989292519994ULL);
}

TEST_CASE("uniform and index stay in range") {
  nd::Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(rng.index(7) < 7u);
  }
}

TEST_CASE("normal draws have roughly zero mean and unit variance") {
  nd::Rng rng(11);
  double s = 0.0, ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(ss / n - 1.0) < 0.02);
}

TEST_CASE("analytic gradients match central differences") {
  nd::Rng rng(7);
  for (bool fourier : {false, true}) {
    for (std::size_t depth : {0u, 1u, 3u}) {
      std::vector<std::size_t> hidden(depth, 16);
      nd::DenseNet net = nd::DenseNet::mlp(2, hidden, 3, fourier, rng);
      const Matrix x = random_matrix(2, 5, rng);
      const Matrix probe = random_matrix(3, 5, rng);
      nd::ForwardCache cache;
      net.forward(x, cache);
      nd::NetGrads grads = net.zero_grads();
      const Matrix gx = net.backward(cache, 0.5 * probe, grads);

      const auto analytic = std::as_const(grads).spans();
      auto params = net.parameters();
      REQUIRE(analytic.size() == params.size());
      const double h = 1e-6;
      for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t k = 0; k < params[p].size(); k += 3) {
          const double saved = params[p][k];
          params[p][k] = saved + h;
          const double up = probe_loss(net, x, probe);
          params[p][k] = saved - h;
          const double down = probe_loss(net, x, probe);
          params[p][k] = saved;
          const double fd = (up - down) / (2 * h);
          CHECK(analytic[p][k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
      }
      // Input gradient.
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Matrix xp = x, xm = x;
        xp(i, 0) += h;
        xm(i, 0) -= h;
        const double fd = (probe_loss(net, xp, probe) - probe_loss(net, xm, probe)) / (2 * h);
        CHECK(gx(i, 0) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("Adam step matches a hand-computed scalar update") {
  nd::AdamState adam({0.1, 0.9, 0.999, 1e-8});
  std::vector<double> w = {1.0};
  const std::vector<double> g = {0.5};
  std::vector<std::span<double>> ps = {std::span<double>(w)};
  std::vector<std::span<const double>> gs = {std::span<const double>(g)};
  adam.step(ps, gs);
  // m = 0.05, v = 0.00025; bias corrected: mhat = 0.5, vhat = 0.25.
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  adam.step(ps, gs);
  const double m = 0.9 * 0.05 + 0.1 * 0.5, v = 0.999 * 0.00025 + 0.001 * 0.25;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-14));
  CHECK(adam.step_count() == 2);
}

TEST_CASE("mse loss and its gradient") {
  Matrix p(1, 2), t(1, 2);
  p << 1.0, 3.0;
  t << 0.0, 1.0;
  const auto l = nd::mse_loss(p, t);
  CHECK(l.value == doctest::Approx(2.5));
  CHECK(l.grad(0, 0) == doctest::Approx(1.0));
  CHECK(l.grad(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("svd_small recovers known singular values") {
  Matrix a = Matrix::Zero(3, 2);
  a(0, 0) = 3.0;
  a(1, 1) = -2.0;
  auto s = nd::svd_small(a);
  CHECK(s.s(0) == doctest::Approx(3.0));
  CHECK(s.s(1) == doctest::Approx(2.0));
  nd::Rng rng(5);
  const Matrix m = random_matrix(6, 4, rng);
  s = nd::svd_small(m);
  const Matrix rec = s.u * s.s.asDiagonal() * s.v.transpose();
  CHECK((rec - m).norm() < 1e-10 * m.norm());
  CHECK((s.u.transpose() * s.u - Matrix::Identity(4, 4)).norm() < 1e-10);
  for (Eigen::Index i = 1; i < s.s.size(); ++i) CHECK(s.s(i - 1) >= s.s(i));
}

TEST_CASE("pinv satisfies the Penrose identities on a rank-deficient matrix") {
  nd::Rng rng(9);
  const Matrix a = random_matrix(5, 2, rng) * random_matrix(2, 4, rng);
  const Matrix p = nd::pinv(a);
  CHECK((a * p * a - a).norm() < 1e-9 * a.norm());
  CHECK((p * a * p - p).norm() < 1e-9 * p.norm());
  CHECK(((a * p).transpose() - a * p).norm() < 1e-9);
  CHECK(((p * a).transpose() - p * a).norm() < 1e-9);
  CHECK(nd::numerical_rank(a) == 2);
}

TEST_CASE("checkpoint round trip is bit exact") {
  nd::Rng rng(1);
  const std::vector<std::size_t> hidden = {8, 8};
  const auto net = nd::DenseNet::mlp(2, hidden, 3, true, rng, 2.0);
  const auto back = nd::from_checkpoint_json(nd::to_checkpoint_json(net));
  const Matrix x = random_matrix(2, 4, rng);
  CHECK((net.forward(x).array() == back.forward(x).array()).all());
  const auto path = std::filesystem::temp_directory_path() / "bitrans_ckpt_test.json";
  nd::save_checkpoint(net, path);
  CHECK((nd::load_checkpoint(path).forward(x).array() == net.forward(x).array()).all());
  std::filesystem::remove(path);
}

TEST_CASE("malformed checkpoints are rejected") {
  CHECK_THROWS(nd::from_checkpoint_json("{"));
  CHECK_THROWS(nd::from_checkpoint_json("{\"version\":1}"));
}
