#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "polyfactor/loss.hpp"

using namespace polyfactor;

namespace {

const LossKind kAll[] = {LossKind::logistic, LossKind::smoothed_hinge, LossKind::squared_hinge,
                         LossKind::binary_logistic, LossKind::squared};

struct Probe {
  TargetRow target;
  std::vector<double> signs;
};

Probe random_target(LossKind kind, int m, std::mt19937_64& rng) {
  Probe p;
  std::uniform_int_distribution<int> label(0, m - 1);
  std::bernoulli_distribution coin;
  p.target.label = label(rng);
  p.target.value = std::normal_distribution<double>(3.0, 1.0)(rng);
  if (kind == LossKind::binary_logistic) {
    for (int c = 0; c < m; ++c) p.signs.push_back(coin(rng) ? 1.0 : -1.0);
  }
  return p;
}

int outputs_for(LossKind kind, int m) { return kind == LossKind::squared ? 1 : m; }

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("values at hand-checked points") {
    const std::vector<double> zero3(3, 0.0);
    CHECK(loss_value(LossKind::logistic, 0, zero3) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(loss_value(LossKind::squared_hinge, 1, zero3) == doctest::Approx(2.0));
    const std::vector<double> o{5.0, 0.0};
    // log(1 + e^-5) = 6.715348489117967e-3
    CHECK(loss_value(LossKind::logistic, 0, o) == doctest::Approx(6.715348489117967e-3).epsilon(1e-13));
    // smoothed hinge at zero: log(1 + (m-1) e)
    CHECK(loss_value(LossKind::smoothed_hinge, 2, zero3) == doctest::Approx(std::log(1.0 + 2.0 * std::exp(1.0))));
  }

  TEST_CASE("gradients at hand-checked points") {
    const std::vector<double> zero4(4, 0.0), zero3(3, 0.0);
    const auto g = loss_gradient(LossKind::logistic, 0, zero4);
    CHECK(g[0] == doctest::Approx(-0.75));
    for (int c = 1; c < 4; ++c) CHECK(g[static_cast<std::size_t>(c)] == doctest::Approx(0.25));
    const auto h = loss_gradient(LossKind::squared_hinge, 0, zero3);
    CHECK(h[0] == doctest::Approx(-4.0));
    CHECK(h[1] == doctest::Approx(2.0));
    CHECK(h[2] == doctest::Approx(2.0));
  }

  TEST_CASE("binary logistic and squared loss") {
    const std::vector<double> signs{1.0, -1.0, 1.0};
    TargetRow t;
    t.signs = signs;
    const std::vector<double> zero3(3, 0.0);
    CHECK(loss_value(LossKind::binary_logistic, t, zero3) == doctest::Approx(3.0 * std::log(2.0)));
    std::vector<double> g(3);
    loss_gradient(LossKind::binary_logistic, t, zero3, g);
    for (int c = 0; c < 3; ++c) CHECK(g[static_cast<std::size_t>(c)] == doctest::Approx(-signs[static_cast<std::size_t>(c)] / 2));

    TargetRow r;
    r.value = 4.0;
    const std::vector<double> o{2.5};
    CHECK(loss_value(LossKind::squared, r, o) == doctest::Approx(0.5 * 1.5 * 1.5));
    std::vector<double> gs(1);
    loss_gradient(LossKind::squared, r, o, gs);
    CHECK(gs[0] == doctest::Approx(-1.5));
  }

  TEST_CASE("gradient matches central finite differences") {
    std::mt19937_64 rng(11);
    int checked = 0;
    for (LossKind kind : kAll) {
      for (int trial = 0; trial < 120; ++trial) {
        const int m = 2 + trial % 5;
        Probe p = random_target(kind, m, rng);
        p.target.signs = p.signs;
        const Eigen::VectorXd o = oracle::random_vector(outputs_for(kind, m), rng, 2.0);
        auto f = [&](const Eigen::VectorXd& v) {
          return loss_value(kind, p.target, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(f, o, 1e-5);
        std::vector<double> g(static_cast<std::size_t>(o.size()));
        loss_gradient(kind, p.target, std::span<const double>(o.data(), g.size()), g);
        const Eigen::VectorXd gv = Eigen::Map<Eigen::VectorXd>(g.data(), o.size());
        const double scale = std::max(1.0, gv.norm());
        CHECK((gv - fd).norm() / scale <= 1e-6);
        ++checked;
      }
    }
    CHECK(checked == 600);
  }

  TEST_CASE("gradient structure of the class-index losses") {
    std::mt19937_64 rng(3);
    for (LossKind kind : {LossKind::logistic, LossKind::smoothed_hinge, LossKind::squared_hinge}) {
      for (int trial = 0; trial < 50; ++trial) {
        const int m = 2 + trial % 6;
        const int y = trial % m;
        const Eigen::VectorXd o = oracle::random_vector(m, rng, 3.0);
        const auto g = loss_gradient(kind, y, std::span<const double>(o.data(), static_cast<std::size_t>(m)));
        double sum = 0.0;
        for (int c = 0; c < m; ++c) {
          sum += g[static_cast<std::size_t>(c)];
          if (c != y) CHECK(g[static_cast<std::size_t>(c)] >= 0.0);
        }
        CHECK(g[static_cast<std::size_t>(y)] <= 0.0);
        CHECK(std::abs(sum) <= 1e-12);
      }
    }
  }

  TEST_CASE("convexity along random chords") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif;
    for (LossKind kind : kAll) {
      for (int trial = 0; trial < 100; ++trial) {
        const int m = 3;
        Probe p = random_target(kind, m, rng);
        p.target.signs = p.signs;
        const int k = outputs_for(kind, m);
        const Eigen::VectorXd a = oracle::random_vector(k, rng, 3.0), b = oracle::random_vector(k, rng, 3.0);
        const double t = unif(rng);
        const Eigen::VectorXd mid = t * a + (1 - t) * b;
        auto f = [&](const Eigen::VectorXd& v) {
          return loss_value(kind, p.target, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
        };
        CHECK(f(mid) <= t * f(a) + (1 - t) * f(b) + 1e-12);
      }
    }
  }

  TEST_CASE("large margins stay finite") {
    const std::vector<double> o{800.0, -800.0, 0.0};
    for (LossKind kind : {LossKind::logistic, LossKind::smoothed_hinge}) {
      for (int y = 0; y < 3; ++y) {
        CHECK(std::isfinite(loss_value(kind, y, o)));
        for (double g : loss_gradient(kind, y, o)) CHECK(std::isfinite(g));
      }
    }
  }

  TEST_CASE("names round trip") {
    for (LossKind kind : kAll) CHECK(parse_loss(to_string(kind)) == kind);
    CHECK_THROWS_AS(parse_loss("hinge"), ConfigError);
  }
}
