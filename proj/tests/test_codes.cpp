#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "gradcode/analysis.hpp"
#include "gradcode/codes.hpp"
#include "gradcode/rng.hpp"
#include "oracles.hpp"

using namespace gradcode;

TEST_CASE("frc block structure") {
  auto m = codes::build_frc(4, 4, 2);
  CHECK(m.params.ell == 2);
  CHECK(m.supports[0] == std::vector<int>{0, 1});
  CHECK(m.supports[1] == std::vector<int>{0, 1});
  CHECK(m.supports[2] == std::vector<int>{2, 3});
  CHECK(m.supports[3] == std::vector<int>{2, 3});
  CHECK(m.block_workers(1) == std::vector<int>{2, 3});
}

TEST_CASE("frc identity assignment at c=1") {
  auto m = codes::build_frc(6, 6, 1);
  CHECK(m.params.ell == 1);
  for (int j = 0; j < 6; ++j) CHECK(m.supports[j] == std::vector<int>{j});
}

TEST_CASE("frc with more workers than tasks") {
  auto m = codes::build_frc(4, 8, 2);
  CHECK(m.params.ell == 4);
  for (int j = 0; j < 4; ++j) CHECK(m.supports[j] == std::vector<int>{0, 1});
  for (int j = 4; j < 8; ++j) CHECK(m.supports[j] == std::vector<int>{2, 3});
}

TEST_CASE("frc rejects bad divisibility") {
  CHECK_THROWS_WITH_AS(codes::build_frc(5, 5, 2), doctest::Contains("divide"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(codes::build_frc(4, 3, 2), doctest::Contains("divide"),
                       std::invalid_argument);
  CHECK_THROWS_AS(codes::build_frc(4, 4, 8), std::invalid_argument);
  CHECK_THROWS_AS(codes::build_frc(0, 4, 1), std::invalid_argument);
}

TEST_CASE("frc invariants across a parameter grid") {
  for (auto [n, k, c] : std::vector<std::array<int, 3>>{
           {4, 4, 2}, {6, 6, 3}, {6, 12, 1}, {8, 4, 4}, {12, 18, 2}, {10, 15, 4}}) {
    if ((static_cast<long long>(k) * c) % n != 0 || n % c != 0) continue;
    auto m = codes::build_frc(n, k, c);
    std::vector<int> replication(n, 0);
    for (int j = 0; j < k; ++j) {
      CHECK(static_cast<int>(m.supports[j].size()) == c);
      for (int t : m.supports[j]) ++replication[t];
      // contiguous block
      for (int i = 1; i < c; ++i) CHECK(m.supports[j][i] == m.supports[j][0] + i);
    }
    for (int t = 0; t < n; ++t) CHECK(replication[t] == m.params.ell);
  }
}

TEST_CASE("coverage indicators") {
  auto m = codes::build_frc(4, 4, 2);
  std::vector<int> both{0, 2};
  auto y = codes::coverage(m, both);
  CHECK(y.y == std::vector<std::uint8_t>{1, 1});

  std::vector<int> first_only{0, 1};
  y = codes::coverage(m, first_only);
  CHECK(y.y == std::vector<std::uint8_t>{1, 0});
  CHECK(y.covered_count() == 1);

  std::vector<int> all{0, 1, 2, 3};
  y = codes::coverage(m, all);
  CHECK(y.y == std::vector<std::uint8_t>{1, 1});

  std::vector<int> bad{4};
  CHECK_THROWS_AS(codes::coverage(m, bad), std::out_of_range);
  std::vector<int> neg{-1};
  CHECK_THROWS_AS(codes::coverage(m, neg), std::out_of_range);
}

TEST_CASE("combine weights covered blocks by 1/n") {
  // component gradients 1,2,3,4 with c=2: block sums 3 and 7
  std::vector<std::vector<double>> blocks{{3.0}, {7.0}};
  codes::CoverageIndicators y;
  y.y = {1, 1};
  CHECK(codes::combine(blocks, y, 4)[0] == doctest::Approx(2.5));
  y.y = {1, 0};
  CHECK(codes::combine(blocks, y, 4)[0] == doctest::Approx(0.75));
  y.y = {0, 0};
  CHECK(codes::combine(blocks, y, 4)[0] == 0.0);

  std::vector<std::vector<double>> ragged{{1.0, 2.0}, {3.0}};
  y.y = {1, 1};
  CHECK_THROWS_AS(codes::combine(ragged, y, 4), std::invalid_argument);
  y.y = {1};
  CHECK_THROWS_AS(codes::combine(blocks, y, 4), std::invalid_argument);
}

TEST_CASE("combine is linear in the block sums") {
  Rng rng(42);
  codes::CoverageIndicators y;
  y.y = {1, 0, 1};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> a(3, std::vector<double>(4)), b = a, mix = a;
    double alpha = rng.normal(), beta = rng.normal();
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 4; ++d) {
        a[i][d] = rng.normal();
        b[i][d] = rng.normal();
        mix[i][d] = alpha * a[i][d] + beta * b[i][d];
      }
    auto ga = codes::combine(a, y, 6), gb = codes::combine(b, y, 6),
         gm = codes::combine(mix, y, 6);
    for (int d = 0; d < 4; ++d)
      CHECK(gm[d] == doctest::Approx(alpha * ga[d] + beta * gb[d]).epsilon(1e-12));
  }
}

TEST_CASE("debias rescales by 1/(1-p)") {
  CHECK(codes::debias({1.0, 2.0}, 0.0) == std::vector<double>{1.0, 2.0});
  CHECK(codes::debias({1.0, 0.0}, 0.5) == std::vector<double>{2.0, 0.0});
  CHECK(codes::debias({0.75}, 1.0 / 6.0)[0] == doctest::Approx(0.9));
  CHECK_THROWS_AS(codes::debias({1.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(codes::debias({1.0}, 1.5), std::domain_error);
  CHECK_THROWS_AS(codes::debias({1.0}, -0.1), std::domain_error);
}

TEST_CASE("any k-c+1 workers recover the exact gradient when k >= n") {
  for (auto [n, k, c] : std::vector<std::array<int, 3>>{
           {4, 4, 2}, {6, 6, 2}, {6, 6, 3}, {4, 8, 2}, {8, 8, 2}, {8, 8, 4}}) {
    auto m = codes::build_frc(n, k, c);
    int blocks = n / c;
    // scalar components: grad of task t is t+1
    std::vector<std::vector<double>> block_sums(blocks, std::vector<double>(1, 0.0));
    double full = 0.0;
    for (int t = 0; t < n; ++t) {
      block_sums[t / c][0] += t + 1;
      full += t + 1;
    }
    full /= n;
    for (int r = k - c + 1; r <= k; ++r) {
      oracles::for_each_subset(k, r, [&](unsigned mask) {
        std::vector<int> workers;
        for (int j = 0; j < k; ++j)
          if (mask & (1u << j)) workers.push_back(j);
        auto y = codes::coverage(m, workers);
        auto g = codes::combine(block_sums, y, n);
        CHECK(g[0] == doctest::Approx(full).epsilon(1e-12));
      });
    }
  }
}

TEST_CASE("coverage frequency matches the closed-form moment") {
  const int k = 8, c = 2, n = 8, r = 3;
  auto m = codes::build_frc(n, k, c);
  auto moments = analysis::moments_exact(k, m.params.ell, r);
  Rng rng(7);
  const int draws = 20000;
  int covered0 = 0;
  for (int d = 0; d < draws; ++d) {
    auto subset = random_subset(k, r, rng);
    covered0 += codes::coverage(m, subset).y[0];
  }
  double mean = static_cast<double>(covered0) / draws;
  double se = std::sqrt(mean * (1 - mean) / draws);
  CHECK(std::abs(mean - (1 - moments.p)) <= 4 * se);
}
