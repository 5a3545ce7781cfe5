#include "doctest.h"
#include "kam/errors.hpp"
#include "kam/series.hpp"
#include "support.hpp"

using namespace kam;
using namespace kamtest;

namespace {

Series cos_mode(int n, std::vector<int> k, double amp = 1.0, std::vector<int> m = {}) {
  if (m.empty()) m.assign(n, 0);
  int K = 0;
  int d = 0;
  for (int v : k) K += std::abs(v);
  for (int v : m) d += v;
  Series::Builder b(n, d, K);
  b.add(m, k, 0.5 * amp);
  return b.finish();
}

Series sin_mode(int n, std::vector<int> k, double amp = 1.0) {
  int K = 0;
  for (int v : k) K += std::abs(v);
  Series::Builder b(n, 0, K);
  b.add(std::vector<int>(n, 0), k, Complex(0.0, -0.5 * amp));
  return b.finish();
}

Series monomial(int n, std::vector<int> m, double c) {
  int d = 0;
  for (int v : m) d += v;
  Series::Builder b(n, d, 0);
  b.add(m, std::vector<int>(n, 0), c);
  return b.finish();
}

std::vector<double> rand_point(Rng& rng, int n, double scale) { return random_vec(rng, n, -scale, scale); }

}  // namespace

TEST_CASE("add: additive inverse and constants") {
  const Series c = cos_mode(2, {1, 0});
  CHECK((c + (-1.0 * c)).empty());
  const Series s = monomial(2, {1, 0}, 1.0) + Series::constant(2, 2.0);
  CHECK(s.size() == 2);
  CHECK(s.coeff(std::vector<int>{1, 0}, std::vector<int>{0, 0}) == Complex(1.0));
  CHECK(s.coeff(std::vector<int>{0, 0}, std::vector<int>{0, 0}) == Complex(2.0));
  CHECK_THROWS_AS(add(Series::constant(2, 1.0), Series::constant(3, 1.0)), DimensionMismatch);
}

TEST_CASE("add: pointwise oracle on random series") {
  Rng rng(11);
  const Series a = random_series(rng, 2, 2, 4), b = random_series(rng, 2, 2, 4);
  const Series s = a + b;
  CHECK(s.degree_cap() == 2);
  CHECK(s.fourier_cap() == 4);
  for (int t = 0; t < 50; ++t) {
    const auto I = rand_point(rng, 2, 0.7), th = rand_point(rng, 2, 3.2);
    CHECK(std::abs(eval_real(s, I, th) - oracle_eval_real(a, I, th) - oracle_eval_real(b, I, th)) < 1e-13);
  }
  CHECK(reality_holds(s));
}

TEST_CASE("multiply: product-to-sum and Taylor truncation") {
  const Series c = cos_mode(1, {1});
  const auto p = multiply(c, c, 0, 2);
  CHECK(std::abs(p.value.coeff(std::vector<int>{0}, std::vector<int>{0}) - 0.5) < 1e-16);
  CHECK(std::abs(p.value.coeff(std::vector<int>{0}, std::vector<int>{2}) - 0.25) < 1e-16);
  CHECK(p.tail_norm == 0.0);

  const Series I1 = monomial(2, {1, 0}, 1.0);
  const double r = 0.3;
  const auto q = multiply(I1, I1, 1, 0, {r, 0.0, 1.0});
  CHECK(q.value.empty());
  CHECK(q.tail_norm == doctest::Approx(r * r).epsilon(1e-15));
}

TEST_CASE("multiply: pointwise oracle with exact caps") {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const Series a = random_series(rng, 2, 2, 3), b = random_series(rng, 2, 1, 3);
    const auto p = multiply(a, b, 3, 6);
    CHECK(p.tail_norm == 0.0);
    CHECK(reality_holds(p.value));
    for (int t = 0; t < 20; ++t) {
      const auto I = rand_point(rng, 2, 0.8), th = rand_point(rng, 2, 3.2);
      const double want = oracle_eval_real(a, I, th) * oracle_eval_real(b, I, th);
      CHECK(std::abs(eval_real(p.value, I, th) - want) < 1e-12 * (1.0 + std::abs(want)));
    }
  }
}

TEST_CASE("majorant is submultiplicative and subadditive") {
  Rng rng(13);
  const DomainSpec dom{0.6, 0.3, 1.0};
  for (int trial = 0; trial < 10; ++trial) {
    const Series a = random_series(rng, 2, 2, 3), b = random_series(rng, 2, 2, 3);
    const auto p = multiply(a, b, 4, 6);
    CHECK(majorant_norm(p.value, dom) <= majorant_norm(a, dom) * majorant_norm(b, dom) * (1 + 1e-14));
    CHECK(majorant_norm(a + b, dom) <= (majorant_norm(a, dom) + majorant_norm(b, dom)) * (1 + 1e-14));
  }
}

TEST_CASE("partial derivatives") {
  const Series s = sin_mode(1, {1});
  const Series c = cos_mode(1, {1});
  CHECK(coeff_distance(partial_theta(s, 0), c) < 1e-17);
  const Series I2 = monomial(1, {2}, 1.0);
  CHECK(coeff_distance(partial_I(I2, 0), monomial(1, {1}, 2.0)) == 0.0);

  Rng rng(14);
  const Series a = random_series(rng, 2, 2, 3);
  const double step = 1e-6;
  for (int t = 0; t < 20; ++t) {
    auto I = rand_point(rng, 2, 0.5), th = rand_point(rng, 2, 3.0);
    for (int j = 0; j < 2; ++j) {
      auto thp = th, thm = th, Ip = I, Im = I;
      thp[j] += step;
      thm[j] -= step;
      Ip[j] += step;
      Im[j] -= step;
      const double fd_t = (oracle_eval_real(a, I, thp) - oracle_eval_real(a, I, thm)) / (2 * step);
      const double fd_i = (oracle_eval_real(a, Ip, th) - oracle_eval_real(a, Im, th)) / (2 * step);
      CHECK(std::abs(eval_real(partial_theta(a, j), I, th) - fd_t) < 1e-6);
      CHECK(std::abs(eval_real(partial_I(a, j), I, th) - fd_i) < 1e-6);
    }
  }
}

TEST_CASE("mean keeps the k = 0 modes") {
  const Series a = cos_mode(2, {1, 0}) + Series::constant(2, 2.0);
  CHECK(coeff_distance(mean(a), Series::constant(2, 2.0)) == 0.0);
  const Series lin = monomial(2, {1, 0}, 0.3) + monomial(2, {0, 1}, -0.7);
  CHECK(coeff_distance(mean(lin + sin_mode(2, {1, 1})), lin) == 0.0);

  Rng rng(15);
  const Series r = random_series(rng, 2, 1, 4);
  const std::vector<double> I = {0.2, -0.4};
  const int N = 16;
  double avg = 0.0;
  for (int a1 = 0; a1 < N; ++a1)
    for (int a2 = 0; a2 < N; ++a2)
      avg += oracle_eval_real(r, I, {2 * M_PI * a1 / N, 2 * M_PI * a2 / N});
  avg /= N * N;
  CHECK(std::abs(eval_real(mean(r), I, std::vector<double>{0.0, 0.0}) - avg) < 1e-12);
}

TEST_CASE("poisson: sign convention, antisymmetry, Jacobi") {
  const Series I1 = monomial(2, {1, 0}, 1.0);
  const auto b = poisson(I1, sin_mode(2, {1, 0}), 2, 2);
  CHECK(coeff_distance(b.value, -1.0 * cos_mode(2, {1, 0})) < 1e-17);

  const std::vector<double> w = {1.0, 0.6};
  const Series N = Series::from_normal_form({0.0, w});
  CHECK(coeff_distance(poisson(N, sin_mode(2, {1, 0}), 2, 2).value, -1.0 * cos_mode(2, {1, 0})) < 1e-16);

  Rng rng(16);
  for (int trial = 0; trial < 5; ++trial) {
    const Series A = random_series(rng, 2, 2, 2), B = random_series(rng, 2, 2, 2), C = random_series(rng, 2, 1, 2);
    const auto ab = poisson(A, B, 4, 4).value, ba = poisson(B, A, 4, 4).value;
    const double nab = majorant_norm(ab, {1.0, 0.0, 1.0});
    CHECK(majorant_norm(ab + ba, {1.0, 0.0, 1.0}) <= 1e-15 * nab);
    // {A,{B,C}} + {B,{C,A}} + {C,{A,B}} = 0
    const auto bc = poisson(B, C, 6, 6).value, ca = poisson(C, A, 6, 6).value;
    const Series j1 = poisson(A, bc, 8, 8).value, j2 = poisson(B, ca, 8, 8).value, j3 = poisson(C, ab, 8, 8).value;
    const double scale = majorant_norm(j1, {1.0, 0.0, 1.0}) + majorant_norm(j2, {1.0, 0.0, 1.0}) +
                         majorant_norm(j3, {1.0, 0.0, 1.0});
    CHECK(majorant_norm(j1 + j2 + j3, {1.0, 0.0, 1.0}) <= 1e-15 * scale);
    CHECK(reality_holds(ab));
  }
}

TEST_CASE("d_omega") {
  const std::vector<double> w = {1.0, golden()[1]};
  CHECK(coeff_distance(d_omega(sin_mode(2, {1, 0}), w), cos_mode(2, {1, 0})) < 1e-17);
  CHECK(d_omega(cos_mode(2, {1, -1}), std::vector<double>{1.0, 1.0}).empty());

  Rng rng(17);
  const Series F = random_series(rng, 2, 1, 4);
  const Series N = Series::from_normal_form({0.3, w});
  CHECK(coeff_distance(d_omega(F, w), poisson(F, N, 2, 4).value) < 1e-15);
  CHECK(mean(d_omega(F, w)).empty());
  CHECK(coeff_distance(d_omega(mean(F), w), Series(2, 1, 4)) == 0.0);
}

TEST_CASE("truncations split exactly") {
  const Series a = cos_mode(1, {1}) + cos_mode(1, {3});
  auto sp = truncate_fourier(a, 5);
  CHECK(sp.tail.empty());
  sp = truncate_fourier(a, 2);
  CHECK(coeff_distance(sp.kept, cos_mode(1, {1})) == 0.0);
  CHECK(coeff_distance(sp.tail, cos_mode(1, {3})) == 0.0);

  Rng rng(18);
  const Series r = random_series(rng, 2, 1, 3);
  CHECK(truncate_taylor(r, 1).tail.empty());
  const Series q = cos_mode(1, {1}, 1.0, {2});
  const auto tq = truncate_taylor(q, 1);
  CHECK(tq.kept.empty());
  CHECK(coeff_distance(tq.tail, q) == 0.0);

  // |P - Q| at radius 2 eta r against (2 eta)^2 times the degree-2 part at r
  const Series p = random_series(rng, 2, 2, 3);
  const double eta = 0.1, rr = 0.5, s = 0.2;
  const auto tp = truncate_taylor(p, 1);
  CHECK(majorant_norm(tp.tail, {2 * eta * rr, s, 1.0}) <=
        4 * eta * eta * majorant_norm(tp.tail, {rr, s, 1.0}) * (1 + 1e-14));
  const Series back = tp.kept + tp.tail;
  CHECK(coeff_distance(back, p) == 0.0);
}

TEST_CASE("majorant norm and evaluation") {
  CHECK(majorant_norm(Series(2, 2, 3), {1.0, 0.5, 1.0}) == 0.0);
  const double s = 0.4;
  const Series c = cos_mode(1, {1});
  CHECK(majorant_norm(c, {1.0, s, 1.0}) == doctest::Approx(std::exp(s)).epsilon(1e-15));
  const Complex at = eval(c, std::vector<Complex>{0.0}, std::vector<Complex>{Complex(0.0, s)});
  CHECK(std::abs(at) == doctest::Approx(std::cosh(s)).epsilon(1e-14));

  const Series two_plus_cos = Series::constant(1, 2.0) + c;
  CHECK(eval_real(two_plus_cos, std::vector<double>{0.0}, std::vector<double>{0.0}) == doctest::Approx(3.0));
  const std::vector<double> w = {1.25, -0.5};
  CHECK(eval_real(Series::from_normal_form({0.0, w}), std::vector<double>{1.0, 0.0}, std::vector<double>{0.3, 0.1}) ==
        doctest::Approx(1.25));

  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const Series r = random_series(rng, 2, 2, 3);
    const DomainSpec dom{0.5, 0.3, 1.0};
    double sampled = 0.0;
    for (int t = 0; t < 400; ++t) {
      std::vector<Complex> I(2), th(2);
      for (int j = 0; j < 2; ++j) {
        I[j] = std::polar(rng.uniform(0.0, dom.r), rng.uniform(0.0, 2 * M_PI));
        th[j] = Complex(rng.uniform(0.0, 2 * M_PI), rng.uniform(-dom.s, dom.s));
      }
      sampled = std::max(sampled, std::abs(eval(r, I, th)));
      CHECK(std::abs(eval(r, I, th) - oracle_eval(r, I, th)) < 1e-12);
    }
    CHECK(sampled <= majorant_norm(r, dom));
    for (int t = 0; t < 20; ++t) {
      const auto I = rand_point(rng, 2, 1.0), th = rand_point(rng, 2, 3.0);
      std::vector<Complex> Ic(I.begin(), I.end()), tc(th.begin(), th.end());
      CHECK(std::abs(eval(r, Ic, tc).imag()) < 1e-14);
    }
  }
}

TEST_CASE("compiled evaluation matches the oracle") {
  Rng rng(20);
  const Series a = random_series(rng, 3, 2, 3), b = random_series(rng, 3, 1, 2);
  const std::vector<Series> list = {a, b};
  CompiledSeries cs(list);
  std::vector<double> out(2);
  for (int t = 0; t < 30; ++t) {
    const auto I = rand_point(rng, 3, 0.5), th = rand_point(rng, 3, 3.0);
    cs.eval(I, th, out);
    CHECK(std::abs(out[0] - oracle_eval_real(a, I, th)) < 1e-13);
    CHECK(std::abs(out[1] - oracle_eval_real(b, I, th)) < 1e-13);
  }
}

TEST_CASE("json round trip") {
  Rng rng(21);
  const Series a = random_series(rng, 2, 2, 3);
  const auto j = to_json(a);
  CHECK(j.at("n") == 2);
  CHECK(j.at("coeffs").size() == a.size());
  const Series b = series_from_json(nlohmann::json::parse(j.dump()));
  CHECK(coeff_distance(a, b) == 0.0);
  CHECK_THROWS_AS(series_from_json(nlohmann::json{{"n", 2}}), InvalidInput);
}

TEST_CASE("builder rejects modes beyond the caps") {
  Series::Builder b(2, 1, 2);
  CHECK_THROWS_AS(b.add(std::vector<int>{2, 0}, std::vector<int>{0, 0}, 1.0), InvalidInput);
  CHECK_THROWS_AS(b.add(std::vector<int>{0, 0}, std::vector<int>{2, 1}, 1.0), InvalidInput);
  CHECK_THROWS_AS(b.add(std::vector<int>{0}, std::vector<int>{0, 0}, 1.0), DimensionMismatch);
}
