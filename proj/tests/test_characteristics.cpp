#include "stochvec/characteristics.hpp"
#include "stochvec/errors.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

using namespace stochvec;
using testutil::vec2;

namespace {

FieldPtr linear_shear() {
  Mat A = Mat::Zero(2, 2);
  A(1, 0) = 1;  // sigma = (0, x1)
  return std::make_shared<LinearField>(A, vec2(0, 0));
}

// single divergence-free mode (sin x2, sin x1): commutative noise, nonlinear flow
FieldPtr cross_mode() {
  return std::make_shared<FourierField>(
      2, std::vector<FourierMode>{{vec2(0.8, 0), vec2(0, 1), 0.0}, {vec2(0, 0.8), vec2(1, 0), 0.0}}, "cross");
}

std::vector<double> some_points() { return {0.3, -0.2, 1.1, 2.0, -2.5, 0.7, 3.0, -3.1, 0.0, 0.0}; }

}  // namespace

TEST_CASE("additive noise is integrated exactly") {
  const Characteristics ch(nullptr, constant_basis(2), M_PI);
  const auto path = generate_ensemble(2, 1, 1.0, 64, 3).path(0);
  FlowSample s = ch.start(some_points(), true);
  ch.integrate_forward(s, path, 64);
  const auto W = path.terminal();
  const auto x0 = some_points();
  for (std::size_t p = 0; p < s.count(); ++p) {
    for (int i = 0; i < 2; ++i) {
      const double expect = wrap_coordinate(x0[p * 2 + i] + W[i], M_PI);
      CHECK(periodic_distance(std::span<const double>(&s.positions[p * 2 + i], 1), std::span<const double>(&expect, 1),
                              M_PI) <= 1e-12);
    }
    CHECK((s.jacobian(p) - Mat::Identity(2, 2)).norm() == 0.0);
  }
  for (double c : s.positions) CHECK(std::abs(c) <= M_PI);

  FlowSample inv = ch.start(some_points(), true);
  ch.integrate_inverse(inv, path, 64);
  for (std::size_t p = 0; p < inv.count(); ++p)
    for (int i = 0; i < 2; ++i) {
      const double expect = wrap_coordinate(x0[p * 2 + i] - W[i], M_PI);
      CHECK(std::abs(inv.positions[p * 2 + i] - expect) <= 1e-12);
    }
}

TEST_CASE("no noise and no drift leaves points fixed") {
  const Characteristics ch(nullptr, NoiseBasis(2, {}), M_PI);
  const auto path = BrownianPath::zero(0, 32, 1.0 / 32);
  FlowSample s = ch.start(some_points(), true);
  ch.integrate_forward(s, path, 32);
  CHECK(s.positions == ch.start(some_points(), false).positions);
  CHECK(s.max_det_deviation() == 0.0);
  ch.integrate_inverse(s, path, 32);
  CHECK(s.positions == ch.start(some_points(), false).positions);
}

TEST_CASE("linear shear noise against its closed form") {
  const NoiseBasis nb(2, {linear_shear()});
  const Characteristics ch(nullptr, nb, M_PI);
  const auto path = generate_ensemble(1, 1, 1.0, 256, 11).path(0);
  const double W = path.terminal()[0];
  const std::vector<double> x0 = {0.4, -1.0, -2.0, 0.5, 1.5, 2.5};
  FlowSample s = ch.start(x0, true);
  ch.integrate_forward(s, path, 256);
  Mat expect(2, 2);
  expect << 1, 0, W, 1;
  for (std::size_t p = 0; p < s.count(); ++p) {
    const double x2 = wrap_coordinate(x0[p * 2 + 1] + x0[p * 2] * W, M_PI);
    CHECK(s.positions[p * 2] == doctest::Approx(x0[p * 2]));
    CHECK(periodic_distance(std::span<const double>(&s.positions[p * 2 + 1], 1), std::span<const double>(&x2, 1),
                            M_PI) <= 1e-12);
    CHECK((s.jacobian(p) - expect).norm() <= 1e-2);
    CHECK((s.jacobian(p) - expect).norm() <= 1e-12);
  }
}

TEST_CASE("strong first order for a single nonlinear mode") {
  const Characteristics ch(nullptr, NoiseBasis(2, {cross_mode()}), M_PI);
  const auto ens = generate_ensemble(1, 16, 1.0, 4096, 21);
  const std::vector<double> x0 = {0.3, -0.4, 1.2, 0.9};
  std::vector<double> errs;
  for (int level = 4; level <= 8; ++level) {
    double sq = 0;
    for (std::size_t m = 0; m < ens.M(); ++m) {
      const auto fine = ens.path(m);
      FlowSample ref = ch.start(x0, false);
      ch.integrate_forward(ref, fine, fine.N);
      const auto coarse = fine.coarsened(4096 >> level);
      FlowSample s = ch.start(x0, false);
      ch.integrate_forward(s, coarse, coarse.N);
      for (std::size_t p = 0; p < s.count(); ++p) {
        const double e = periodic_distance(std::span<const double>(s.positions).subspan(p * 2, 2),
                                           std::span<const double>(ref.positions).subspan(p * 2, 2), M_PI);
        sq += e * e;
      }
    }
    errs.push_back(std::sqrt(sq / (ens.M() * 2)));
  }
  const double slope = std::log2(errs.front() / errs.back()) / 4.0;
  CAPTURE(errs[0]);
  CAPTURE(errs[4]);
  CHECK(slope >= 0.8);
}

TEST_CASE("volume preservation for divergence-free fields") {
  const Characteristics ch(make_random_fourier(2, 2, 99, true, 0.5), sinusoidal_basis(), M_PI);
  const GridSpec spec{2, M_PI, 16};
  const auto path = generate_ensemble(4, 1, 1.0, 256, 5).path(0);
  FlowSample s = ch.start(spec.packed_nodes(), true);
  ch.integrate_forward(s, path, 256);
  CHECK(s.max_det_deviation() <= 1e-3);
}

TEST_CASE("inverse flow round trip decays with the step") {
  const Characteristics ch(make_taylor_green(0.5), NoiseBasis(2, {cross_mode()}), M_PI);
  const auto fine = generate_ensemble(1, 1, 1.0, 256, 8).path(0);
  const auto x = some_points();
  std::vector<double> res;
  for (int f : {16, 4, 1}) {
    const auto p = fine.coarsened(f);
    FlowSample back = ch.start(x, false);
    ch.integrate_inverse(back, p, p.N);
    FlowSample fwd = ch.start(back.positions, false);
    ch.integrate_forward(fwd, p, p.N);
    double worst = 0;
    for (std::size_t q = 0; q < fwd.count(); ++q)
      worst = std::max(worst, periodic_distance(std::span<const double>(fwd.positions).subspan(q * 2, 2),
                                                std::span<const double>(x).subspan(q * 2, 2), M_PI));
    res.push_back(worst);
  }
  CHECK(res[2] <= 1e-2);
  CHECK(res[0] / res[1] >= 3.0);
  CHECK(res[1] / res[2] >= 3.0);
}

TEST_CASE("representation formula samples") {
  const GridSpec spec{2, M_PI, 32};
  const GaussianCurlField B0(vec2(0.1, 0.2), 0.6, 1.0);
  const auto path = generate_ensemble(2, 1, 0.25, 64, 17).path(0);

  const Characteristics trans(nullptr, constant_basis(2), M_PI);
  const SpdeSample s = solve_spde_sample(B0, trans, path, 64, spec);
  const auto W = path.terminal();
  double err = 0;
  for (std::size_t k = 0; k < spec.nodes(); ++k) {
    Vec y = spec.node(k);
    for (int i = 0; i < 2; ++i) y[i] = wrap_coordinate(y[i] - W[i], M_PI);
    err = std::max(err, (s.B.vec(k) - B0.eval(y)).norm());
  }
  CHECK(err <= 1e-12);
  CHECK(s.t == doctest::Approx(0.25));
  CHECK(solve_spde_sample(ZeroField(2), trans, path, 64, spec).B.sup_norm() == 0.0);

  // constant B0 carried by the linear shear flow
  const Characteristics shear(nullptr, NoiseBasis(2, {linear_shear()}), M_PI);
  const auto p1 = generate_ensemble(1, 1, 1.0, 256, 4).path(0);
  const Vec c = vec2(0.7, -0.2);
  const SpdeSample sc = solve_spde_sample(ConstantField(c), shear, p1, 256, spec);
  Mat J(2, 2);
  J << 1, 0, p1.terminal()[0], 1;
  for (std::size_t k : {0u, 17u, 100u, 511u, 1000u}) CHECK((sc.B.vec(k) - J * c).norm() <= 1e-10);

  // linearity in B0 on shared increments
  const Characteristics full(make_taylor_green(0.4), sinusoidal_basis(), M_PI);
  const auto p4 = generate_ensemble(4, 1, 0.25, 64, 6).path(0);
  const GaussianCurlField B1(vec2(-0.4, 0.3), 0.5, -0.8);
  const SumField combo({{2.0, std::make_shared<GaussianCurlField>(B0)}, {-3.0, std::make_shared<GaussianCurlField>(B1)}});
  const GridField lhs = solve_spde_sample(combo, full, p4, 64, spec).B;
  const GridField rhs = 2.0 * solve_spde_sample(B0, full, p4, 64, spec).B - 3.0 * solve_spde_sample(B1, full, p4, 64, spec).B;
  CHECK((lhs - rhs).sup_norm() <= 1e-13 * lhs.sup_norm());

  // inverse-flow jacobian agrees with forward re-integration to discretization error
  FlowOptions fast;
  fast.jacobian = JacobianMode::InverseFlow;
  fast.check_stride = 7;
  const SpdeSample a = solve_spde_sample(B0, full, p4, 64, spec);
  const SpdeSample b = solve_spde_sample(B0, full, p4, 64, spec, fast);
  CHECK((a.B - b.B).sup_norm() <= 1e-2 * a.B.sup_norm());
  CHECK(b.checked_nodes == (spec.nodes() + 6) / 7);
  CHECK(a.checked_nodes == spec.nodes());
  CHECK(a.max_det_deviation <= 1e-3);

  FlowOptions strict;
  strict.tol_inv = 1e-14;
  CHECK_THROWS_AS(solve_spde_sample(B0, full, p4, 64, spec, strict), InverseToleranceExceeded);
}

TEST_CASE("transport adjoint field") {
  const auto w = make_random_fourier(2, 2, 3, true);
  const auto phi = std::make_shared<GaussianField>(vec2(0.2, -0.1), 0.5, vec2(1.0, 0.5));
  const TransportAdjointField A(w, phi);
  std::mt19937_64 rng(2);
  for (int r = 0; r < 20; ++r) {
    const Vec x = testutil::random_point(rng, 2, -1.5, 1.5);
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp[i] += 1e-5;
      xm[i] -= 1e-5;
      const Vec col = (A.eval(xp) - A.eval(xm)) / 2e-5;
      CHECK((col - A.jacobian(x).col(i)).norm() <= 1e-6 * (1 + A.jacobian(x).norm()));
    }
  }
  // <[w, B], phi> = -<B, A_w phi>
  const GridSpec spec{2, M_PI, 128};
  const auto B = std::make_shared<GaussianField>(vec2(-0.3, 0.2), 0.6, vec2(-0.2, 1.0));
  const GridField br = sample(LieBracketField(w, B), spec);
  const double lhs = inner(br, sample(*phi, spec));
  const double rhs = -inner(sample(*B, spec), sample(A, spec));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
}

TEST_CASE("weak form residual basics") {
  const GridSpec spec{2, M_PI, 32};
  const auto oc = assemble_coefficients(constant_basis(2));
  const auto path = generate_ensemble(2, 1, 0.25, 16, 9).path(0);
  const auto phi1 = std::make_shared<GaussianField>(vec2(0.1, 0), 0.6, vec2(1, 0));
  const auto phi2 = std::make_shared<GaussianField>(vec2(-0.2, 0.3), 0.5, vec2(0.3, -1));
  const auto sum = std::make_shared<SumField>(std::vector<std::pair<double, FieldPtr>>{{1.0, phi1}, {1.0, phi2}});

  std::vector<GridField> zero(17, GridField::vector(spec));
  for (double r : weak_form_residual(zero, path, phi1, nullptr, oc)) CHECK(r == 0.0);

  const Characteristics ch(nullptr, constant_basis(2), M_PI);
  const GaussianCurlField B0(vec2(0, 0), 0.5, 1.0);
  std::vector<GridField> snaps;
  for (int j = 0; j <= 16; ++j) snaps.push_back(solve_spde_sample(B0, ch, path, j, spec).B);
  const auto r1 = weak_form_residual(snaps, path, phi1, nullptr, oc);
  const auto r2 = weak_form_residual(snaps, path, phi2, nullptr, oc);
  const auto r12 = weak_form_residual(snaps, path, sum, nullptr, oc);
  for (std::size_t j = 0; j < r1.size(); ++j) CHECK(r12[j] == doctest::Approx(r1[j] + r2[j]).epsilon(1e-10).scale(1e-12));
  CHECK(r1.front() == 0.0);
}
