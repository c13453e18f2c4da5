#include "stochvec/errors.hpp"
#include "stochvec/lie_operator.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

using namespace stochvec;
using testutil::vec2;
using testutil::vec3;

namespace {

NoiseBasis random_basis(int d, int K, std::uint64_t seed) {
  std::vector<FieldPtr> modes;
  for (int k = 0; k < K; ++k) modes.push_back(make_random_fourier(d, 1, seed + 31 * k, true, 0.5));
  return NoiseBasis(d, modes);
}

Vec half_laplacian(const AnalyticField& B, const Vec& x) {
  const Hessian H = B.hessian(x);
  Vec out(B.dim());
  for (int a = 0; a < B.dim(); ++a) out[a] = 0.5 * H.comp[a].trace();
  return out;
}

GridField scalar_of(const FieldPtr& f, const GridSpec& spec) {
  const GridField v = sample(*f, spec);
  GridField s = GridField::scalar(spec);
  s.set_component(0, v.component(0));
  return s;
}

}  // namespace

TEST_CASE("bracket examples") {
  const auto tg = make_taylor_green();
  const Vec x = vec2(0.3, -1.1);
  CHECK(bracket_at(*tg, *tg, x).norm() == 0.0);
  ConstantField c1(vec2(1, 2)), c2(vec2(-3, 0.5));
  CHECK(bracket_at(c1, c2, x).norm() == 0.0);

  Mat Am = Mat::Zero(2, 2), Bm = Mat::Zero(2, 2);
  Am(0, 1) = 1;  // A = (x2, 0)
  Bm(1, 0) = 1;  // B = (0, x1)
  const LinearField A(Am, vec2(0, 0)), B(Bm, vec2(0, 0));
  std::mt19937_64 rng(3);
  for (int r = 0; r < 10; ++r) {
    const Vec p = testutil::random_point(rng, 2, -3, 3);
    CHECK((bracket_at(A, B, p) - vec2(-p[0], p[1])).norm() <= 1e-15);
  }
  CHECK_THROWS_AS(bracket_at(A, GaussianField(vec3(0, 0, 0), 1, vec3(1, 0, 0)), x), DimensionMismatch);
}

TEST_CASE("bracket antisymmetry and bilinearity") {
  std::mt19937_64 rng(4);
  for (int d : {2, 3}) {
    const auto A = make_random_fourier(d, 2, 1, true), B = make_random_fourier(d, 2, 2, false),
               C = make_random_fourier(d, 1, 3, true);
    const auto BC = std::make_shared<SumField>(std::vector<std::pair<double, FieldPtr>>{{2.0, B}, {-0.5, C}});
    for (int r = 0; r < 20; ++r) {
      const Vec x = testutil::random_point(rng, d, -3, 3);
      const Vec ab = bracket_at(*A, *B, x);
      CHECK((ab + bracket_at(*B, *A, x)).norm() <= 1e-13 * (1 + ab.norm()));
      const Vec lin = bracket_at(*A, *BC, x);
      const Vec ref = 2.0 * ab - 0.5 * bracket_at(*A, *C, x);
      CHECK((lin - ref).norm() <= 1e-13 * (1 + ref.norm()));
    }
  }
}

TEST_CASE("bracket field jacobian") {
  const auto f = lie_bracket(make_random_fourier(2, 2, 8, true), std::make_shared<GaussianField>(vec2(0.2, 0), 0.9, vec2(1, 1)));
  std::mt19937_64 rng(5);
  std::vector<Vec> pts;
  for (int r = 0; r < 50; ++r) pts.push_back(testutil::random_point(rng, 2, -2, 2));
  double err = 0, scale = 0;
  for (const Vec& x : pts)
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp[i] += 1e-4;
      xm[i] -= 1e-4;
      const Vec col = (f->eval(xp) - f->eval(xm)) / 2e-4;
      err = std::max(err, (col - f->jacobian(x).col(i)).cwiseAbs().maxCoeff());
      scale = std::max(scale, f->jacobian(x).cwiseAbs().maxCoeff());
    }
  CHECK(err <= 1e-6 * scale);
}

TEST_CASE("L by nested brackets") {
  const NoiseBasis cb = constant_basis(2);
  const GaussianField g(vec2(0.1, -0.2), 0.7, vec2(1.0, 0.4));
  std::mt19937_64 rng(6);
  for (int r = 0; r < 5; ++r) {
    const Vec x = testutil::random_point(rng, 2, -2, 2);
    CHECK((apply_L_by_brackets(cb, g, x) - half_laplacian(g, x)).norm() <= 1e-14);
  }
  CHECK(apply_L_by_brackets(cb, ConstantField(vec2(3, 4)), vec2(0.5, 0.5)).norm() == 0.0);

  // sigma = (sin x2, 0), B = (0, x1): [s,[s,B]] = (-2 sin x2 cos x2, 0) by hand
  const NoiseBasis sb(2, {make_shear(1.0, vec2(0, 1), vec2(1, 0))});
  Mat Bm = Mat::Zero(2, 2);
  Bm(1, 0) = 1;
  const LinearField B(Bm, vec2(0, 0));
  CHECK(apply_L_by_brackets(sb, B, vec2(0, 0)).norm() <= 1e-15);
  const Vec x = vec2(0.3, 0.7);
  CHECK(apply_L_by_brackets(sb, B, x)[0] == doctest::Approx(-std::sin(0.7) * std::cos(0.7)));
  CHECK(apply_L_by_brackets(sb, B, x)[1] == doctest::Approx(0.0));
}

TEST_CASE("coefficient assembly examples") {
  const auto cc = assemble_coefficients(constant_basis(3));
  const PointCoefficients pc = cc.at(vec3(0.1, 0.2, 0.3));
  CHECK(pc.a.isApprox(0.5 * Mat::Identity(3, 3)));
  for (int i = 0; i < 3; ++i) CHECK(pc.b[i].norm() == 0.0);
  CHECK(pc.c.norm() == 0.0);

  const auto zero = assemble_coefficients(NoiseBasis(2, {})).at(vec2(1, 1));
  CHECK(zero.a.norm() == 0.0);
  CHECK(zero.c.norm() == 0.0);

  // direct sums of sigma-derivative products
  const NoiseBasis nb = sinusoidal_basis();
  const auto oc = assemble_coefficients(nb);
  std::mt19937_64 rng(7);
  for (int r = 0; r < 10; ++r) {
    const Vec x = testutil::random_point(rng, 2, -3, 3);
    Mat a = Mat::Zero(2, 2), c = Mat::Zero(2, 2);
    std::array<Mat, 3> b = {Mat::Zero(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2)};
    for (const auto& s : nb.sigmas()) {
      const Jet j = s->jet(x);
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) a(i, k) += 0.5 * j.value[i] * j.value[k];
      for (int i = 0; i < 2; ++i)
        for (int al = 0; al < 2; ++al)
          for (int be = 0; be < 2; ++be) {
            double v = 0;
            if (al == be)
              for (int g = 0; g < 2; ++g) v += 0.5 * j.value[g] * j.jacobian(i, g);
            v -= j.value[i] * j.jacobian(al, be);
            b[i](al, be) += v;
          }
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
          for (int g = 0; g < 2; ++g)
            c(al, be) += 0.5 * j.jacobian(g, be) * j.jacobian(al, g) - 0.5 * j.value[g] * j.hessian.comp[al](g, be);
    }
    const PointCoefficients got = oc.at(x);
    CHECK((got.a - a).norm() <= 1e-14);
    CHECK((got.c - c).norm() <= 1e-14);
    for (int i = 0; i < 2; ++i) CHECK((got.b[i] - b[i]).norm() <= 1e-14);
    CHECK((got.a - got.a.transpose()).norm() == 0.0);
  }
}

TEST_CASE("coefficient form equals nested brackets") {
  std::mt19937_64 rng(8);
  double worst = 0;
  for (int r = 0; r < 100; ++r) {
    const int d = r % 2 ? 3 : 2;
    const NoiseBasis nb = random_basis(d, 1 + r % 4, 1000 + r);
    const auto B = make_random_fourier(d, 2, 5000 + r, r % 3 != 0);
    const Vec x = testutil::random_point(rng, d, -3, 3);
    const Vec ref = apply_L_by_brackets(nb, *B, x);
    const Vec got = apply_L_by_coefficients(assemble_coefficients(nb), *B, x);
    worst = std::max(worst, (got - ref).norm() / std::max(ref.norm(), 1e-300));
  }
  CHECK(worst <= 1e-8);

  const auto cc = assemble_coefficients(constant_basis(2));
  const GaussianField g(vec2(0.2, 0.1), 0.6, vec2(-1, 2));
  for (int r = 0; r < 5; ++r) {
    const Vec x = testutil::random_point(rng, 2, -1.5, 1.5);
    CHECK((apply_L_by_coefficients(cc, g, x) - half_laplacian(g, x)).norm() <= 1e-13);
    CHECK(apply_L_by_coefficients(cc, ZeroField(2), x).norm() == 0.0);
  }
}

TEST_CASE("coefficient derivatives match finite differences") {
  const auto oc = assemble_coefficients(random_basis(2, 3, 77));
  std::mt19937_64 rng(9);
  const double h = 1e-5;
  for (int r = 0; r < 10; ++r) {
    const Vec x = testutil::random_point(rng, 2, -3, 3);
    const auto pd = oc.derivatives_at(x);
    for (int m = 0; m < 2; ++m) {
      Vec xp = x, xm = x;
      xp[m] += h;
      xm[m] -= h;
      const auto cp = oc.at(xp), cm = oc.at(xm);
      CHECK((pd.da[m] - (cp.a - cm.a) / (2 * h)).norm() <= 1e-7);
      for (int i = 0; i < 2; ++i) CHECK((pd.db[m][i] - (cp.b[i] - cm.b[i]) / (2 * h)).norm() <= 1e-7);
      const auto dp = oc.derivatives_at(xp), dm = oc.derivatives_at(xm);
      for (int n = 0; n < 2; ++n) CHECK((pd.dda[n][m] - (dp.da[n] - dm.da[n]) / (2 * h)).norm() <= 1e-7);
    }
  }
}

TEST_CASE("adjoint examples and duality") {
  const auto cc = assemble_coefficients(constant_basis(2));
  const GaussianField phi(vec2(-0.1, 0.3), 0.5, vec2(0.3, 1.0));
  std::mt19937_64 rng(10);
  for (int r = 0; r < 5; ++r) {
    const Vec x = testutil::random_point(rng, 2, -1.5, 1.5);
    CHECK((apply_L_adjoint(cc, phi, x) - half_laplacian(phi, x)).norm() <= 1e-13);
    CHECK(apply_L_adjoint(cc, ZeroField(2), x).norm() == 0.0);
  }

  const GridSpec spec{2, M_PI, 128};
  const GaussianCurlField B(vec2(0.2, -0.3), 0.55, 1.0);
  for (const NoiseBasis& nb : {sinusoidal_basis(), random_basis(2, 3, 314)}) {
    const auto oc = assemble_coefficients(nb);
    double lhs = 0, rhs = 0, scale = 0;
    for (std::size_t k = 0; k < spec.nodes(); ++k) {
      const Vec x = spec.node(k);
      const Vec lb = apply_L_by_coefficients(oc, B, x), f = phi.eval(x);
      const Vec ls = apply_L_adjoint(oc, phi, x), b = B.eval(x);
      lhs += lb.dot(f);
      rhs += b.dot(ls);
      scale += std::abs(lb.dot(f));
    }
    CHECK(std::abs(lhs - rhs) <= 1e-6 * scale);
  }
}

TEST_CASE("grid L matches pointwise L") {
  const GaussianCurlField B(vec2(0.2, -0.3), 0.45, 1.0);
  const auto oc = assemble_coefficients(sinusoidal_basis());
  double prev = 0;
  for (int n : {64, 128}) {
    const GridSpec spec{2, M_PI, n};
    const GridField LB = apply_L(sample_coefficients(oc, spec), sample(B, spec));
    double err = 0;
    for (std::size_t k = 0; k < spec.nodes(); ++k)
      err = std::max(err, (LB.vec(k) - apply_L_by_coefficients(oc, B, spec.node(k))).norm());
    err /= LB.sup_norm();
    if (prev > 0) CHECK(prev / err >= 3.5);
    prev = err;
  }
  CHECK(prev <= 5e-3);
}

TEST_CASE("coercivity") {
  const GridSpec spec{2, M_PI, 64};
  std::vector<GridField> sample_fields;
  for (int s = 0; s < 6; ++s) sample_fields.push_back(sample(*make_random_fourier(2, 4, 900 + s, true), spec));

  const auto cg = sample_coefficients(assemble_coefficients(constant_basis(2)), spec);
  const auto rc = coercivity_check(cg, 1.0, sample_fields);
  CHECK(rc.C_est <= 1e-8);
  CHECK(std::isfinite(rc.margin));

  const NoiseBasis nb = sinusoidal_basis();
  const double nu = check_ellipticity(nb, lattice_samples(2, M_PI)).nu_est;
  const auto r64 = coercivity_check(sample_coefficients(assemble_coefficients(nb), spec), nu, sample_fields);
  std::vector<GridField> doubled;
  for (const auto& f : sample_fields) doubled.push_back(2.0 * f);
  const auto r64b = coercivity_check(sample_coefficients(assemble_coefficients(nb), spec), nu, doubled);
  CHECK(r64b.C_est == doctest::Approx(r64.C_est).epsilon(1e-12));

  const GridSpec fine{2, M_PI, 128};
  std::vector<GridField> fine_fields;
  for (int s = 0; s < 6; ++s) fine_fields.push_back(sample(*make_random_fourier(2, 4, 900 + s, true), fine));
  const auto r128 = coercivity_check(sample_coefficients(assemble_coefficients(nb), fine), nu, fine_fields);
  CHECK(std::isfinite(r64.C_est));
  CHECK(std::abs(r128.C_est - r64.C_est) <= 0.2 * r64.C_est + 1e-12);
  CHECK(std::abs(r128.margin - r64.margin) <= 0.2 * std::abs(r64.margin));

  CHECK_THROWS_AS(coercivity_check(cg, 1.0, {GridField::vector(spec)}), DegenerateSample);
}

TEST_CASE("interpolation ratio") {
  const GridSpec spec{2, M_PI, 64};
  GridField one = GridField::scalar(spec), cst = GridField::scalar(spec);
  std::fill(one.values().begin(), one.values().end(), 1.0);
  std::fill(cst.values().begin(), cst.values().end(), 2.5);
  const GridField g = scalar_of(make_random_fourier(2, 3, 1, false), spec);
  CHECK(interpolation_ratio(one, g, cst, 3.0) == 0.0);

  const GridField f = scalar_of(make_random_fourier(2, 3, 2, false), spec);
  const GridField h = scalar_of(make_random_fourier(2, 3, 3, false), spec);
  const double r = interpolation_ratio(f, g, h, 3.0, 1);
  CHECK(r == doctest::Approx(interpolation_ratio(3.0 * f, 0.5 * g, 7.0 * h, 3.0, 1)).epsilon(1e-12));
  CHECK_THROWS_AS(interpolation_ratio(f, GridField::scalar(spec), h, 3.0), DegenerateSample);
}
