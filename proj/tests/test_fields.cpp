#include "stochvec/analytic_field.hpp"
#include "stochvec/errors.hpp"
#include "stochvec/grid.hpp"
#include "stochvec/io.hpp"
#include "stochvec/mollifier.hpp"
#include "stochvec/spline.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace stochvec;
using testutil::vec2;
using testutil::vec3;

namespace {

std::vector<Vec> random_points(int d, int count, double lo, double hi, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> pts;
  for (int k = 0; k < count; ++k) pts.push_back(testutil::random_point(rng, d, lo, hi));
  return pts;
}

std::vector<FieldPtr> field_zoo() {
  std::vector<FieldPtr> zoo;
  zoo.push_back(make_shear(0.7, vec2(0, 1), vec2(1, 0), 0.3));
  zoo.push_back(make_taylor_green(1.0));
  zoo.push_back(make_random_fourier(2, 2, 11, true));
  zoo.push_back(make_random_fourier(3, 1, 12, true));
  zoo.push_back(std::make_shared<GaussianField>(vec2(0.2, -0.1), 0.8, vec2(1.0, -0.5)));
  zoo.push_back(std::make_shared<GaussianCurlField>(vec2(0.1, 0.3), 0.7, 1.3));
  zoo.push_back(std::make_shared<GaussianCurlField>(vec3(0.1, 0.3, -0.2), 0.8, 0.9, vec3(0.3, -0.4, 0.5)));
  Mat A(2, 2);
  A << 0.3, -1.2, 0.5, -0.3;
  zoo.push_back(std::make_shared<LinearField>(A, vec2(0.1, 0.2)));
  return zoo;
}

}  // namespace

TEST_CASE("analytic derivatives agree with central differences") {
  for (const auto& f : field_zoo()) {
    CAPTURE(f->name());
    const auto pts = random_points(f->dim(), 100, -2.0, 2.0);
    const auto rep = testutil::fd_consistency(*f, pts);
    CHECK(rep.jac_rel <= 1e-6);
    if (f->name() != "linear") CHECK(rep.hess_rel <= 1e-6);
  }
}

TEST_CASE("singular vortex derivatives away from the origin") {
  SingularVortexField v(1.5, 0.75 * M_PI / 2, M_PI / 2);
  std::vector<Vec> pts;
  for (const Vec& x : random_points(2, 400, -1.7, 1.7))
    if (x.norm() > 0.4) pts.push_back(x);
  const auto rep = testutil::fd_consistency(v, pts);
  CHECK(rep.jac_rel <= 1e-6);
  CHECK(rep.hess_rel <= 1e-6);
  CHECK(v.eval(vec2(0, 0)).norm() == 0.0);
  CHECK(v.eval(vec2(2.0, 0)).norm() == 0.0);
  // inside the cutoff the profile is exactly r^-1.5
  const Vec x = vec2(0.5, 0.0);
  CHECK(v.eval(x)[1] == doctest::Approx(0.5 * std::pow(0.5, -1.5)).epsilon(1e-14));
}

TEST_CASE("divergence-free fields have zero analytic divergence") {
  std::vector<FieldPtr> solenoidal = {make_shear(0.7, vec2(0, 1), vec2(1, 0)), make_taylor_green(),
                                      make_random_fourier(2, 3, 5, true), make_random_fourier(3, 2, 6, true),
                                      std::make_shared<GaussianCurlField>(vec2(0.1, 0.3), 0.7, 1.3),
                                      std::make_shared<GaussianCurlField>(vec3(0, 0, 0), 0.6, 1.0, vec3(1, 2, 3)),
                                      std::make_shared<SingularVortexField>(1.5, 1.0, 1.5)};
  for (const auto& f : solenoidal) {
    CAPTURE(f->name());
    for (const Vec& x : random_points(f->dim(), 100, -2.0, 2.0, 3)) {
      const double scale = f->jacobian(x).cwiseAbs().maxCoeff() + 1.0;
      CHECK(std::abs(divergence(*f, x)) <= 1e-13 * scale);
    }
  }
}

TEST_CASE("batch evaluation matches pointwise evaluation") {
  for (const auto& f : field_zoo()) {
    const int d = f->dim();
    const auto pts = random_points(d, 17, -3.0, 3.0, 9);
    std::vector<double> packed, vals(pts.size() * d), jacs(pts.size() * d * d);
    for (const auto& x : pts)
      for (int i = 0; i < d; ++i) packed.push_back(x[i]);
    f->eval_batch(packed, 0.0, vals, jacs);
    for (std::size_t p = 0; p < pts.size(); ++p) {
      const Vec v = f->eval(pts[p]);
      const Mat J = f->jacobian(pts[p]);
      for (int a = 0; a < d; ++a) {
        CHECK(vals[p * d + a] == doctest::Approx(v[a]).epsilon(1e-13));
        for (int i = 0; i < d; ++i) CHECK(jacs[p * d * d + a * d + i] == doctest::Approx(J(a, i)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("grid layout and periodic indexing") {
  const GridSpec spec{3, 1.0, 8};
  GridField f = GridField::vector(spec);
  CHECK(f.values().size() == 3u * 8 * 8 * 8);
  const std::size_t idx = spec.flat({7, 0, 3});
  CHECK(spec.shift(idx, 0, 1) == spec.flat({0, 0, 3}));
  CHECK(spec.shift(idx, 1, -1) == spec.flat({7, 7, 3}));
  CHECK(spec.shift(idx, 2, 13) == spec.flat({7, 0, 0}));
  CHECK(spec.flat({-1, 8, 9}) == spec.flat({7, 0, 1}));
  CHECK(spec.node(spec.flat({1, 0, 0}))[0] == doctest::Approx(-1.0 + 0.25));
  CHECK(wrap_coordinate(1.0, 1.0) == -1.0);
  CHECK(wrap_coordinate(-3.5, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(GridSpec({2, 1.0, 2}).validate(), InvalidConfig);
}

TEST_CASE("sample evaluates at the nodes") {
  const GridSpec spec{2, M_PI, 64};
  CHECK(sample(ZeroField(2), spec).sup_norm() == 0.0);
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1;
  const GridField lin = sample(LinearField(A, vec2(0, 0)), spec);
  const std::size_t k = spec.flat({33, 32, 0});  // x = (dx, 0)
  CHECK(lin.at(k, 0) == doctest::Approx(spec.dx()));
  CHECK(lin.at(k, 1) == 0.0);
  const GridField tg = sample(*make_taylor_green(), spec);
  const std::size_t q = spec.flat({48, 32, 0});  // x = (pi/2, 0)
  CHECK(tg.at(q, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(tg.at(q, 1) == doctest::Approx(1.0));
}

TEST_CASE("grid divergence") {
  const GridSpec spec{2, M_PI, 64};
  CHECK(divergence(sample(ConstantField(vec2(1.5, -2)), spec)).sup_norm() == 0.0);
  CHECK(divergence(sample(*make_taylor_green(), spec)).sup_norm() <= 1e-12);

  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1;
  const GridField f = sample(LinearField(A, vec2(0, 0)), spec);
  const GridField div = divergence(f);
  const double dx = spec.dx();
  auto x1 = [&](int i) { return -M_PI + i * dx; };
  // by-hand stencil at an interior node and the two wrap nodes
  CHECK(div.at(spec.flat({10, 5, 0}), 0) == doctest::Approx((x1(11) - x1(9)) / (2 * dx)));
  CHECK(div.at(spec.flat({0, 5, 0}), 0) == doctest::Approx((x1(1) - x1(63)) / (2 * dx)));
  CHECK(div.at(spec.flat({63, 5, 0}), 0) == doctest::Approx((x1(0) - x1(62)) / (2 * dx)));
  CHECK(div.at(spec.flat({10, 5, 0}), 0) == doctest::Approx(1.0));
}

TEST_CASE("lie bracket on grids") {
  const GridSpec spec{2, M_PI, 32};
  const GridField A = sample(*make_taylor_green(), spec);
  CHECK(lie_bracket(A, A).sup_norm() <= 1e-14);
  const GridField B = sample(*make_shear(0.5, vec2(1, 1), vec2(1, -1)), spec);
  const GridField ab = lie_bracket(A, B);
  const GridField ba = lie_bracket(B, A);
  CHECK((ab + ba).sup_norm() <= 1e-14);
}

TEST_CASE("mollifier kernel") {
  Mollifier m(0.2);
  const auto w = m.weights(0.05);
  double mass = 0;
  for (double v : w) mass += v;
  CHECK(std::abs(mass - 1.0) <= 1e-12);
  for (std::size_t j = 0; j < w.size(); ++j) CHECK(w[j] == w[w.size() - 1 - j]);
  CHECK(w.size() == 2 * 16 + 1);
  CHECK_THROWS_AS(Mollifier(0.0), InvalidConfig);
}

TEST_CASE("mollify") {
  const GridSpec spec{2, M_PI, 64};
  const Mollifier m(4 * spec.dx());
  CHECK(mollify(GridField::vector(spec), m).sup_norm() == 0.0);

  const GridField c = mollify(sample(ConstantField(vec2(0.7, -1.1)), spec), m);
  for (std::size_t k = 0; k < c.nodes(); ++k) {
    CHECK(c.at(k, 0) == doctest::Approx(0.7).epsilon(1e-13));
    CHECK(c.at(k, 1) == doctest::Approx(-1.1).epsilon(1e-13));
  }

  const GridField f = sample(*make_random_fourier(2, 4, 21, false), spec);
  const GridField g = sample(GaussianField(vec2(0.3, 0.1), 0.6, vec2(1, 2)), spec);
  const GridField mf = mollify(f, m), mg = mollify(g, m);
  CHECK(mf.sup_norm() <= f.sup_norm() * (1 + 1e-14));
  const GridField lin = mollify(2.5 * f - 0.75 * g, m);
  CHECK((lin - (2.5 * mf - 0.75 * mg)).sup_norm() <= 1e-13 * lin.sup_norm());

  // divergence commutes with convolution
  CHECK((divergence(mf) - mollify(divergence(f), m)).sup_norm() <= 1e-10);
  // discretely divergence-free input: (D2 psi, -D1 psi) from a grid stream function
  const GridField psi = sample(*make_random_fourier(2, 4, 22, false), spec);
  GridField curl = GridField::vector(spec);
  const auto p0 = psi.component(0);
  const auto d2 = diff1(spec, p0, 1), d1 = diff1(spec, p0, 0);
  for (std::size_t k = 0; k < curl.nodes(); ++k) {
    curl.at(k, 0) = d2[k];
    curl.at(k, 1) = -d1[k];
  }
  CHECK(divergence(curl).sup_norm() <= 1e-12);
  const GridField sol = mollify(curl, m);
  CHECK(divergence(sol).sup_norm() <= 10 * 2.2e-16 * spec.n * std::max(1.0, sol.sup_norm()));

  CHECK_THROWS_AS(mollify(f, Mollifier(0.5 * spec.dx())), KernelUnderresolved);
}

TEST_CASE("mollified singular vortex against direct quadrature") {
  const GridSpec spec{2, M_PI, 128};
  const double eps = 4 * spec.dx();
  SingularVortexField v(1.5, 0.75 * M_PI / 2, M_PI / 2);
  const GridField mv = mollify(v, Mollifier(eps), spec);
  CHECK(mv.all_finite());
  CHECK(std::isfinite(mv.sup_norm()));

  // continuous truncated Gaussian, brute-force midpoint rule around x
  const Vec x = vec2(0.5, 0.0);
  const double R = 4 * eps;
  const int q = 1600;
  const double h = 2 * R / q;
  auto ker1 = [&](double s) { return std::exp(-s * s / (2 * eps * eps)); };
  double mass1 = 0;
  for (int i = 0; i < q; ++i) mass1 += ker1(-R + (i + 0.5) * h) * h;
  Vec acc = Vec::Zero(2);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) {
      const double s1 = -R + (i + 0.5) * h, s2 = -R + (j + 0.5) * h;
      const Vec y = vec2(x[0] - s1, x[1] - s2);
      acc += v.eval(y) * ker1(s1) * ker1(s2) * h * h;
    }
  acc /= mass1 * mass1;

  const Vec grid_value = InterpolatedField(mv).eval(x);
  CHECK((grid_value - acc).norm() <= 0.01 * acc.norm());
}

TEST_CASE("periodic spline interpolation") {
  const GridSpec spec{2, M_PI, 64};
  const auto f = make_random_fourier(2, 2, 31, true);
  const GridField g = sample(*f, spec);
  InterpolatedField s(g);
  for (std::size_t k = 0; k < g.nodes(); k += 97) {
    const Vec x = spec.node(k);
    CHECK((s.eval(x) - g.vec(k)).norm() <= 1e-12);
  }
  double err = 0, jerr = 0;
  for (const Vec& x : random_points(2, 200, -5.0, 5.0)) {
    err = std::max(err, (s.eval(x) - f->eval(x)).norm());
    jerr = std::max(jerr, (s.jacobian(x) - f->jacobian(x)).norm());
  }
  CHECK(err <= 1e-4);
  CHECK(jerr <= 1e-2);
  const auto rep = testutil::fd_consistency(s, random_points(2, 50, -2.0, 2.0), 1e-5);
  CHECK(rep.jac_rel <= 1e-6);

  // fourth-order convergence on refinement
  const GridSpec fine{2, M_PI, 128};
  InterpolatedField sf(sample(*f, fine));
  double err_f = 0;
  for (const Vec& x : random_points(2, 200, -5.0, 5.0)) err_f = std::max(err_f, (sf.eval(x) - f->eval(x)).norm());
  CHECK(err / err_f >= 12.0);
}

TEST_CASE("field CSV round trip") {
  const GridSpec spec{2, 1.5, 8};
  const GridField g = sample(*make_random_fourier(2, 1, 2, true), spec);
  const auto dir = std::filesystem::temp_directory_path() / "stochvec_io_test";
  std::filesystem::create_directories(dir);
  write_field_csv(dir / "b.csv", g, {"B0", 0.25, 42});
  std::ifstream in(dir / "b.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x1,x2,f1,f2");
  FieldMeta meta;
  const GridField back = read_field_csv(dir / "b.csv", &meta);
  CHECK(back.values() == g.values());
  CHECK(meta.name == "B0");
  CHECK(meta.seed == 42u);
  CHECK(meta.t == 0.25);
  std::filesystem::remove_all(dir);
}
