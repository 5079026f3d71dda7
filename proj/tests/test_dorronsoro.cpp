#include "tstlab/dorronsoro.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tstlab;

namespace {

using Vec = Eigen::VectorXd;

Vec v1(double x)
{
    Vec v(1);
    v << x;
    return v;
}

SampledFunction scalar(double lo, double hi, double pitch, const std::function<double(double)>& g,
                       double slo, double shi)
{
    return SampledFunction::on_lattice(
        1, 1, v1(lo), v1(hi), pitch, [&](const Vec& x) { return v1(g(x[0])); }, v1(slo), v1(shi));
}

SampledFunction graph_map(double lam)
{
    auto g = [lam](const Vec& x) {
        Vec v(2);
        v << x[0], lam * std::sin(2 * std::numbers::pi * x[0]) / (2 * std::numbers::pi);
        return v;
    };
    return SampledFunction::on_lattice(1, 2, v1(-1), v1(2), 1e-3, g, v1(-1), v1(2));
}

// Minimax error of the best line a x + b by grid search over a and b.
double grid_minimax(const SampledFunction& f, const Ball& B, double amax, double bmin, double bmax)
{
    auto idx = f.in_ball(B);
    double best = kInf;
    for (int i = 0; i <= 400; ++i)
    {
        double a = -amax + 2 * amax * i / 400;
        for (int j = 0; j <= 400; ++j)
        {
            double b = bmin + (bmax - bmin) * j / 400;
            double e = 0;
            for (auto k : idx)
                e = std::max(e, std::abs(f.f(0, static_cast<Eigen::Index>(k)) -
                                         a * f.x(0, static_cast<Eigen::Index>(k)) - b));
            best = std::min(best, e);
        }
    }
    return best / B.radius;
}

}  // namespace

TEST_CASE("affine maps have zero omega")
{
    SampledFunction f = scalar(-2, 2, 1e-3, [](double x) { return 3 * x - 1; }, -2, 2);
    for (double p : {1.0, 2.0, 3.0, kInf})
        CHECK(omega_p(f, Ball(v1(0.3), 1), p).value <= 1e-10);

    OmegaReport rep = omega_sum(scalar(0, 1, 1.0 / 512, [](double x) { return 0.5 * x; }, 0, 1), 2, 5);
    CHECK(rep.sum_sq <= 1e-18);
    CHECK(rep.sum_p <= 1e-18);
}

TEST_CASE("omega_inf of x^2 equals the grid-search minimax")
{
    for (double r : {0.5, 1.0, 2.0})
    {
        SampledFunction f = scalar(-r, r, r / 2000, [](double x) { return x * x; }, -r, r);
        Ball B(v1(0), r);
        double v = omega_p(f, B, kInf).value;
        CHECK(v == doctest::Approx(grid_minimax(f, B, 0.5, 0, r * r)).epsilon(0.02));
        CHECK(v == doctest::Approx(r / 2).epsilon(0.02));
    }
}

// The best line for x^2 on [-r, r] is the constant r^2/2 with error r^2/2,
// so the normalized value is r/2.
TEST_CASE("omega_inf of x^2 is r/8" * doctest::may_fail())
{
    for (double r : {0.5, 1.0, 2.0})
    {
        SampledFunction f = scalar(-r, r, r / 2000, [](double x) { return x * x; }, -r, r);
        CHECK(omega_p(f, Ball(v1(0), r), kInf).value == doctest::Approx(r / 8).epsilon(0.02));
    }
}

TEST_CASE("omega_inf of |x|")
{
    SampledFunction f = scalar(-1, 1, 1e-3, [](double x) { return std::abs(x); }, -1, 1);
    Ball B(v1(0), 1);
    double v = omega_p(f, B, kInf).value;
    CHECK(v == doctest::Approx(0.5).epsilon(0.02));
    CHECK(v == doctest::Approx(grid_minimax(f, B, 0.5, 0, 1)).epsilon(0.02));
}

TEST_CASE("affine invariance, linear scaling and Jensen ordering")
{
    auto g = [](double x) { return std::sin(3 * x) + 0.2 * x * x; };
    SampledFunction f = scalar(-1, 1, 1e-3, g, -1, 1);
    SampledFunction fa = scalar(-1, 1, 1e-3, [&](double x) { return g(x) + 2 * x - 5; }, -1, 1);
    SampledFunction f3 = scalar(-1, 1, 1e-3, [&](double x) { return -3 * g(x); }, -1, 1);
    Ball B(v1(0.1), 0.7);
    OmegaResult w = omega_p(f, B, 2);
    CHECK(omega_p(fa, B, 2).value == doctest::Approx(w.value).epsilon(1e-9));
    CHECK(omega_p(f3, B, 2).value == doctest::Approx(3 * w.value).epsilon(1e-9));
    for (double p : {1.5, 3.0})
        CHECK(omega_at(f, B, 1, w.A, w.b) <= omega_at(f, B, p, w.A, w.b) + 1e-12);

    auto idx = f.in_ball(B);
    double s0 = 0, s1 = 0;
    for (auto i : idx)
    {
        const auto k = static_cast<Eigen::Index>(i);
        double res = f.f(0, k) - (w.A(0, 0) * f.x(0, k) + w.b[0]);
        s0 += res;
        s1 += res * f.x(0, k);
    }
    CHECK(std::abs(s0) / static_cast<double>(idx.size()) <= 1e-9);
    CHECK(std::abs(s1) / static_cast<double>(idx.size()) <= 1e-9);
}

TEST_CASE("dyadic omega sum scales like lambda squared")
{
    auto sum_for = [](double lam, int depth) {
        SampledFunction f = scalar(
            0, 1, 1.0 / 4096, [lam](double x) { return lam * std::sin(2 * std::numbers::pi * x); }, 0, 1);
        return omega_sum(f, 2, depth);
    };
    OmegaReport a = sum_for(0.05, 7), b = sum_for(0.2, 7);
    double ratio = b.sum_sq / a.sum_sq;
    CHECK(ratio >= 13.6);
    CHECK(ratio <= 18.4);
    OmegaReport c = sum_for(0.1, 7);
    CHECK(c.sum_sq / a.sum_sq == doctest::Approx(4).epsilon(0.15));
}

TEST_CASE("corollary ratio is stable across depth")
{
    SampledFunction f = scalar(
        0, 1, 1.0 / 8192, [](double x) { return 0.1 * std::sin(2 * std::numbers::pi * x); }, 0, 1);
    double r6 = omega_sum(f, 2, 6).ratio_sq();
    double r9 = omega_sum(f, 2, 9).ratio_sq();
    CHECK(r6 > 0);
    CHECK(std::abs(r9 / r6 - 1) <= 0.5);
}

TEST_CASE("sup bound for bi-Lipschitz maps")
{
    SampledFunction aff = scalar(-1, 1, 1e-3, [](double x) { return 2 * x + 1; }, -1, 1);
    BoundPair z = omega_infty_bound_check(aff, Ball(v1(0), 1), 2);
    CHECK(z.lhs <= 1e-10);
    // rhs is a square root, so rounding at 1e-16 shows up at 1e-8
    CHECK(z.rhs <= 1e-7);

    SampledFunction f = scalar(-1, 1, 1e-3, [](double x) { return x + 0.1 * std::sin(x); }, -1, 1);
    SampledFunction f2 = scalar(-1, 1, 1e-3, [](double x) { return 2 * (x + 0.1 * std::sin(x)); }, -1, 1);
    Ball B(v1(0), 1);
    BoundPair b = omega_infty_bound_check(f, B, 1.2);
    REQUIRE(b.rhs > 0);
    CHECK(b.lhs / b.rhs <= 10);
    BoundPair b2 = omega_infty_bound_check(f2, B, 2.4);
    CHECK(b2.lhs == doctest::Approx(2 * b.lhs).epsilon(1e-6));
    CHECK(b2.rhs == doctest::Approx(std::pow(2.0, 0.5) * b.rhs).epsilon(1e-6));

    SampledFunction fold = scalar(-1, 1, 1e-3, [](double x) { return x * x; }, -1, 1);
    CHECK_THROWS_AS(omega_infty_bound_check(fold, B, 2), InputError);
}

TEST_CASE("beta from omega")
{
    SUBCASE("affine map")
    {
        SampledFunction f = graph_map(0);
        Point x(2);
        x << 0.5, 0;
        BoundPair b = beta_from_omega(f, x, 0.4, Ball(v1(0.5), 0.6), 2);
        CHECK(b.lhs <= 1e-8);
        CHECK(b.rhs <= 1e-8);
    }
    SUBCASE("graph")
    {
        SampledFunction f = graph_map(0.1);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ux(0, 1), ur(0.05, 0.5);
        double C = 0;
        for (int trial = 0; trial < 20; ++trial)
        {
            double t = ux(rng), r = ur(rng);
            Point x = f.f.col(static_cast<Eigen::Index>(std::lround((t + 1) / 1e-3)));
            BoundPair b = beta_from_omega(f, x, r, Ball(v1(t), 1.2 * r), 2);
            REQUIRE(b.rhs > 0);
            C = std::max(C, b.lhs / b.rhs);
        }
        CHECK(C <= 20);
        Point x = f.f.col(1500);
        BoundPair big = beta_from_omega(f, x, 1.4, Ball(v1(0.5), 1.5), 2);
        CHECK(big.lhs / big.rhs <= 20);
    }
    SUBCASE("containment is checked")
    {
        SampledFunction f = graph_map(0.1);
        Point x = f.f.col(1500);
        CHECK_THROWS_AS(beta_from_omega(f, x, 0.4, Ball(v1(0.5), 0.1), 2), InputError);
    }
}
