#include "tstlab/content.hpp"
#include "tstlab/generate.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace tstlab;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, int N)
{
    std::uniform_real_distribution<double> u(0, 1);
    Matrix m(2, N);
    for (int i = 0; i < N; ++i)
        m.col(i) << u(rng), 0.3 * u(rng);
    return PointCloud(m);
}

}  // namespace

TEST_CASE("content of a single point is zero")
{
    Matrix m(2, 1);
    m << 0.4, 0.4;
    PointCloud E(m);
    for (double d : {1.0, 1.5, 2.0})
        CHECK(hausdorff_content(E, d, Ball(E.point(0), 1)).value == 0);
}

TEST_CASE("empty intersection gives zero with an empty cover")
{
    Matrix m(2, 1);
    m << 5, 5;
    auto c = hausdorff_content(PointCloud(m), 1, Ball(Point::Zero(2), 1));
    CHECK(c.value == 0);
    CHECK(c.cover.empty());
}

TEST_CASE("unit segment has content close to its length")
{
    DatasetSpec s;
    s.count = 4097;
    PointCloud E = generate(s);
    Point c(2);
    c << 0.5, 0;
    auto est = hausdorff_content(E, 1, Ball(c, 0.6));
    CHECK(est.value >= 0.9);
    CHECK(est.value <= 1.1);
    double sum = 0;
    for (const Ball& b : est.cover)
        sum += std::pow(b.diameter(), 1.0);
    CHECK(sum == doctest::Approx(est.value).epsilon(1e-9));
}

TEST_CASE("unit square content lies in the sandwich")
{
    Matrix m(2, 256 * 256);
    for (int i = 0; i < 256; ++i)
        for (int j = 0; j < 256; ++j)
            m.col(i * 256 + j) << i / 255.0, j / 255.0;
    PointCloud E(m, 1 / 255.0);
    Point c(2);
    c << 0.5, 0.5;
    auto est = hausdorff_content(E, 2, Ball(c, 0.8));
    CHECK(est.value >= 0.5);
    CHECK(est.value <= 2.0);
}

TEST_CASE("content is monotone under inclusion")
{
    std::mt19937_64 rng(6);
    PointCloud E = random_cloud(rng, 300);
    ContentEstimator est(E, 1);
    std::vector<std::size_t> sub;
    double prev = 0;
    for (std::size_t i = 0; i < E.size(); i += 7)
    {
        sub.push_back(i);
        double v = est.value(sub);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    CHECK(est.value_all() >= prev - 1e-12);
}

TEST_CASE("accumulator agrees with direct evaluation")
{
    std::mt19937_64 rng(10);
    PointCloud E = random_cloud(rng, 200);
    ContentEstimator est(E, 1);
    ContentEstimator::Accumulator acc(est);
    std::vector<std::size_t> sub;
    for (std::size_t i = 0; i < E.size(); i += 3)
    {
        acc.insert(i);
        sub.push_back(i);
        CHECK(acc.value() == doctest::Approx(est.value(sub)).epsilon(1e-12));
    }
}

TEST_CASE("Choquet integral of zero")
{
    std::mt19937_64 rng(1);
    PointCloud E = random_cloud(rng, 50);
    ContentEstimator est(E, 1);
    CHECK(choquet_integral(est, std::vector<double>(50, 0.0), 2) == 0);
}

TEST_CASE("Choquet integral of a constant at p = 1")
{
    std::mt19937_64 rng(2);
    PointCloud E = random_cloud(rng, 80);
    ContentEstimator est(E, 1);
    for (double alpha : {0.1, 0.5, 3.0})
        CHECK(choquet_integral(est, std::vector<double>(80, alpha), 1) ==
              doctest::Approx(alpha * est.value_all()).epsilon(1e-12));
}

TEST_CASE("Choquet integral matches fine quadrature")
{
    std::mt19937_64 rng(3);
    PointCloud E = random_cloud(rng, 10);
    ContentEstimator est(E, 1);
    const int S = 100000;
    std::uniform_int_distribution<int> k(1, S);
    for (int trial = 0; trial < 5; ++trial)
    {
        std::vector<double> f(10);
        for (auto& v : f)
            v = k(rng) / static_cast<double>(S);
        double q = 0;
        const double dt = 1.0 / S;
        for (int i = 0; i < S; ++i)
        {
            double t = (i + 0.5) * dt;
            std::vector<std::size_t> sup;
            for (std::size_t j = 0; j < f.size(); ++j)
                if (f[j] > t)
                    sup.push_back(j);
            if (sup.empty())
                continue;
            q += est.value(sup) * t * dt;
        }
        CHECK(choquet_integral(est, f, 2) == doctest::Approx(q).epsilon(1e-6));
    }
}

TEST_CASE("Choquet calculus identities")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    PointCloud E = random_cloud(rng, 120);
    ContentEstimator est(E, 1);
    for (int trial = 0; trial < 20; ++trial)
    {
        std::vector<double> f(E.size()), g(E.size());
        for (std::size_t i = 0; i < f.size(); ++i)
        {
            f[i] = u(rng);
            g[i] = f[i] + 0.2 * u(rng);
        }
        const double p = 1 + 2 * u(rng), alpha = 0.1 + u(rng);
        CHECK(choquet_integral(est, f, p) <= choquet_integral(est, g, p) + 1e-12);
        std::vector<double> af(f), fa(f);
        for (std::size_t i = 0; i < f.size(); ++i)
        {
            af[i] *= alpha;
            fa[i] += alpha;
        }
        CHECK(choquet_integral(est, af, p) ==
              doctest::Approx(std::pow(alpha, p) * choquet_integral(est, f, p)).epsilon(1e-9));
        CHECK(choquet_integral(est, fa, 1) ==
              doctest::Approx(choquet_integral(est, f, 1) + alpha * est.value_all()).epsilon(1e-9));
    }
}

TEST_CASE("unit range truncates at one")
{
    std::mt19937_64 rng(5);
    PointCloud E = random_cloud(rng, 30);
    ContentEstimator est(E, 1);
    std::vector<double> f(30, 2.0);
    CHECK(choquet_integral(est, f, 2, ChoquetRange::unit) ==
          doctest::Approx(0.5 * est.value_all()).epsilon(1e-12));
    CHECK(choquet_integral(est, f, 2) == doctest::Approx(2.0 * est.value_all()).epsilon(1e-12));
}

TEST_CASE("negative values are rejected")
{
    std::mt19937_64 rng(5);
    PointCloud E = random_cloud(rng, 5);
    ContentEstimator est(E, 1);
    CHECK_THROWS_AS(choquet_integral(est, {0.1, -0.1, 0, 0, 0}, 1), InputError);
}

TEST_CASE("critical exponent")
{
    CHECK(critical_exponent(1) == kInf);
    CHECK(critical_exponent(2) == kInf);
    CHECK(critical_exponent(4) == doctest::Approx(4.0));
}
