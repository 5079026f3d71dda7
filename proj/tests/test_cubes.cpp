#include "tstlab/beta.hpp"
#include "tstlab/cubes.hpp"
#include "tstlab/generate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <set>

using namespace tstlab;

namespace {

std::shared_ptr<const PointCloud> share(PointCloud E)
{
    return std::make_shared<const PointCloud>(std::move(E));
}

PointCloud random_cloud(std::mt19937_64& rng, int n, int N)
{
    std::uniform_real_distribution<double> u(0, 1);
    Matrix m(n, N);
    for (int i = 0; i < N; ++i)
        for (int a = 0; a < n; ++a)
            m(a, i) = u(rng);
    return PointCloud(m);
}

// Nested greedy nets computed from scratch.
std::vector<std::vector<std::size_t>> greedy_oracle(const Matrix& P, double rho, double scale0, int kmax)
{
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    for (int k = 0; k <= kmax; ++k)
    {
        double r = std::pow(rho, k) * scale0;
        for (Eigen::Index i = 0; i < P.cols(); ++i)
        {
            bool ok = true;
            for (auto j : cur)
                if ((P.col(i) - P.col(static_cast<Eigen::Index>(j))).norm() < r)
                {
                    ok = false;
                    break;
                }
            if (ok)
                cur.push_back(static_cast<std::size_t>(i));
        }
        out.push_back(cur);
    }
    return out;
}

// Brute-force check of nesting, inner and outer balls, cover and partition.
int count_violations(const CubeTree& t)
{
    const Matrix& P = t.cloud().points();
    const auto N = static_cast<std::size_t>(P.cols());
    int bad = 0;
    for (int k = 0; k <= t.depth(); ++k)
    {
        std::vector<int> owner(N, -1);
        for (int id : t.by_level[static_cast<std::size_t>(k)])
        {
            const Cube& Q = t.cube(id);
            for (auto i : Q.members)
            {
                if (owner[i] != -1)
                    ++bad;
                owner[i] = id;
                if ((P.col(static_cast<Eigen::Index>(i)) - t.center(Q)).norm() > t.ell(Q))
                    ++bad;
            }
            for (std::size_t i = 0; i < N; ++i)
                if ((P.col(static_cast<Eigen::Index>(i)) - t.center(Q)).norm() < t.c0 * t.ell(Q) &&
                    !std::binary_search(Q.members.begin(), Q.members.end(), i))
                    ++bad;
        }
        for (std::size_t i = 0; i < N; ++i)
            if (owner[i] == -1)
                ++bad;
    }
    for (const Cube& Q : t.cubes)
        for (const Cube& R : t.cubes)
        {
            if (Q.level > R.level || Q.id == R.id)
                continue;
            std::vector<std::size_t> common;
            std::set_intersection(Q.members.begin(), Q.members.end(), R.members.begin(),
                                  R.members.end(), std::back_inserter(common));
            if (common.empty())
                continue;
            if (!std::includes(Q.members.begin(), Q.members.end(), R.members.begin(), R.members.end()))
                ++bad;
        }
    return bad;
}

}  // namespace

TEST_CASE("single point cloud")
{
    Matrix m(3, 1);
    m << 0.1, 0.2, 0.3;
    auto nets = build_nets(share(PointCloud(m)), 0.5, 5);
    for (const auto& lvl : nets.levels)
        CHECK(lvl == std::vector<std::size_t>{0});
    CubeTree t = build_cubes(nets);
    CHECK(t.check().empty());
    for (const auto& lvl : t.by_level)
        CHECK(lvl.size() == 1);
}

TEST_CASE("separation uses the >= convention")
{
    Matrix m(2, 2);
    m << 0, 1, 0, 0;
    auto nets = build_nets(share(PointCloud(m)), 0.5, 2, 1.0);
    CHECK(nets.levels[0].size() == 2);
}

TEST_CASE("grid nets match a greedy oracle")
{
    Matrix m(2, 10000);
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j)
            m.col(i * 100 + j) << i, j;
    auto nets = build_nets(share(PointCloud(m)), 0.5, 7, 128);
    auto oracle = greedy_oracle(m, 0.5, 128, 7);
    for (int k = 0; k <= 7; ++k)
        CHECK(nets.levels[static_cast<std::size_t>(k)].size() == oracle[static_cast<std::size_t>(k)].size());
}

TEST_CASE("nets are separated, maximal and nested")
{
    std::mt19937_64 rng(4);
    PointCloud E = random_cloud(rng, 3, 800);
    auto nets = build_nets(share(E), 0.5, 6, 1.0);
    const Matrix& P = E.points();
    for (int k = 0; k <= nets.k_max(); ++k)
    {
        const auto& X = nets.levels[static_cast<std::size_t>(k)];
        const double r = nets.radius(k);
        for (std::size_t a = 0; a < X.size(); ++a)
            for (std::size_t b = a + 1; b < X.size(); ++b)
                CHECK((P.col(static_cast<Eigen::Index>(X[a])) - P.col(static_cast<Eigen::Index>(X[b]))).norm() >= r);
        for (Eigen::Index i = 0; i < P.cols(); ++i)
        {
            double best = kInf;
            for (auto x : X)
                best = std::min(best, (P.col(i) - P.col(static_cast<Eigen::Index>(x))).norm());
            CHECK(best < r);
        }
        if (k > 0)
        {
            const auto& prev = nets.levels[static_cast<std::size_t>(k - 1)];
            CHECK(std::equal(prev.begin(), prev.end(), X.begin()));
        }
    }
}

TEST_CASE("random cloud in four dimensions satisfies the cube axioms")
{
    std::mt19937_64 rng(8);
    PointCloud E = random_cloud(rng, 4, 500);
    CubeTree t = build_cubes(build_nets(share(E), 0.5, 6));
    CHECK(t.check().empty());
    CHECK(count_violations(t) == 0);
}

TEST_CASE("segment cube counts scale like rho^-k")
{
    DatasetSpec s;
    s.family = Family::segment;
    s.count = 1025;
    auto E = share(generate(s));
    CubeTree t = build_cubes(build_nets(E, 0.5, 9));
    CHECK(t.nets.scale0 == 1.0);
    for (int k = 0; k <= 9; ++k)
    {
        double c = static_cast<double>(t.by_level[static_cast<std::size_t>(k)].size());
        CHECK(c >= std::pow(2.0, k) / 5);
        CHECK(c <= 5 * std::pow(2.0, k));
    }
}

TEST_CASE("cube distance")
{
    std::mt19937_64 rng(12);
    PointCloud E = random_cloud(rng, 2, 400);
    CubeTree t = build_cubes(build_nets(share(E), 0.5, 5));
    SUBCASE("empty family")
    {
        CHECK(cube_distance(Point(E.point(0)), t, {}) == kInf);
    }
    SUBCASE("point inside a member cube")
    {
        for (int id : t.by_level[3])
        {
            const Cube& R = t.cube(id);
            Point x = E.point(R.members.front());
            CHECK(cube_distance(x, t, {id}) <= t.ell(R) + 1e-15);
        }
    }
    SUBCASE("comparison between cubes and 1-Lipschitz in x")
    {
        std::uniform_int_distribution<std::size_t> pick(0, t.cubes.size() - 1);
        std::uniform_real_distribution<double> u(0, 1);
        for (int trial = 0; trial < 100; ++trial)
        {
            std::vector<int> C;
            for (int m = 0; m < 5; ++m)
                C.push_back(static_cast<int>(pick(rng)));
            const Cube& Q = t.cubes[pick(rng)];
            const Cube& Q2 = t.cubes[pick(rng)];
            double lhs = cube_distance(Q, t, C);
            double rhs = 2 * t.ell(Q) + dist_cubes(t, Q, Q2) + 2 * t.ell(Q2) + cube_distance(Q2, t, C);
            CHECK(lhs <= rhs + 1e-12);
            Point x(2), y(2);
            x << u(rng), u(rng);
            y << u(rng), u(rng);
            CHECK(std::abs(cube_distance(x, t, C) - cube_distance(y, t, C)) <= (x - y).norm() + 1e-12);
        }
    }
}

TEST_CASE("stopping time regions")
{
    std::mt19937_64 rng(2);
    PointCloud E = random_cloud(rng, 2, 300);
    CubeTree t = build_cubes(build_nets(share(E), 0.5, 4));
    const int top = t.roots().front();
    SUBCASE("keep everything")
    {
        auto S = build_stopping_time(t, top, [](const Cube&) { return true; });
        CHECK(S.members == t.descendants(top));
        for (int m : S.minimal)
            CHECK(t.cube(m).children.empty());
        CHECK(S.residual.empty());
    }
    SUBCASE("keep nothing")
    {
        auto S = build_stopping_time(t, top, [](const Cube&) { return false; });
        CHECK(S.members == std::vector<int>{top});
        CHECK(S.minimal == std::vector<int>{top});
    }
}

TEST_CASE("stopping time on a graph matches a recursive oracle")
{
    DatasetSpec s;
    s.family = Family::lipschitz_graph;
    s.lambda = 0.2;
    s.count = 2000;
    auto E = share(generate(s));
    CubeTree t = build_cubes(build_nets(E, 0.5, 6));
    std::vector<char> keep_flag(t.cubes.size());
    for (const Cube& Q : t.cubes)
        keep_flag[static_cast<std::size_t>(Q.id)] =
            beta_dp(*E, t.ball(Q).scaled(2), 1, 1).value < 0.02;
    auto keep = [&](const Cube& Q) { return keep_flag[static_cast<std::size_t>(Q.id)] != 0; };
    const int top = t.roots().front();
    auto S = build_stopping_time(t, top, keep);

    std::vector<int> expect{top};
    std::function<void(int)> rec = [&](int id) {
        const Cube& Q = t.cube(id);
        bool all = !Q.children.empty();
        for (int c : Q.children)
            all = all && keep(t.cube(c));
        if (!all)
            return;
        for (int c : Q.children)
        {
            expect.push_back(c);
            rec(c);
        }
    };
    rec(top);
    std::sort(expect.begin(), expect.end());
    CHECK(S.members == expect);
    for (int m : S.members)
    {
        bool is_min = true;
        for (int c : t.cube(m).children)
            is_min = is_min && !S.contains(c);
        CHECK(is_min == std::binary_search(S.minimal.begin(), S.minimal.end(), m));
    }
}
