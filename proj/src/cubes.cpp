#include "tstlab/cubes.hpp"

#include "tstlab/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tstlab {

double NetHierarchy::radius(int k) const
{
    return scale0 * std::pow(rho, k);
}

double round_scale(double diam, double rho)
{
    if (!(diam > 0))
        return 1;
    int m = static_cast<int>(std::floor(std::log(diam) / std::log(rho)));
    while (std::pow(rho, m) < diam)
        --m;
    while (std::pow(rho, m + 1) >= diam)
        ++m;
    return std::pow(rho, m);
}

namespace {

double cloud_diameter_bound(const PointCloud& c)
{
    if (c.size() <= 20000)
        return c.diameter();
    double best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        best = std::max(best, sq_dist(c.point(0), c.point(i)));
    const Matrix& P = c.points();
    double box = (P.rowwise().maxCoeff() - P.rowwise().minCoeff()).norm();
    return std::min(2 * std::sqrt(best), box);
}

}  // namespace

NetHierarchy build_nets(std::shared_ptr<const PointCloud> cloud, double rho, int k_max,
                        double scale0)
{
    if (!cloud || cloud->empty())
        throw InputError("build_nets: empty cloud");
    if (!(rho > 0 && rho < 1))
        throw InputError("build_nets: rho must lie in (0,1)");
    if (k_max < 0)
        throw InputError("build_nets: k_max must be nonnegative");
    NetHierarchy h;
    h.cloud = cloud;
    h.rho = rho;
    h.scale0 = scale0 > 0 ? scale0 : round_scale(cloud_diameter_bound(*cloud), rho);
    const std::size_t N = cloud->size();
    KdTree tree(cloud->points());
    std::vector<char> covered(N);
    std::vector<std::size_t> prev;
    for (int k = 0; k <= k_max; ++k)
    {
        const double r = h.radius(k);
        const double r2 = r * r;
        std::fill(covered.begin(), covered.end(), 0);
        std::vector<std::size_t> net = prev;
        auto cover = [&](std::size_t c) {
            covered[c] = 1;
            tree.for_each_strictly_within(cloud->point(c), r2,
                                          [&](std::size_t j) { covered[j] = 1; });
        };
        for (auto c : net)
            cover(c);
        for (std::size_t i = 0; i < N; ++i)
        {
            if (covered[i])
                continue;
            net.push_back(i);
            cover(i);
        }
        if (net.size() == N)
            h.saturated = true;
        h.levels.push_back(net);
        prev = std::move(net);
    }
    return h;
}

//---------------------------------------------------------------------------//

CubeTree build_cubes(const NetHierarchy& nets, double c0, bool validate)
{
    if (!(c0 > 0 && 5 * c0 < 0.5))
        throw InputError("build_cubes: c0 must satisfy 0 < 5 c0 < 1/2");
    CubeTree T;
    T.nets = nets;
    T.c0 = c0;
    const PointCloud& E = *nets.cloud;
    const std::size_t N = E.size();
    const int K = nets.k_max();
    KdTree kd(E.points());

    // prot[j][x]: the level-j center whose ball B(z, c0 ell_j) holds x
    std::vector<std::vector<long>> prot(K + 1, std::vector<long>(N, -1));
    for (int j = 0; j <= K; ++j)
    {
        const double rr = c0 * T.ell(j);
        for (auto z : nets.levels[static_cast<std::size_t>(j)])
            for (auto x : kd.within(E.point(z), rr * rr))
            {
                long& slot = prot[j][x];
                if (slot < 0
                    || sq_dist(E.point(x), E.point(z))
                           < sq_dist(E.point(x), E.point(static_cast<std::size_t>(slot))))
                    slot = static_cast<long>(z);
            }
    }

    auto level_tree = [&](int k, Matrix& C) {
        const auto& X = nets.levels[static_cast<std::size_t>(k)];
        C.resize(E.ambient(), static_cast<Eigen::Index>(X.size()));
        for (std::size_t q = 0; q < X.size(); ++q)
            C.col(static_cast<Eigen::Index>(q)) = E.point(X[q]);
        return KdTree(C);
    };

    // lab[k][x]: center of the level-k cube containing x
    std::vector<std::vector<std::size_t>> lab(K + 1, std::vector<std::size_t>(N));
    {
        Matrix C;
        KdTree kc = level_tree(K, C);
        const auto& X = nets.levels[static_cast<std::size_t>(K)];
        for (std::size_t x = 0; x < N; ++x)
            lab[K][x] = prot[K][x] >= 0 ? static_cast<std::size_t>(prot[K][x])
                                        : X[kc.nearest(E.point(x))];
    }
    // Bottom-up: each level-(i+1) cube picks a level-i parent. A cube that
    // meets a protected ball B(z, c0 ell_j), j <= i, is sent to the nearest
    // level-i center inside that ball whose ball B(., ell_i) holds all its
    // points; the finest such level wins. Otherwise the parent is the
    // nearest level-i center.
    for (int i = K - 1; i >= 0; --i)
    {
        Matrix C;
        KdTree kc = level_tree(i, C);
        const auto& X = nets.levels[static_cast<std::size_t>(i)];
        std::vector<std::vector<std::size_t>> groups;
        std::vector<long> group_of(N, -1);
        std::vector<std::size_t> group_center;
        for (std::size_t x = 0; x < N; ++x)
        {
            std::size_t a = lab[i + 1][x];
            if (group_of[a] < 0)
            {
                group_of[a] = static_cast<long>(groups.size());
                groups.emplace_back();
                group_center.push_back(a);
            }
            groups[static_cast<std::size_t>(group_of[a])].push_back(x);
        }
        const double lim = T.ell(i);
        for (std::size_t g = 0; g < groups.size(); ++g)
        {
            const auto& pts = groups[g];
            const std::size_t a = group_center[g];
            long best = -1;
            std::vector<long> cands;
            for (int j = i; j >= 0 && best < 0; --j)
            {
                cands.clear();
                for (auto x : pts)
                    if (prot[j][x] >= 0)
                        cands.push_back(prot[j][x]);
                std::sort(cands.begin(), cands.end());
                cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
                double bd = kInf;
                const double pr = c0 * T.ell(j);
                for (auto z : cands)
                {
                    for (auto q : kc.within(E.point(static_cast<std::size_t>(z)), pr * pr))
                    {
                        const auto zc = E.point(X[q]);
                        double mx = 0;
                        for (auto x : pts)
                            mx = std::max(mx, sq_dist(E.point(x), zc));
                        if (mx > lim * lim)
                            continue;
                        double dz = sq_dist(E.point(a), zc);
                        if (dz < bd || (dz == bd && static_cast<long>(X[q]) < best))
                        {
                            bd = dz;
                            best = static_cast<long>(X[q]);
                        }
                    }
                }
            }
            std::size_t parent = best >= 0 ? static_cast<std::size_t>(best)
                                           : X[kc.nearest(E.point(a))];
            for (auto x : pts)
                lab[i][x] = parent;
        }
    }

    T.by_level.assign(static_cast<std::size_t>(K + 1), {});
    T.point_cube.assign(static_cast<std::size_t>(K + 1) * N, -1);
    std::vector<int> id_of(N, -1);
    for (int k = 0; k <= K; ++k)
    {
        std::vector<std::size_t> centers = nets.levels[static_cast<std::size_t>(k)];
        std::sort(centers.begin(), centers.end());
        for (auto c : centers)
        {
            Cube Q;
            Q.id = static_cast<int>(T.cubes.size());
            Q.level = k;
            Q.center = c;
            if (k > 0)
            {
                Q.parent = id_of[lab[k - 1][c]];
                T.cubes[static_cast<std::size_t>(Q.parent)].children.push_back(Q.id);
            }
            T.by_level[static_cast<std::size_t>(k)].push_back(Q.id);
            T.cubes.push_back(std::move(Q));
        }
        // ids of the previous level are no longer needed once parents are set
        for (auto c : centers)
            id_of[c] = -1;
        for (int id : T.by_level[static_cast<std::size_t>(k)])
            id_of[T.cubes[static_cast<std::size_t>(id)].center] = id;
        for (std::size_t x = 0; x < N; ++x)
        {
            int id = id_of[lab[k][x]];
            T.cubes[static_cast<std::size_t>(id)].members.push_back(x);
            T.point_cube[static_cast<std::size_t>(k) * N + x] = id;
        }
    }

    if (!validate)
        return T;
    auto violations = T.check();
    if (!violations.empty())
        throw CubeConstructionError(violations.front().substr(0, violations.front().find(':')),
                                    "cube construction violated " + violations.front());
    return T;
}

std::vector<int> CubeTree::descendants(int id, int max_level) const
{
    std::vector<int> out{id};
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const Cube& Q = cube(out[i]);
        if (max_level >= 0 && Q.level >= max_level)
            continue;
        for (int c : Q.children)
            out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int CubeTree::cube_of(std::size_t i, int k) const
{
    return point_cube.at(static_cast<std::size_t>(k) * cloud().size() + i);
}

bool CubeTree::is_ancestor(int a, int b) const
{
    while (b >= 0)
    {
        if (a == b)
            return true;
        b = cube(b).parent;
    }
    return false;
}

std::vector<std::string> CubeTree::check() const
{
    std::vector<std::string> out;
    const PointCloud& E = cloud();
    const std::size_t N = E.size();
    KdTree kd(E.points());
    for (int k = 0; k <= depth(); ++k)
    {
        std::vector<int> seen(N, -1);
        for (int id : by_level[k])
        {
            const Cube& Q = cube(id);
            for (auto x : Q.members)
            {
                if (seen[x] >= 0)
                {
                    std::ostringstream os;
                    os << "partition: point " << x << " lies in cubes " << seen[x] << " and " << id;
                    out.push_back(os.str());
                }
                seen[x] = id;
            }
            const double l = ell(k);
            for (auto x : Q.members)
                if (sq_dist(E.point(x), E.point(Q.center)) > l * l)
                {
                    std::ostringstream os;
                    os << "outer ball: point " << x << " of cube " << id << " lies outside B_Q";
                    out.push_back(os.str());
                    break;
                }
            const double rr = c0 * l;
            for (auto x : kd.within(E.point(Q.center), rr * rr))
                if (!std::binary_search(Q.members.begin(), Q.members.end(), x))
                {
                    std::ostringstream os;
                    os << "inner ball: point " << x << " near center of cube " << id
                       << " is not a member";
                    out.push_back(os.str());
                    break;
                }
            if (Q.parent >= 0)
            {
                const Cube& P = cube(Q.parent);
                for (auto x : Q.members)
                    if (!std::binary_search(P.members.begin(), P.members.end(), x))
                    {
                        std::ostringstream os;
                        os << "nesting: cube " << id << " is not contained in its parent";
                        out.push_back(os.str());
                        break;
                    }
            }
        }
        for (std::size_t x = 0; x < N; ++x)
            if (seen[x] < 0)
            {
                std::ostringstream os;
                os << "cover: point " << x << " is in no level-" << k << " cube";
                out.push_back(os.str());
                break;
            }
    }
    return out;
}

//---------------------------------------------------------------------------//

double dist_point_cube(const Point& x, const CubeTree& tree, const Cube& R)
{
    double best = kInf;
    for (auto i : R.members)
        best = std::min(best, sq_dist(tree.cloud().point(i), x));
    return std::sqrt(best);
}

double dist_cubes(const CubeTree& tree, const Cube& Q, const Cube& R)
{
    double best = kInf;
    for (auto i : Q.members)
        for (auto j : R.members)
            best = std::min(best, sq_dist(tree.cloud().point(i), tree.cloud().point(j)));
    return std::sqrt(best);
}

double cube_distance(const Point& x, const CubeTree& tree, const std::vector<int>& C)
{
    double best = kInf;
    for (int id : C)
    {
        const Cube& R = tree.cube(id);
        best = std::min(best, tree.ell(R) + dist_point_cube(x, tree, R));
    }
    return best;
}

double cube_distance(const Cube& Q, const CubeTree& tree, const std::vector<int>& C)
{
    double best = kInf;
    for (int id : C)
    {
        const Cube& R = tree.cube(id);
        best = std::min(best, tree.ell(R) + dist_cubes(tree, Q, R));
    }
    return best;
}

//---------------------------------------------------------------------------//

bool StoppingTimeRegion::contains(int id) const
{
    return std::binary_search(members.begin(), members.end(), id);
}

StoppingTimeRegion build_stopping_time(const CubeTree& tree, int top,
                                       const std::function<bool(const Cube&)>& keep)
{
    StoppingTimeRegion S;
    S.top = top;
    std::vector<int> queue{top};
    for (std::size_t i = 0; i < queue.size(); ++i)
    {
        const Cube& Q = tree.cube(queue[i]);
        bool all = !Q.children.empty();
        for (int c : Q.children)
            if (!keep(tree.cube(c)))
            {
                all = false;
                break;
            }
        if (all)
            for (int c : Q.children)
                queue.push_back(c);
        else
            S.minimal.push_back(Q.id);
    }
    S.members = queue;
    std::sort(S.members.begin(), S.members.end());
    std::sort(S.minimal.begin(), S.minimal.end());
    const Cube& T = tree.cube(top);
    std::vector<char> stopped(tree.cloud().size(), 0);
    for (int m : S.minimal)
        for (auto x : tree.cube(m).members)
            stopped[x] = 1;
    for (auto x : T.members)
        if (!stopped[x])
            S.residual.push_back(x);
    return S;
}

void write_cubes(std::ostream& os, const CubeTree& tree)
{
    os.precision(17);
    for (const Cube& Q : tree.cubes)
    {
        os << Q.level << ' ' << Q.id;
        auto c = tree.cloud().point(Q.center);
        for (Eigen::Index i = 0; i < c.size(); ++i)
            os << ' ' << c[i];
        os << ' ' << Q.parent << ' ' << Q.members.size() << '\n';
    }
}

}  // namespace tstlab
