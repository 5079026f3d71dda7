#include "tstlab/reifenberg.hpp"

#include "tstlab/beta.hpp"
#include "tstlab/content.hpp"
#include "tstlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace tstlab {

double CCBP::r(int k)
{
    return std::pow(10.0, -k);
}

CcbpIndex::CcbpIndex(const CCBP& c) : c_(&c)
{
    const int n = c.ambient();
    pts_.reserve(c.layers.size());
    for (const auto& layer : c.layers)
    {
        Matrix m(n, static_cast<Eigen::Index>(layer.centers.size()));
        for (std::size_t j = 0; j < layer.centers.size(); ++j)
            m.col(static_cast<Eigen::Index>(j)) = layer.centers[j];
        pts_.push_back(std::move(m));
    }
    trees_.reserve(pts_.size());
    for (const auto& m : pts_)
        trees_.emplace_back(m);
}

std::vector<std::size_t> CcbpIndex::within(int k, const Point& x, double radius) const
{
    if (k < 0 || k >= static_cast<int>(trees_.size()) || pts_[k].cols() == 0)
        return {};
    return trees_[k].within(x, radius * radius * (1 + 1e-12));
}

std::size_t CcbpIndex::nearest(int k, const Point& x, double* dist) const
{
    double q = 0;
    std::size_t j = trees_.at(static_cast<std::size_t>(k)).nearest(x, &q);
    if (dist)
        *dist = std::sqrt(q);
    return j;
}

double CcbpIndex::pair(int k, std::size_t j, int l, std::size_t i)
{
    std::uint64_t key = (static_cast<std::uint64_t>(k) << 58) | (static_cast<std::uint64_t>(l) << 52) |
                        (static_cast<std::uint64_t>(j) << 26) | static_cast<std::uint64_t>(i);
    auto it = memo_.find(key);
    if (it != memo_.end())
        return it->second;
    const auto& Pj = c_->layers[k].planes[j];
    const auto& Pi = c_->layers[l].planes[i];
    const Point& xi = c_->layers[l].centers[i];
    Ball B(xi, 1e4 * CCBP::r(l));
    double v;
    try
    {
        v = local_plane_distance(Pj, Pi, B);
    }
    catch (const OneSidedUndefined&)
    {
        v = Pj.dist(xi) / B.radius;
    }
    memo_.emplace(key, v);
    return v;
}

namespace {

std::string where(int k, long j)
{
    std::ostringstream os;
    os << "layer " << k << ", center " << j;
    return os.str();
}

void check_shapes(const CCBP& c)
{
    const int d = c.dim(), n = c.ambient();
    if (d < 1 || n <= d - 1)
        throw InputError("CCBP: P0 must be a d-plane with 1 <= d <= n");
    for (std::size_t k = 0; k < c.layers.size(); ++k)
    {
        const auto& L = c.layers[k];
        if (L.centers.size() != L.planes.size())
            throw InputError("CCBP: layer " + std::to_string(k) + " has mismatched centers and planes");
        if (L.centers.size() >= (std::size_t{1} << 26))
            throw InputError("CCBP: layer too large");
        for (std::size_t j = 0; j < L.centers.size(); ++j)
            if (L.centers[j].size() != n || L.planes[j].dim() != d || L.planes[j].ambient() != n)
                throw InputError("CCBP: dimension mismatch at " + where(static_cast<int>(k), static_cast<long>(j)));
    }
}

double eps_generic(CcbpIndex& idx, int k, const Point& x, double F)
{
    const CCBP& c = idx.ccbp();
    auto J = idx.within(k, x, F * CCBP::r(k));
    if (J.empty())
        return 0;
    double best = 0;
    for (int l = std::max(0, k - 2); l <= std::min(c.num_layers() - 1, k + 2); ++l)
    {
        auto I = idx.within(l, x, F * CCBP::r(l));
        for (auto j : J)
            for (auto i : I)
                best = std::max(best, idx.pair(k, j, l, i));
    }
    return best;
}

}  // namespace

double epsilon_k(CcbpIndex& idx, int k, const Point& x)
{
    return eps_generic(idx, k, x, 100);
}

double epsilon_prime_k(CcbpIndex& idx, int k, const Point& x)
{
    return eps_generic(idx, k, x, 10);
}

EpsilonProfile validate_ccbp(const CCBP& c, double eps)
{
    if (!(eps > 0))
        throw InputError("validate_ccbp: eps must be positive");
    check_shapes(c);
    CcbpIndex idx(c);
    const int K = c.num_layers();

    for (int k = 0; k < K; ++k)
    {
        const auto& L = c.layers[k];
        const double rk = CCBP::r(k);
        for (std::size_t j = 0; j < L.centers.size(); ++j)
        {
            const Point& x = L.centers[j];
            if (L.planes[j].dist(x) > 1e-8 * (1 + x.norm()))
                throw CcbpError("center-on-plane", k, static_cast<long>(j), static_cast<long>(j),
                                "center-on-plane violated at " + where(k, static_cast<long>(j)));
            for (auto i : idx.within(k, x, rk))
                if (i != j && (L.centers[i] - x).norm() < rk)
                    throw CcbpError("separation", k, static_cast<long>(std::min(i, j)),
                                    static_cast<long>(std::max(i, j)),
                                    "separation violated in layer " + std::to_string(k) + " between centers " +
                                        std::to_string(std::min(i, j)) + " and " + std::to_string(std::max(i, j)));
            if (k > 0)
            {
                if (c.layers[k - 1].centers.empty())
                    throw CcbpError("layer-descent", k, static_cast<long>(j), -1,
                                    "layer-descent violated at " + where(k, static_cast<long>(j)) +
                                        ": previous layer is empty");
                double dist = 0;
                std::size_t i = idx.nearest(k - 1, x, &dist);
                if (dist > 2 * CCBP::r(k - 1) * (1 + 1e-12))
                    throw CcbpError("layer-descent", k, static_cast<long>(j), static_cast<long>(i),
                                    "layer-descent violated at " + where(k, static_cast<long>(j)) +
                                        ": not in V^2 of layer " + std::to_string(k - 1));
            }
        }
    }

    EpsilonProfile out;
    if (K > 0)
    {
        const auto& L0 = c.layers[0];
        for (std::size_t j = 0; j < L0.centers.size(); ++j)
        {
            out.cond2 = std::max(out.cond2, c.P0.dist(L0.centers[j]));
            out.cond4 = std::max(out.cond4, local_plane_distance(L0.planes[j], c.P0, Ball(L0.centers[j], 100)));
        }
    }
    for (int k = 0; k < K; ++k)
    {
        const auto& L = c.layers[k];
        const double rk = CCBP::r(k);
        for (std::size_t j = 0; j < L.centers.size(); ++j)
        {
            for (auto i : idx.within(k, L.centers[j], 100 * rk))
                if (i != j)
                    out.cond3 = std::max(
                        out.cond3, local_plane_distance(L.planes[i], L.planes[j], Ball(L.centers[j], 100 * rk)));
            if (k + 1 < K)
                for (auto i : idx.within(k + 1, L.centers[j], 2 * rk))
                    out.cond5 = std::max(out.cond5, local_plane_distance(L.planes[j], c.layers[k + 1].planes[i],
                                                                         Ball(L.centers[j], 20 * rk)));
        }
    }
    out.eps.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
    {
        const auto& L = c.layers[k];
        out.eps[k].resize(L.centers.size());
        for (std::size_t j = 0; j < L.centers.size(); ++j)
        {
            out.eps[k][j] = epsilon_k(idx, k, L.centers[j]);
            out.profile_max = std::max(out.profile_max, out.eps[k][j]);
        }
    }
    out.valid = out.profile_max < eps && out.cond2 <= eps && out.cond3 <= eps && out.cond4 <= eps &&
                out.cond5 <= eps;
    return out;
}

double bump(double s)
{
    if (s <= 8)
        return 1;
    if (s >= 10)
        return 0;
    double u = (10 - s) / 2;
    return u * u * u * (10 - 15 * u + 6 * u * u);
}

PartitionValue partition_of_unity(const CcbpIndex& idx, int k, const Point& y)
{
    PartitionValue out;
    const CCBP& c = idx.ccbp();
    if (k < 0 || k >= c.num_layers())
        return out;
    const double rk = CCBP::r(k);
    double Phi = 0;
    for (auto j : idx.within(k, y, 10 * rk))
    {
        double phi = bump((y - c.layers[k].centers[j]).norm() / rk);
        if (phi > 0)
        {
            out.weights.emplace_back(j, phi);
            Phi += phi;
        }
    }
    if (Phi == 0)
        return out;
    double gap = std::max(0.0, 1 - Phi);
    double m = Phi + gap * gap * gap;
    double sum = 0;
    for (auto& w : out.weights)
    {
        w.second /= m;
        sum += w.second;
    }
    out.psi = 1 - sum;
    return out;
}

Point sigma_k(const CcbpIndex& idx, int k, const Point& y)
{
    auto pv = partition_of_unity(idx, k, y);
    if (pv.weights.empty())
        return y;
    Point disp = Point::Zero(y.size());
    for (const auto& [j, th] : pv.weights)
        disp += th * (idx.ccbp().layers[k].planes[j].project(y) - y);
    return y + disp;
}

SurfaceIterate iterate(const CCBP& c, double h, int K, double extent)
{
    if (!(h > 0))
        throw InputError("iterate: grid pitch must be positive");
    if (K < 0)
        throw InputError("iterate: K must be non-negative");
    check_shapes(c);
    const int d = c.dim();
    if (!(extent > 0))
    {
        extent = 1;
        if (!c.layers.empty())
            for (const auto& x : c.layers[0].centers)
                extent = std::max(extent, c.P0.coords(x).cwiseAbs().maxCoeff());
        extent += 12;
    }
    SurfaceIterate s;
    s.d = d;
    s.h = h;
    const long per = static_cast<long>(std::floor(2 * extent / h + 1e-9)) + 1;
    double total = std::pow(static_cast<double>(per), d);
    if (total > 5e7)
        throw InputError("iterate: lattice too large; increase h or reduce extent");
    s.shape.assign(static_cast<std::size_t>(d), per);
    const auto G = static_cast<Eigen::Index>(total);
    s.coords.resize(d, G);
    for (Eigen::Index g = 0; g < G; ++g)
    {
        Eigen::Index rem = g;
        for (int a = 0; a < d; ++a)
        {
            s.coords(a, g) = -extent + h * static_cast<double>(rem % per);
            rem /= per;
        }
    }
    Matrix f0(c.ambient(), G);
    for (Eigen::Index g = 0; g < G; ++g)
        f0.col(g) = c.P0.at(s.coords.col(g));
    s.images.push_back(std::move(f0));

    CcbpIndex idx(c);
    const int last = std::min(K, c.num_layers());
    for (int k = 0; k < last; ++k)
    {
        const double rk = CCBP::r(k);
        if (10 * rk < h / 10)
            break;
        const Matrix& prev = s.images.back();
        Matrix next(prev.rows(), G);
        std::vector<double> disp(static_cast<std::size_t>(G), 0.0);
        parallel_for(static_cast<std::size_t>(G), [&](std::size_t g) {
            auto e = static_cast<Eigen::Index>(g);
            Point y = prev.col(e);
            Point z = sigma_k(idx, k, y);
            next.col(e) = z;
            disp[g] = (z - y).norm();
        });
        double sup = disp.empty() ? 0 : *std::max_element(disp.begin(), disp.end());
        if (sup > 10 * rk * (1 + 1e-12))
            throw DisplacementViolation("iterate: |f_" + std::to_string(k + 1) + " - f_" + std::to_string(k) +
                                        "| exceeds 10 r_k");
        s.displacement.push_back(sup);
        s.images.push_back(std::move(next));
    }
    return s;
}

namespace {

std::vector<long> strides(const SurfaceIterate& s)
{
    std::vector<long> st(s.shape.size(), 1);
    for (std::size_t a = 1; a < s.shape.size(); ++a)
        st[a] = st[a - 1] * s.shape[a - 1];
    return st;
}

//! Lattice index pairs at log-uniform separations in [h, 1].
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(const SurfaceIterate& s, int count,
                                                              std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto G = static_cast<long>(s.size());
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (G < 2)
        return out;
    auto st = strides(s);
    std::uniform_int_distribution<long> pick(0, G - 1);
    std::uniform_real_distribution<double> u(0, 1);
    std::normal_distribution<double> nrm;
    const double top = std::max(1.0, 1 / s.h);
    int tries = 0;
    while (static_cast<int>(out.size()) < count && tries < 20 * count)
    {
        ++tries;
        long a = pick(rng);
        double steps = std::exp(u(rng) * std::log(top));
        Eigen::VectorXd dir(s.d);
        for (int i = 0; i < s.d; ++i)
            dir[i] = nrm(rng);
        if (dir.norm() == 0)
            continue;
        dir *= steps / dir.norm();
        long b = 0, rem = a;
        bool ok = true;
        for (int i = 0; i < s.d; ++i)
        {
            long ia = rem % s.shape[i];
            rem /= s.shape[i];
            long ib = ia + std::lround(dir[i]);
            if (ib < 0 || ib >= s.shape[i])
            {
                ok = false;
                break;
            }
            b += ib * st[i];
        }
        if (!ok || b == a)
            continue;
        out.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
    return out;
}

double neighbour_spacing(const Matrix& img, const SurfaceIterate& s)
{
    auto st = strides(s);
    double best = 0;
    const auto G = static_cast<long>(s.size());
    for (long g = 0; g < G; ++g)
    {
        long rem = g;
        for (int a = 0; a < s.d; ++a)
        {
            long ia = rem % s.shape[a];
            rem /= s.shape[a];
            if (ia + 1 < s.shape[a])
                best = std::max(best, (img.col(g + st[a]) - img.col(g)).norm());
        }
    }
    return best;
}

}  // namespace

bool CertificateReport::pass() const
{
    return std::all_of(items.begin(), items.end(), [](const auto& it) { return it.pass; });
}

const CertificateItem& CertificateReport::at(const std::string& item) const
{
    for (const auto& it : items)
        if (it.item == item)
            return it;
    throw InputError("certificate item " + item + " not present");
}

CertificateReport certify(const SurfaceIterate& s, const CCBP& c, const CertifyOptions& opt)
{
    if (!(opt.eps > 0))
        throw InputError("certify: eps must be positive");
    if (s.images.empty())
        throw InputError("certify: empty surface");
    CertificateReport rep;
    rep.eps = opt.eps;
    CcbpIndex idx(c);
    const Matrix& f = s.surface();
    const Matrix& z0 = s.images.front();
    const auto G = static_cast<Eigen::Index>(s.size());
    std::mt19937_64 rng(opt.seed);

    {
        CertificateItem it;
        it.item = "2";
        it.description = "f is the identity outside the layer-0 balls 10B_{j,0}";
        double sup = 0;
        for (Eigen::Index g = 0; g < G; ++g)
        {
            bool far = c.layers.empty() || idx.within(0, z0.col(g), 10).empty();
            if (far)
                sup = std::max(sup, (f.col(g) - z0.col(g)).norm());
        }
        it.measured = sup;
        it.constant = sup;
        it.ceiling = 0;
        it.pass = sup == 0;
        rep.items.push_back(it);
    }
    {
        CertificateItem it;
        it.item = "3";
        it.description = "Hölder exponent defect tau from log-log pair fit";
        auto pairs = sample_pairs(s, opt.pairs, opt.seed + 1);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::vector<std::pair<double, double>> dist;
        for (auto [a, b] : pairs)
        {
            double dx = (z0.col(static_cast<Eigen::Index>(a)) - z0.col(static_cast<Eigen::Index>(b))).norm();
            double df = (f.col(static_cast<Eigen::Index>(a)) - f.col(static_cast<Eigen::Index>(b))).norm();
            if (dx <= 0 || dx > 1 || df <= 0)
                continue;
            dist.emplace_back(dx, df);
            double lx = std::log(dx), ly = std::log(df);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        double n = static_cast<double>(dist.size());
        double tau = 0;
        if (n >= 2 && n * sxx - sx * sx > 0)
            tau = std::abs((n * sxy - sx * sy) / (n * sxx - sx * sx) - 1);
        double lo = kInf, hi = 0;
        for (auto [dx, df] : dist)
        {
            lo = std::min(lo, df / (0.25 * std::pow(dx, 1 + tau)));
            hi = std::max(hi, df / (10 * std::pow(dx, 1 - tau)));
        }
        it.measured = tau;
        it.constant = tau;
        it.ceiling = opt.ceil_tau;
        it.per_level = {dist.empty() ? 0 : lo, hi};
        it.pass = tau <= opt.ceil_tau && (dist.empty() || (lo >= 1 && hi <= 1));
        rep.items.push_back(it);
    }
    {
        CertificateItem it;
        it.item = "4";
        it.description = "sup |f(z) - z| over the lattice";
        double sup = 0;
        for (Eigen::Index g = 0; g < G; ++g)
            sup = std::max(sup, (f.col(g) - z0.col(g)).norm());
        it.measured = sup;
        it.constant = sup / opt.eps;
        it.ceiling = opt.ceil_f_id;
        it.pass = it.constant <= it.ceiling;
        rep.items.push_back(it);
    }
    const double hs = std::max(neighbour_spacing(f, s), s.h);
    PointCloud sigma(f, hs);
    KdTree sigma_index(sigma.points());
    // centers at least 1 away from the lattice boundary, so B(z, t) sees no edge
    std::vector<Eigen::Index> interior;
    {
        const double edge = s.coords.cwiseAbs().maxCoeff() - 1;
        for (Eigen::Index g = 0; g < G; ++g)
            if (s.coords.col(g).cwiseAbs().maxCoeff() <= edge)
                interior.push_back(g);
        if (interior.empty())
            for (Eigen::Index g = 0; g < G; ++g)
                interior.push_back(g);
    }
    std::uniform_int_distribution<std::size_t> pick_i(0, interior.size() - 1);
    auto pick = [&](std::mt19937_64& r) { return interior[pick_i(r)]; };
    std::uniform_real_distribution<double> u(0, 1);
    const double tmin = 20 * hs;
    {
        CertificateItem it;
        it.item = "9";
        it.description = "Reifenberg flatness: inf_P d_{z,t}(Sigma, P) over sampled (z, t)";
        double sup = 0;
        if (tmin < 1)
        {
            BetaOptions bo;
            bo.index = &sigma_index;
            bo.max_points = 256;
            for (int q = 0; q < opt.flatness_samples; ++q)
            {
                Point z = f.col(pick(rng));
                double t = tmin * std::exp(u(rng) * std::log(1 / tmin));
                sup = std::max(sup, bbeta(sigma, Ball(z, t), c.dim(), bo).value);
            }
        }
        it.measured = sup;
        it.constant = sup / opt.eps;
        it.ceiling = opt.ceil_flat;
        it.pass = it.constant <= it.ceiling;
        rep.items.push_back(it);
    }
    {
        CertificateItem it;
        it.item = "10";
        it.description = "sup |sigma_k(y) - y| / r_k on Sigma_k";
        double sup = 0;
        for (std::size_t k = 0; k < s.displacement.size(); ++k)
        {
            double v = s.displacement[k] / CCBP::r(static_cast<int>(k));
            it.per_level.push_back(v);
            sup = std::max(sup, v);
        }
        it.measured = sup;
        it.constant = sup / opt.eps;
        it.ceiling = opt.ceil_sigma;
        it.pass = it.constant <= it.ceiling;
        rep.items.push_back(it);
    }
    {
        CertificateItem it;
        it.item = "11";
        it.description = "sup |sigma_k(y) - pi_{i,k}(y)| / (eps_k(y) r_k) on Sigma_k ∩ V^8_k";
        double sup = 0;
        const int applied = s.layers_applied();
        const Eigen::Index stride = std::max<Eigen::Index>(1, G / std::max(1, opt.sigma_samples));
        for (int k = 0; k < applied; ++k)
        {
            const double rk = CCBP::r(k);
            double lev = 0;
            const Matrix& img = s.images[static_cast<std::size_t>(k)];
            const Matrix& nxt = s.images[static_cast<std::size_t>(k) + 1];
            for (Eigen::Index g = 0; g < G; g += stride)
            {
                Point y = img.col(g);
                double dist = 0;
                if (c.layers[k].centers.empty())
                    break;
                std::size_t i = idx.nearest(k, y, &dist);
                if (dist > 8 * rk)
                    continue;
                double num = (Point(nxt.col(g)) - c.layers[k].planes[i].project(y)).norm();
                double e = epsilon_k(idx, k, y);
                double v = 0;
                if (e > 0)
                    v = num / (e * rk);
                else if (num > 1e-12 * (1 + y.norm()))
                    v = kInf;
                lev = std::max(lev, v);
            }
            it.per_level.push_back(lev);
            sup = std::max(sup, lev);
        }
        it.measured = sup;
        it.constant = sup;
        it.ceiling = opt.ceil_sigma_pi;
        it.pass = sup <= it.ceiling;
        rep.items.push_back(it);
    }
    {
        CertificateItem it;
        it.item = "13";
        it.description = "inf H^d_inf(Sigma ∩ B(z,t)) / t^d over sampled (z, t)";
        double inf = kInf;
        if (tmin < 1)
            for (int q = 0; q < opt.content_samples; ++q)
            {
                Point z = f.col(pick(rng));
                double t = tmin * std::exp(u(rng) * std::log(1 / tmin));
                inf = std::min(inf, hausdorff_content(sigma, c.dim(), Ball(z, t)).value / std::pow(t, c.dim()));
            }
        if (!std::isfinite(inf))
            inf = 0;
        it.measured = inf;
        it.constant = inf;
        it.ceiling = opt.floor_content;
        it.pass = inf >= opt.floor_content;
        rep.items.push_back(it);
    }
    return rep;
}

GraphFit local_graph_fit(const SurfaceIterate& s, const CCBP& c, int k, std::size_t j)
{
    if (k < 0 || k >= static_cast<int>(s.images.size()) || k >= c.num_layers())
        throw InputError("local_graph_fit: layer " + std::to_string(k) + " not available");
    if (j >= c.layers[k].centers.size())
        throw InputError("local_graph_fit: center index out of range");
    const Matrix& img = s.images[static_cast<std::size_t>(k)];
    const Point& x = c.layers[k].centers[j];
    const AffinePlane& P = c.layers[k].planes[j];
    const Matrix F = P.frame();
    const Matrix N = P.normal_basis();
    const double R = 49 * CCBP::r(k);
    const int d = s.d;
    const auto G = static_cast<long>(s.size());

    std::vector<long> pos(static_cast<std::size_t>(G), -1);
    std::vector<long> members;
    Matrix zt(d, 0), wn(N.cols(), 0);
    std::vector<Eigen::VectorXd> zs, ws;
    for (long g = 0; g < G; ++g)
    {
        Eigen::VectorXd v = img.col(g) - x;
        Eigen::VectorXd z = F.transpose() * v;
        Eigen::VectorXd w = N.transpose() * v;
        if (z.norm() <= R && w.norm() <= R)
        {
            pos[static_cast<std::size_t>(g)] = static_cast<long>(members.size());
            members.push_back(g);
            zs.push_back(z);
            ws.push_back(w);
        }
    }
    GraphFit out;
    out.samples = members.size();
    if (members.size() < static_cast<std::size_t>(d + 2))
        return out;

    auto fail = [&](const std::string& why) {
        throw NotAGraph("not a graph over P_{" + std::to_string(j) + "," + std::to_string(k) + "}: " + why);
    };
    auto st = strides(s);
    int sign = 0;
    double spacing = 0;
    const double tiny = 1e-9 * std::pow(s.h, d);
    for (std::size_t m = 0; m < members.size(); ++m)
    {
        long g = members[m];
        long rem = g;
        Matrix D(d, d);
        bool full = true;
        for (int a = 0; a < d; ++a)
        {
            long ia = rem % s.shape[a];
            rem /= s.shape[a];
            long nb = ia + 1 < s.shape[a] ? pos[static_cast<std::size_t>(g + st[a])] : -1;
            if (nb < 0)
            {
                full = false;
                continue;
            }
            Eigen::VectorXd dz = zs[static_cast<std::size_t>(nb)] - zs[m];
            Eigen::VectorXd dw = ws[static_cast<std::size_t>(nb)] - ws[m];
            D.col(a) = dz;
            spacing = std::max(spacing, std::sqrt(dz.squaredNorm() + dw.squaredNorm()));
            double nz = dz.norm();
            if (nz > 0)
                out.lipschitz = std::max(out.lipschitz, dw.norm() / nz);
            else if (dw.norm() > 0)
                out.lipschitz = kInf;
        }
        if (!full)
            continue;
        double det = D.determinant();
        if (std::abs(det) <= tiny)
            fail("degenerate lattice cell");
        int sg = det > 0 ? 1 : -1;
        if (sign == 0)
            sign = sg;
        else if (sg != sign)
            fail("lattice orientation flips (fold)");
    }
    if (!std::isfinite(out.lipschitz))
        fail("vertical lattice step");

    Matrix zm(d, static_cast<Eigen::Index>(members.size()));
    for (std::size_t m = 0; m < members.size(); ++m)
        zm.col(static_cast<Eigen::Index>(m)) = zs[m];
    KdTree tz(zm);
    out.floor = 2 * spacing;
    for (std::size_t m = 0; m < members.size(); ++m)
    {
        double q = 0;
        std::size_t t = tz.nearest(zs[m], &q, m);
        double gap = (ws[t] - ws[m]).norm() - out.lipschitz * std::sqrt(q);
        out.residual = std::max(out.residual, gap);
    }
    if (out.residual > out.floor)
        fail("two samples over the same base point");
    double q = 0;
    std::size_t c0 = tz.nearest(Eigen::VectorXd::Zero(d), &q);
    out.a_center = ws[c0].norm();
    return out;
}

BilipCertificate bilip_certificate(const SurfaceIterate& s, const CCBP& c, int pairs, std::uint64_t seed)
{
    BilipCertificate out;
    CcbpIndex idx(c);
    const auto G = static_cast<Eigen::Index>(s.size());
    const int applied = s.layers_applied();
    for (Eigen::Index g = 0; g < G; ++g)
    {
        double sum = 0;
        for (int k = 0; k < applied; ++k)
        {
            double e = epsilon_prime_k(idx, k, s.images[static_cast<std::size_t>(k)].col(g));
            sum += e * e;
        }
        out.M = std::max(out.M, sum);
    }
    const Matrix& z0 = s.images.front();
    const Matrix& f = s.surface();
    double lo = kInf, hi = 0;
    for (auto [a, b] : sample_pairs(s, pairs, seed))
    {
        auto ea = static_cast<Eigen::Index>(a), eb = static_cast<Eigen::Index>(b);
        double q = (f.col(ea) - f.col(eb)).norm() / (z0.col(ea) - z0.col(eb)).norm();
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    if (hi > 0)
    {
        out.lower = lo;
        out.upper = hi;
        out.distortion = lo > 0 ? hi / lo : kInf;
    }
    return out;
}

CCBP tilt_chain(int d, int n, const std::vector<double>& tilt)
{
    if (d < 1 || n <= d)
        throw InputError("tilt_chain: need 1 <= d < n");
    CCBP c;
    c.P0 = AffinePlane::coordinate(Point::Zero(n), d);
    for (std::size_t k = 0; k < tilt.size(); ++k)
    {
        Matrix F = Matrix::Zero(n, d);
        for (int a = 1; a < d; ++a)
            F(a, a) = 1;
        F(0, 0) = std::cos(tilt[k]);
        F(d, 0) = std::sin(tilt[k]);
        AffinePlane P = AffinePlane::from_orthonormal(Point::Zero(n), F);
        const double rk = CCBP::r(static_cast<int>(k));
        const int m = 5;
        CcbpLayer L;
        const long total = static_cast<long>(std::pow(2 * m + 1, d));
        for (long g = 0; g < total; ++g)
        {
            Eigen::VectorXd t(d);
            long rem = g;
            for (int a = 0; a < d; ++a)
            {
                t[a] = 2 * rk * static_cast<double>(rem % (2 * m + 1) - m);
                rem /= 2 * m + 1;
            }
            L.centers.push_back(P.at(t));
            L.planes.push_back(P);
        }
        c.layers.push_back(std::move(L));
    }
    return c;
}

TreeCcbp ccbp_from_tree(const CubeTree& tree, const StoppingTimeRegion& S,
                        const std::function<AffinePlane(int)>& witness)
{
    if (S.top < 0 || !S.contains(S.top))
        throw InputError("ccbp_from_tree: stopping-time region without a top cube");
    TreeCcbp out;
    const Cube& top = tree.cube(S.top);
    out.origin = tree.center(top);
    out.unit = tree.ell(top);
    auto norm_point = [&](const Point& y) -> Point { return (y - out.origin) / out.unit; };
    auto norm_plane = [&](const AffinePlane& P) {
        return AffinePlane::from_orthonormal(norm_point(P.base()), P.frame());
    };
    out.ccbp.P0 = norm_plane(witness(S.top));

    std::vector<std::vector<int>> by_level(static_cast<std::size_t>(tree.depth() + 1));
    for (int id : S.members)
        by_level[static_cast<std::size_t>(tree.cube(id).level)].push_back(id);

    for (int k = 0;; ++k)
    {
        const double rk = CCBP::r(k);
        int s = top.level;
        while (s <= tree.depth() && tree.ell(s) / out.unit > rk * (1 + 1e-12))
            ++s;
        if (s > tree.depth())
        {
            out.warnings.push_back("layer " + std::to_string(k) + " below the tree depth; stopping");
            break;
        }
        const auto& cand = by_level[static_cast<std::size_t>(s)];
        if (cand.empty())
        {
            out.warnings.push_back("layer " + std::to_string(k) + " is empty; stopping");
            break;
        }
        CcbpLayer L;
        for (int id : cand)
        {
            Point x = norm_point(tree.center(tree.cube(id)));
            bool ok = true;
            for (const auto& y : L.centers)
                if ((y - x).norm() < rk)
                {
                    ok = false;
                    break;
                }
            if (!ok)
                continue;
            L.centers.push_back(x);
            L.planes.push_back(norm_plane(witness(id)).through(x));
        }
        out.levels.push_back(s);
        out.ccbp.layers.push_back(std::move(L));
    }
    return out;
}

void write_off(std::ostream& os, const SurfaceIterate& s)
{
    if (s.d != 2)
        throw InputError("write_off: needs a two-dimensional surface");
    const Matrix& f = s.surface();
    const long nx = s.shape[0], ny = s.shape[1];
    os.precision(17);
    os << "OFF\n" << f.cols() << ' ' << 2 * (nx - 1) * (ny - 1) << " 0\n";
    for (Eigen::Index g = 0; g < f.cols(); ++g)
    {
        for (int a = 0; a < 3; ++a)
            os << (a ? " " : "") << (a < f.rows() ? f(a, g) : 0.0);
        os << '\n';
    }
    for (long y = 0; y + 1 < ny; ++y)
        for (long x = 0; x + 1 < nx; ++x)
        {
            long a = y * nx + x, b = a + 1, c = a + nx, e = c + 1;
            os << "3 " << a << ' ' << b << ' ' << e << '\n';
            os << "3 " << a << ' ' << e << ' ' << c << '\n';
        }
}

}  // namespace tstlab
