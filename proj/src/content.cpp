#include "tstlab/content.hpp"

#include "tstlab/cubes.hpp"
#include "tstlab/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace tstlab {

namespace {
constexpr int kExactCell = 32;

double ipow(double x, double d)
{
    if (d == 1)
        return x;
    if (d == 2)
        return x * x;
    if (d == 3)
        return x * x * x;
    return std::pow(x, d);
}
}  // namespace

ContentEstimator::ContentEstimator(const PointCloud& base, double d, double rho)
    : pts_(base.points()), d_(d), h_(base.resolution())
{
    if (!(d > 0))
        throw InputError("content dimension must be positive");
    const std::size_t N = size();
    if (N == 0)
        return;

    auto add_level = [&](std::vector<std::size_t> centers) {
        Level L;
        L.centers = std::move(centers);
        L.cell_of.assign(N, 0);
        if (L.centers.size() > 1)
        {
            Matrix C(pts_.rows(), static_cast<Eigen::Index>(L.centers.size()));
            for (std::size_t q = 0; q < L.centers.size(); ++q)
                C.col(static_cast<Eigen::Index>(q)) = pts_.col(static_cast<Eigen::Index>(L.centers[q]));
            KdTree kc(C);
            for (std::size_t x = 0; x < N; ++x)
                L.cell_of[x] = static_cast<int>(kc.nearest(pts_.col(static_cast<Eigen::Index>(x))));
        }
        std::vector<int> counts(L.centers.size(), 0);
        for (int c : L.cell_of)
            ++counts[static_cast<std::size_t>(c)];
        L.exact.resize(L.centers.size());
        L.offset.resize(L.centers.size());
        std::size_t off = 0;
        for (std::size_t c = 0; c < counts.size(); ++c)
        {
            L.exact[c] = counts[c] <= kExactCell;
            L.offset[c] = off;
            off += static_cast<std::size_t>(counts[c]);
        }
        levels_.push_back(std::move(L));
    };

    // whole set as one cell
    add_level({0});
    if (N == 1)
        return;
    auto cloud = std::make_shared<PointCloud>(pts_, h_);
    // levels until every point is its own net point
    int k_max = 0;
    {
        double diam_bound = 0;
        for (std::size_t i = 1; i < N; ++i)
            diam_bound = std::max(diam_bound, sq_dist(pts_.col(0), pts_.col(static_cast<Eigen::Index>(i))));
        diam_bound = 2 * std::sqrt(diam_bound);
        double minsep = kInf;
        KdTree kd(pts_);
        for (std::size_t i = 0; i < N; ++i)
        {
            double s;
            kd.nearest(pts_.col(static_cast<Eigen::Index>(i)), &s, i);
            minsep = std::min(minsep, s);
        }
        minsep = std::sqrt(minsep);
        if (minsep > 0)
            k_max = static_cast<int>(std::ceil(std::log(minsep / diam_bound) / std::log(rho))) + 2;
        k_max = std::clamp(k_max, 1, 60);
    }
    NetHierarchy nets = build_nets(cloud, rho, k_max);
    for (const auto& lvl : nets.levels)
    {
        if (levels_.size() > 1 && lvl.size() == levels_.back().centers.size())
            continue;
        add_level(lvl);
        if (lvl.size() == N)
            break;
    }
}

ContentEstimator::Accumulator::Accumulator(const ContentEstimator& est) : est_(&est)
{
    const auto n = est.pts_.rows();
    levels_.resize(est.levels_.size());
    sums_.assign(est.levels_.size(), 0.0);
    for (std::size_t l = 0; l < est.levels_.size(); ++l)
    {
        const auto cells = static_cast<Eigen::Index>(est.levels_[l].centers.size());
        levels_[l].cells.resize(static_cast<std::size_t>(cells));
        levels_[l].lo.resize(n, cells);
        levels_[l].hi.resize(n, cells);
        levels_[l].slots.resize(est.size());
    }
}

double ContentEstimator::Accumulator::term_of(const CellState& c, const LevelState& s,
                                              std::size_t ci, bool exact) const
{
    if (c.count == 0)
        return 0;
    double diam;
    if (exact)
        diam = std::sqrt(c.max_pair_sq);
    else
    {
        const auto k = static_cast<Eigen::Index>(ci);
        diam = std::min(std::sqrt((s.hi.col(k) - s.lo.col(k)).squaredNorm()),
                        2 * std::sqrt(c.max_center_sq));
    }
    return ipow(diam + est_->h_, est_->d_);
}

void ContentEstimator::Accumulator::insert(std::size_t i)
{
    const auto x = est_->pts_.col(static_cast<Eigen::Index>(i));
    for (std::size_t l = 0; l < levels_.size(); ++l)
    {
        const Level& L = est_->levels_[l];
        LevelState& S = levels_[l];
        const auto ci = static_cast<std::size_t>(L.cell_of[i]);
        const auto k = static_cast<Eigen::Index>(ci);
        CellState& c = S.cells[ci];
        const bool exact = L.exact[ci];
        if (c.count == 0)
        {
            S.lo.col(k) = x;
            S.hi.col(k) = x;
        }
        else
        {
            S.lo.col(k) = S.lo.col(k).cwiseMin(x);
            S.hi.col(k) = S.hi.col(k).cwiseMax(x);
        }
        c.max_center_sq = std::max(
            c.max_center_sq, sq_dist(x, est_->pts_.col(static_cast<Eigen::Index>(L.centers[ci]))));
        if (exact)
        {
            const std::size_t off = L.offset[ci];
            for (int q = 0; q < c.count; ++q)
            {
                const auto j = S.slots[off + static_cast<std::size_t>(q)];
                c.max_pair_sq = std::max(c.max_pair_sq,
                                         sq_dist(x, est_->pts_.col(static_cast<Eigen::Index>(j))));
            }
            S.slots[off + static_cast<std::size_t>(c.count)] = i;
        }
        ++c.count;
        double t = term_of(c, S, ci, exact);
        sums_[l] += t - c.term;
        c.term = t;
    }
    ++inserted_;
}

double ContentEstimator::Accumulator::value() const
{
    if (inserted_ == 0)
        return 0;
    return sums_[static_cast<std::size_t>(best_level())];
}

int ContentEstimator::Accumulator::best_level() const
{
    int best = 0;
    for (std::size_t l = 1; l < sums_.size(); ++l)
        if (sums_[l] < sums_[static_cast<std::size_t>(best)])
            best = static_cast<int>(l);
    return best;
}

double ContentEstimator::value(const std::vector<std::size_t>& subset) const
{
    Accumulator acc(*this);
    for (auto i : subset)
        acc.insert(i);
    return acc.value();
}

double ContentEstimator::value_all() const
{
    std::vector<std::size_t> all(size());
    std::iota(all.begin(), all.end(), 0);
    return value(all);
}

ContentEstimate ContentEstimator::estimate(const std::vector<std::size_t>& subset) const
{
    ContentEstimate out;
    out.d = d_;
    out.resolution = h_;
    if (subset.empty())
        return out;
    Accumulator acc(*this);
    for (auto i : subset)
        acc.insert(i);
    const auto l = static_cast<std::size_t>(acc.best_level());
    out.value = 0;
    for (std::size_t c = 0; c < acc.levels_[l].cells.size(); ++c)
    {
        const auto& st = acc.levels_[l].cells[c];
        if (st.count == 0)
            continue;
        double diam = std::pow(st.term, 1.0 / d_);
        out.cover.emplace_back(
            Point(pts_.col(static_cast<Eigen::Index>(levels_[l].centers[c]))),
            std::max(diam / 2, std::numeric_limits<double>::min()));
        out.value += st.term;
    }
    return out;
}

ContentEstimate hausdorff_content(const PointCloud& cloud, double d, const Ball& B)
{
    auto idx = cloud.indices_in(B);
    if (idx.empty())
    {
        ContentEstimate e;
        e.d = d;
        e.resolution = cloud.resolution();
        return e;
    }
    PointCloud sub = cloud.subset(idx);
    ContentEstimator est(sub, d);
    std::vector<std::size_t> all(sub.size());
    std::iota(all.begin(), all.end(), 0);
    return est.estimate(all);
}

double choquet_integral(const ContentEstimator& est, const std::vector<double>& f, double p,
                        ChoquetRange range)
{
    if (f.size() != est.size())
        throw InputError("choquet_integral: function size does not match the base set");
    if (!(p > 0))
        throw InputError("choquet_integral: p must be positive");
    for (double v : f)
        if (!(v >= 0) || !std::isfinite(v))
            throw InputError("choquet_integral: f must be finite and nonnegative");
    std::vector<std::size_t> order(f.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
    auto clip = [&](double v) { return range == ChoquetRange::unit ? std::min(v, 1.0) : v; };
    ContentEstimator::Accumulator acc(est);
    double total = 0;
    std::size_t i = 0;
    while (i < order.size())
    {
        const double u = f[order[i]];
        if (u <= 0)
            break;
        while (i < order.size() && f[order[i]] == u)
            acc.insert(order[i++]);
        const double next = i < order.size() ? std::max(f[order[i]], 0.0) : 0.0;
        const double hi = clip(u), lo = clip(next);
        if (hi > lo)
            total += acc.value() * (std::pow(hi, p) - std::pow(lo, p)) / p;
    }
    return total;
}

double choquet_integral(const std::vector<double>& f, const PointCloud& E, const Ball& B,
                        double d, double p, ChoquetRange range)
{
    if (f.size() != E.size())
        throw InputError("choquet_integral: function size does not match the cloud");
    auto idx = E.indices_in(B);
    if (idx.empty())
        return 0;
    PointCloud sub = E.subset(idx);
    ContentEstimator est(sub, d);
    std::vector<double> g(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        g[i] = f[idx[i]];
    return choquet_integral(est, g, p, range);
}

double critical_exponent(double d)
{
    return d > 2 ? 2 * d / (d - 2) : kInf;
}

}  // namespace tstlab
