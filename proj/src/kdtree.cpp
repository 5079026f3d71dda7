#include "tstlab/kdtree.hpp"

#include <algorithm>

namespace tstlab {

namespace {
constexpr int kLeaf = 12;
}

KdTree::KdTree(const Matrix& pts) : pts_(&pts)
{
    idx_.resize(static_cast<std::size_t>(pts.cols()));
    for (std::size_t i = 0; i < idx_.size(); ++i)
        idx_[i] = i;
    if (!idx_.empty())
    {
        nodes_.reserve(2 * idx_.size() / kLeaf + 2);
        build(0, static_cast<int>(idx_.size()));
    }
}

int KdTree::build(int lo, int hi)
{
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{lo, hi});
    const auto n = pts_->rows();
    Eigen::VectorXd bmin = Eigen::VectorXd::Constant(n, kInf);
    Eigen::VectorXd bmax = Eigen::VectorXd::Constant(n, -kInf);
    for (int i = lo; i < hi; ++i)
    {
        bmin = bmin.cwiseMin(pts_->col(idx_[i]));
        bmax = bmax.cwiseMax(pts_->col(idx_[i]));
    }
    nodes_[id].bmin = bmin;
    nodes_[id].bmax = bmax;
    if (hi - lo <= kLeaf)
        return id;

    Eigen::Index axis;
    double extent = (bmax - bmin).maxCoeff(&axis);
    if (extent <= 0)
        return id;
    int mid = (lo + hi) / 2;
    std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                         double xa = (*pts_)(axis, a), xb = (*pts_)(axis, b);
                         return xa < xb || (xa == xb && a < b);
                     });
    nodes_[id].axis = static_cast<int>(axis);
    nodes_[id].split = (*pts_)(axis, idx_[mid]);
    int l = build(lo, mid);
    int r = build(mid, hi);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

double KdTree::box_sq(const Node& nd, const Eigen::Ref<const Eigen::VectorXd>& q) const
{
    double s = 0;
    for (Eigen::Index k = 0; k < q.size(); ++k)
    {
        double v = 0;
        if (q[k] < nd.bmin[k])
            v = nd.bmin[k] - q[k];
        else if (q[k] > nd.bmax[k])
            v = q[k] - nd.bmax[k];
        s += v * v;
    }
    return s;
}

std::size_t KdTree::nearest(const Eigen::Ref<const Eigen::VectorXd>& q, double* sq,
                            std::size_t skip) const
{
    std::size_t best = static_cast<std::size_t>(-1);
    double best_sq = kInf;
    if (nodes_.empty())
    {
        if (sq)
            *sq = kInf;
        return best;
    }
    std::vector<std::pair<double, int>> stack{{0.0, 0}};
    while (!stack.empty())
    {
        auto [bd, ni] = stack.back();
        stack.pop_back();
        if (bd > best_sq)
            continue;
        const Node& nd = nodes_[ni];
        if (nd.left < 0)
        {
            for (int i = nd.lo; i < nd.hi; ++i)
            {
                std::size_t j = idx_[i];
                if (j == skip)
                    continue;
                double s = sq_dist(pts_->col(j), q);
                if (s < best_sq || (s == best_sq && j < best))
                {
                    best_sq = s;
                    best = j;
                }
            }
            continue;
        }
        double dl = box_sq(nodes_[nd.left], q);
        double dr = box_sq(nodes_[nd.right], q);
        // push the farther child first so the nearer one is visited next
        if (dl <= dr)
        {
            stack.push_back({dr, nd.right});
            stack.push_back({dl, nd.left});
        }
        else
        {
            stack.push_back({dl, nd.left});
            stack.push_back({dr, nd.right});
        }
    }
    if (sq)
        *sq = best_sq;
    return best;
}

std::vector<std::size_t> KdTree::within(const Eigen::Ref<const Eigen::VectorXd>& q,
                                        double r2) const
{
    std::vector<std::size_t> out;
    if (nodes_.empty())
        return out;
    std::vector<int> stack{0};
    while (!stack.empty())
    {
        const Node& nd = nodes_[stack.back()];
        stack.pop_back();
        if (box_sq(nd, q) > r2)
            continue;
        if (nd.left < 0)
        {
            for (int i = nd.lo; i < nd.hi; ++i)
            {
                std::size_t j = idx_[i];
                if (sq_dist(pts_->col(j), q) <= r2)
                    out.push_back(j);
            }
            continue;
        }
        stack.push_back(nd.left);
        stack.push_back(nd.right);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace tstlab
