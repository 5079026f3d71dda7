#pragma once

#include "tstlab/geometry.hpp"

#include <cstddef>
#include <vector>

namespace tstlab {

//! Static kd-tree over the columns of a point matrix.
class KdTree
{
  public:
    KdTree() = default;
    explicit KdTree(const Matrix& pts);

    std::size_t size() const { return idx_.size(); }

    //! Index of the nearest point (lowest index among ties), and its
    //! squared distance.
    std::size_t nearest(const Eigen::Ref<const Eigen::VectorXd>& q,
                        double* sq = nullptr,
                        std::size_t skip = static_cast<std::size_t>(-1)) const;
    //! Indices with squared distance <= r2 (sorted ascending).
    std::vector<std::size_t> within(const Eigen::Ref<const Eigen::VectorXd>& q,
                                    double r2) const;
    //! Calls f(i) for each index with squared distance < r2 (strict).
    template<class F>
    void for_each_strictly_within(const Eigen::Ref<const Eigen::VectorXd>& q,
                                  double r2, F&& f) const;

  private:
    struct Node
    {
        int lo, hi;
        int axis = -1;
        double split = 0;
        int left = -1, right = -1;
        Eigen::VectorXd bmin, bmax;
    };

    int build(int lo, int hi);
    double box_sq(const Node& nd, const Eigen::Ref<const Eigen::VectorXd>& q) const;

    const Matrix* pts_ = nullptr;
    std::vector<std::size_t> idx_;
    std::vector<Node> nodes_;
};

template<class F>
void KdTree::for_each_strictly_within(const Eigen::Ref<const Eigen::VectorXd>& q,
                                      double r2, F&& f) const
{
    if (nodes_.empty())
        return;
    std::vector<int> stack{0};
    while (!stack.empty())
    {
        const Node& nd = nodes_[stack.back()];
        stack.pop_back();
        if (box_sq(nd, q) >= r2)
            continue;
        if (nd.left < 0)
        {
            for (int i = nd.lo; i < nd.hi; ++i)
            {
                std::size_t j = idx_[i];
                if (sq_dist(pts_->col(j), q) < r2)
                    f(j);
            }
            continue;
        }
        stack.push_back(nd.left);
        stack.push_back(nd.right);
    }
}

}  // namespace tstlab
