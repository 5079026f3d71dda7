#include "tstlab/geometry.hpp"

#include "tstlab/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace tstlab {

bool ToleranceConfig::close(double a, double b) const
{
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

const ToleranceConfig& default_tolerance()
{
    static const ToleranceConfig tol;
    return tol;
}

double sq_dist(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::VectorXd>& b)
{
    double s = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
    {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

//---------------------------------------------------------------------------//

Ball::Ball(Point c, double r) : center(std::move(c)), radius(r)
{
    if (!(r > 0))
        throw InputError("ball radius must be positive");
    if (!center.allFinite())
        throw InputError("ball center must be finite");
}

bool Ball::contains(const Point& x) const
{
    return sq_dist(x, center) <= radius * radius;
}

//---------------------------------------------------------------------------//

AffinePlane::AffinePlane(Point base, const Matrix& span) : base_(std::move(base))
{
    const auto n = base_.size();
    const auto d = span.cols();
    if (span.rows() != n)
        throw InputError("plane frame dimension mismatch");
    if (d < 1 || d >= n)
        throw InputError("plane dimension must satisfy 1 <= d < n");
    frame_ = span;
    // modified Gram-Schmidt, two passes
    for (int pass = 0; pass < 2; ++pass)
    {
        for (Eigen::Index j = 0; j < d; ++j)
        {
            for (Eigen::Index i = 0; i < j; ++i)
                frame_.col(j) -= frame_.col(i).dot(frame_.col(j)) * frame_.col(i);
            double nrm = frame_.col(j).norm();
            if (!(nrm > 1e-12))
                throw InputError("plane spanning vectors are dependent");
            frame_.col(j) /= nrm;
        }
    }
}

AffinePlane AffinePlane::from_orthonormal(Point base, Matrix frame)
{
    AffinePlane P;
    P.base_ = std::move(base);
    P.frame_ = std::move(frame);
    return P;
}

AffinePlane AffinePlane::coordinate(Point base, int d)
{
    const auto n = base.size();
    Matrix F = Matrix::Zero(n, d);
    for (int i = 0; i < d; ++i)
        F(i, i) = 1;
    return AffinePlane(std::move(base), F);
}

Point AffinePlane::project(const Point& x) const
{
    if (x.size() != base_.size())
        throw InputError("dimension mismatch between point and plane");
    return base_ + frame_ * (frame_.transpose() * (x - base_));
}

Eigen::VectorXd AffinePlane::coords(const Point& x) const
{
    return frame_.transpose() * (x - base_);
}

double AffinePlane::dist_sq(const Point& x) const
{
    if (x.size() != base_.size())
        throw InputError("dimension mismatch between point and plane");
    Eigen::VectorXd v = x - base_;
    Eigen::VectorXd t = frame_.transpose() * v;
    return std::max(0.0, (v - frame_ * t).squaredNorm());
}

double AffinePlane::dist(const Point& x) const
{
    return std::sqrt(dist_sq(x));
}

AffinePlane AffinePlane::through(const Point& x) const
{
    return from_orthonormal(x, frame_);
}

Matrix AffinePlane::normal_basis() const
{
    const auto n = base_.size();
    const auto d = frame_.cols();
    Eigen::HouseholderQR<Matrix> qr(frame_);
    Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    return Q.rightCols(n - d);
}

double dist_point_plane(const Point& x, const AffinePlane& P)
{
    return P.dist(x);
}

Point project_onto_plane(const Point& x, const AffinePlane& P)
{
    return P.project(x);
}

//---------------------------------------------------------------------------//

PointCloud::PointCloud(Matrix pts, double resolution) : pts_(std::move(pts))
{
    if (!pts_.allFinite())
        throw InputError("point cloud has non-finite coordinates");
    resolution_ = resolution >= 0 ? resolution : estimate_resolution(pts_);
}

PointCloud::PointCloud(int n, const std::vector<Point>& pts, double resolution)
{
    Matrix m(n, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        if (pts[i].size() != n)
            throw InputError("point dimension mismatch");
        m.col(static_cast<Eigen::Index>(i)) = pts[i];
    }
    *this = PointCloud(std::move(m), resolution);
}

std::vector<std::size_t> PointCloud::indices_in(const Ball& B) const
{
    if (B.center.size() != pts_.rows())
        throw InputError("dimension mismatch between ball and cloud");
    std::vector<std::size_t> out;
    const double r2 = B.radius * B.radius;
    for (Eigen::Index i = 0; i < pts_.cols(); ++i)
        if (sq_dist(pts_.col(i), B.center) <= r2)
            out.push_back(static_cast<std::size_t>(i));
    return out;
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& idx) const
{
    Matrix m(pts_.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        m.col(static_cast<Eigen::Index>(i)) = pts_.col(static_cast<Eigen::Index>(idx[i]));
    PointCloud out;
    out.pts_ = std::move(m);
    out.resolution_ = resolution_;
    return out;
}

PointCloud PointCloud::restrict_to(const Ball& B) const
{
    return subset(indices_in(B));
}

double PointCloud::diameter() const
{
    double best = 0;
    for (Eigen::Index i = 0; i < pts_.cols(); ++i)
        for (Eigen::Index j = i + 1; j < pts_.cols(); ++j)
            best = std::max(best, sq_dist(pts_.col(i), pts_.col(j)));
    return std::sqrt(best);
}

double estimate_resolution(const Matrix& pts)
{
    if (pts.cols() < 2)
        return 0;
    KdTree tree(pts);
    std::vector<double> nn(static_cast<std::size_t>(pts.cols()));
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
    {
        double s;
        tree.nearest(pts.col(i), &s, static_cast<std::size_t>(i));
        nn[static_cast<std::size_t>(i)] = std::sqrt(s);
    }
    auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
    std::nth_element(nn.begin(), mid, nn.end());
    return *mid;
}

//---------------------------------------------------------------------------//

std::vector<Point> plane_grid(const AffinePlane& P, const Ball& B, double pitch)
{
    std::vector<Point> out;
    Point c = P.project(B.center);
    double rho2 = B.radius * B.radius - sq_dist(c, B.center);
    if (rho2 < 0)
        return out;
    const int d = P.dim();
    const double rho = std::sqrt(rho2);
    const int m = static_cast<int>(std::floor(rho / pitch));
    Eigen::VectorXd t(d);
    std::function<void(int, double)> rec = [&](int axis, double used) {
        if (axis == d)
        {
            out.push_back(c + P.frame() * t);
            return;
        }
        for (int i = -m; i <= m; ++i)
        {
            double v = i * pitch;
            double u = used + v * v;
            if (u > rho2)
                continue;
            t[axis] = v;
            rec(axis + 1, u);
        }
    };
    rec(0, 0.0);
    return out;
}

double dist_to_sampled_set(const Point& x, const PointCloud& E)
{
    double best = kInf;
    for (std::size_t i = 0; i < E.size(); ++i)
        best = std::min(best, sq_dist(E.point(i), x));
    return std::max(0.0, std::sqrt(best) - E.resolution());
}

double local_hausdorff_distance(const PointCloud& E, const PointCloud& F, const Ball& B)
{
    auto ei = E.indices_in(B);
    auto fi = F.indices_in(B);
    if (ei.empty())
        throw OneSidedUndefined(OneSidedUndefined::Side::first, "E ∩ B is empty");
    if (fi.empty())
        throw OneSidedUndefined(OneSidedUndefined::Side::second, "F ∩ B is empty");
    KdTree te(E.points()), tf(F.points());
    double s = 0;
    for (auto i : ei)
    {
        double q;
        tf.nearest(E.point(i), &q);
        s = std::max(s, q);
    }
    for (auto i : fi)
    {
        double q;
        te.nearest(F.point(i), &q);
        s = std::max(s, q);
    }
    return 2 * std::sqrt(s) / B.diameter();
}

double local_hausdorff_distance(const PointCloud& E, const AffinePlane& P,
                                const Ball& B, const HausdorffOptions& opt)
{
    if (E.ambient() != P.ambient() || B.center.size() != P.ambient())
        throw InputError("dimension mismatch");
    auto ei = E.indices_in(B);
    if (ei.empty())
        throw OneSidedUndefined(OneSidedUndefined::Side::first, "E ∩ B is empty");
    auto grid = plane_grid(P, B, opt.grid_fraction * B.radius);
    if (grid.empty())
        throw OneSidedUndefined(OneSidedUndefined::Side::second, "P ∩ B is empty");
    double s = 0;
    for (auto i : ei)
        s = std::max(s, P.dist(E.point(i)));
    KdTree te(E.points());
    for (const auto& g : grid)
    {
        double q;
        te.nearest(g, &q);
        s = std::max(s, std::sqrt(q) - E.resolution());
    }
    return 2 * s / B.diameter();
}

namespace {

// sup over P ∩ B of dist(., Q), using convexity: the sup sits on the
// boundary sphere of the disk P ∩ B.
double sup_plane_to_plane(const AffinePlane& P, const AffinePlane& Q, const Ball& B)
{
    Point c = P.project(B.center);
    double rho2 = B.radius * B.radius - sq_dist(c, B.center);
    if (rho2 < 0)
        throw OneSidedUndefined(OneSidedUndefined::Side::first, "P ∩ B is empty");
    const double rho = std::sqrt(rho2);
    const int d = P.dim();
    // residual map t -> (I - F_Q F_Q^T)(c + F_P t - b_Q) = a + M t
    Eigen::VectorXd v = c - Q.base();
    Eigen::VectorXd a = v - Q.frame() * (Q.frame().transpose() * v);
    Matrix M = P.frame() - Q.frame() * (Q.frame().transpose() * P.frame());
    auto value = [&](const Eigen::VectorXd& t) { return (a + M * t).norm(); };
    double best = a.norm();
    if (d == 1)
    {
        Eigen::VectorXd t(1);
        t[0] = rho;
        best = std::max(best, value(t));
        t[0] = -rho;
        best = std::max(best, value(t));
        return best;
    }
    if (d == 2)
    {
        const int m = 1024;
        auto at = [&](double th) {
            Eigen::VectorXd t(2);
            t << rho * std::cos(th), rho * std::sin(th);
            return value(t);
        };
        double bth = 0, bv = -1;
        for (int i = 0; i < m; ++i)
        {
            double th = 2 * std::numbers::pi * i / m;
            double v2 = at(th);
            if (v2 > bv)
            {
                bv = v2;
                bth = th;
            }
        }
        double lo = bth - 2 * std::numbers::pi / m, hi = bth + 2 * std::numbers::pi / m;
        for (int it = 0; it < 60; ++it)
        {
            double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
            if (at(m1) < at(m2))
                lo = m1;
            else
                hi = m2;
        }
        return std::max({best, bv, at(0.5 * (lo + hi))});
    }
    // d >= 3: the maximum of |a + M t| on the sphere is attained along the
    // dominant right singular directions; check them and a lattice.
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinV);
    for (Eigen::Index k = 0; k < svd.matrixV().cols(); ++k)
    {
        Eigen::VectorXd t = rho * svd.matrixV().col(k);
        best = std::max({best, value(t), value(-t)});
    }
    Eigen::VectorXd t(d);
    const int m = 6;
    std::function<void(int)> rec = [&](int axis) {
        if (axis == d)
        {
            double nt = t.norm();
            if (nt > 0)
                best = std::max(best, value(rho * t / nt));
            return;
        }
        for (int i = -m; i <= m; ++i)
        {
            t[axis] = static_cast<double>(i) / m;
            rec(axis + 1);
        }
    };
    rec(0);
    return best;
}

}  // namespace

double local_plane_distance(const AffinePlane& P1, const AffinePlane& P2, const Ball& B)
{
    if (P1.dim() != P2.dim() || P1.ambient() != P2.ambient())
        throw InputError("planes must share dimension and ambient space");
    double s = std::max(sup_plane_to_plane(P1, P2, B), sup_plane_to_plane(P2, P1, B));
    return 2 * s / B.diameter();
}

double plane_angle(const AffinePlane& P, const AffinePlane& Q)
{
    if (P.dim() != Q.dim() || P.ambient() != Q.ambient())
        throw InputError("planes must share dimension and ambient space");
    Matrix M1 = P.frame() - Q.frame() * (Q.frame().transpose() * P.frame());
    Matrix M2 = Q.frame() - P.frame() * (P.frame().transpose() * Q.frame());
    Eigen::JacobiSVD<Matrix> s1(M1), s2(M2);
    return std::max(s1.singularValues()[0], s2.singularValues()[0]);
}

}  // namespace tstlab
