#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tstlab {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class InputError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

struct ToleranceConfig
{
    double abs = 1e-9;
    double rel = 1e-7;

    bool close(double a, double b) const;
};

const ToleranceConfig& default_tolerance();

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed ball.
struct Ball
{
    Point center;
    double radius = 1.0;

    Ball() = default;
    Ball(Point c, double r);

    Ball scaled(double lambda) const { return Ball(center, lambda * radius); }
    bool contains(const Point& x) const;
    double diameter() const { return 2 * radius; }
};

//! Affine d-plane stored as a base point and an orthonormal frame (n x d).
class AffinePlane
{
  public:
    AffinePlane() = default;
    //! Orthonormalizes the columns of `span`; throws if they are dependent.
    AffinePlane(Point base, const Matrix& span);

    static AffinePlane from_orthonormal(Point base, Matrix frame);
    //! Coordinate plane through `base` spanned by e_0..e_{d-1}.
    static AffinePlane coordinate(Point base, int d);

    int dim() const { return static_cast<int>(frame_.cols()); }
    int ambient() const { return static_cast<int>(base_.size()); }
    const Point& base() const { return base_; }
    const Matrix& frame() const { return frame_; }

    Point project(const Point& x) const;
    //! Frame coordinates of the projection relative to base.
    Eigen::VectorXd coords(const Point& x) const;
    Point at(const Eigen::VectorXd& t) const { return base_ + frame_ * t; }
    double dist(const Point& x) const;
    double dist_sq(const Point& x) const;

    AffinePlane through(const Point& x) const;
    //! Orthonormal basis (n x (n-d)) of the orthogonal complement.
    Matrix normal_basis() const;

  private:
    Point base_;
    Matrix frame_;
};

double dist_point_plane(const Point& x, const AffinePlane& P);
Point project_onto_plane(const Point& x, const AffinePlane& P);

//! Finite sample of a set, one point per column.
class PointCloud
{
  public:
    PointCloud() = default;
    explicit PointCloud(Matrix pts, double resolution = -1);
    PointCloud(int n, const std::vector<Point>& pts, double resolution = -1);

    int ambient() const { return static_cast<int>(pts_.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(pts_.cols()); }
    bool empty() const { return pts_.cols() == 0; }
    auto point(std::size_t i) const { return pts_.col(static_cast<Eigen::Index>(i)); }
    const Matrix& points() const { return pts_; }

    //! Sampling pitch of the underlying set; zero for a single point.
    double resolution() const { return resolution_; }
    void set_resolution(double h) { resolution_ = h; }

    std::vector<std::size_t> indices_in(const Ball& B) const;
    PointCloud subset(const std::vector<std::size_t>& idx) const;
    PointCloud restrict_to(const Ball& B) const;
    double diameter() const;

  private:
    Matrix pts_;
    double resolution_ = 0;
};

//! Median nearest-neighbour distance, 0 for fewer than two points.
double estimate_resolution(const Matrix& pts);

double sq_dist(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::VectorXd>& b);

//! Lattice of P ∩ B with pitch `pitch`, in ambient coordinates.
std::vector<Point> plane_grid(const AffinePlane& P, const Ball& B, double pitch);

struct OneSidedUndefined : public std::runtime_error
{
    enum class Side { first, second };
    Side side;
    OneSidedUndefined(Side s, const std::string& what)
        : std::runtime_error(what), side(s) {}
};

struct HausdorffOptions
{
    //! Grid pitch for plane sides as a fraction of r_B.
    double grid_fraction = 1.0 / 64;
};

//! Distance from x to a cloud, reduced by the cloud resolution.
double dist_to_sampled_set(const Point& x, const PointCloud& E);

double local_hausdorff_distance(const PointCloud& E, const PointCloud& F,
                                const Ball& B);
double local_hausdorff_distance(const PointCloud& E, const AffinePlane& P,
                                const Ball& B, const HausdorffOptions& opt = {});
//! d_{x,r}(P1, P2) for two planes: both sides evaluated on plane grids.
double local_plane_distance(const AffinePlane& P1, const AffinePlane& P2,
                            const Ball& B);

//! d_{B(0,1)} between the linear parts, i.e. sine of the largest principal
//! angle.
double plane_angle(const AffinePlane& P, const AffinePlane& Q);

}  // namespace tstlab
