#pragma once

#include "tstlab/geometry.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tstlab {

struct NetHierarchy
{
    std::shared_ptr<const PointCloud> cloud;
    double rho = 0.5;
    double scale0 = 1;
    //! levels[k]: cloud indices of X_k; each level starts with X_{k-1}.
    std::vector<std::vector<std::size_t>> levels;
    bool saturated = false;

    double radius(int k) const;
    int k_max() const { return static_cast<int>(levels.size()) - 1; }
};

//! Smallest rho^m (m integer) that is >= diam; 1 for diam == 0.
double round_scale(double diam, double rho);

//! Nested greedy nets. `scale0 <= 0` selects the rounded cloud diameter.
NetHierarchy build_nets(std::shared_ptr<const PointCloud> cloud, double rho,
                        int k_max, double scale0 = 0);

struct Cube
{
    int id = -1;
    int level = 0;
    std::size_t center = 0;  //!< cloud index of x_Q
    int parent = -1;
    std::vector<int> children;
    std::vector<std::size_t> members;  //!< sorted cloud indices
};

class CubeConstructionError : public std::runtime_error
{
  public:
    CubeConstructionError(std::string clause, const std::string& what)
        : std::runtime_error(what), clause_(std::move(clause)) {}
    const std::string& clause() const { return clause_; }

  private:
    std::string clause_;
};

class CubeTree
{
  public:
    NetHierarchy nets;
    double c0 = 1.0 / 30;
    std::vector<Cube> cubes;
    std::vector<std::vector<int>> by_level;

    const PointCloud& cloud() const { return *nets.cloud; }
    int depth() const { return static_cast<int>(by_level.size()) - 1; }
    double ell(int k) const { return 5 * nets.radius(k); }
    double ell(const Cube& Q) const { return ell(Q.level); }
    Point center(const Cube& Q) const { return cloud().point(Q.center); }
    Ball ball(const Cube& Q) const { return Ball(center(Q), ell(Q)); }
    const Cube& cube(int id) const { return cubes.at(static_cast<std::size_t>(id)); }
    const std::vector<int>& roots() const { return by_level.front(); }

    //! Descendants of `id` (inclusive) down to level `max_level`, in id order.
    std::vector<int> descendants(int id, int max_level = -1) const;
    //! Cube of level k containing cloud point i.
    int cube_of(std::size_t i, int k) const;
    bool is_ancestor(int a, int b) const;

    //! Violations of nesting, inner/outer balls, cover and partition; empty
    //! when all hold.
    std::vector<std::string> check() const;
    //! point_cube[k * N + i]: id of the level-k cube containing point i.
    std::vector<int> point_cube;
};

CubeTree build_cubes(const NetHierarchy& nets, double c0 = 1.0 / 30, bool validate = true);

double dist_point_cube(const Point& x, const CubeTree& tree, const Cube& R);
double dist_cubes(const CubeTree& tree, const Cube& Q, const Cube& R);

//! inf over R in C of ell(R) + dist(x, R); +inf for empty C.
double cube_distance(const Point& x, const CubeTree& tree, const std::vector<int>& C);
double cube_distance(const Cube& Q, const CubeTree& tree, const std::vector<int>& C);

struct StoppingTimeRegion
{
    int top = -1;
    std::vector<int> members;  //!< sorted
    std::vector<int> minimal;  //!< sorted
    std::vector<std::size_t> residual;  //!< z(S)

    bool contains(int id) const;
};

StoppingTimeRegion build_stopping_time(const CubeTree& tree, int top,
                                       const std::function<bool(const Cube&)>& keep);

//! Line format: level id coords... parent member_count
void write_cubes(std::ostream& os, const CubeTree& tree);

}  // namespace tstlab
